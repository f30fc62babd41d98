"""Consolidation of per-substation models into one multi-substation model.

Every element id gets a "Substation/" prefix, one tie branch is added per
inter-substation link, and exactly one grid slack survives: the one owned
by the lexicographically smallest substation name that has one. Using the
name rather than the plan position keeps the merge permutation-invariant.
The cyber side gains a single WAN switch linked to every access switch.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from sgml.model import (
    Branch,
    BranchKind,
    CyberModel,
    Host,
    Link,
    Load,
    NAME_SEP,
    SedLink,
    Source,
    SourceKind,
    SubNetwork,
    SubstationModel,
    SwitchDevice,
    SwitchNode,
    VoltageLevel,
    normalize_cyber,
    normalize_substation,
)
from sgml.parsing.scl import WAN_SWITCH_NAME


class MergeError(ValueError):
    pass


@dataclass(frozen=True)
class MergePlan:
    substations: tuple[tuple[SubstationModel, CyberModel], ...]
    sed_links: tuple[SedLink, ...] = ()

    def substation_names(self) -> list[str]:
        return [sub.name for sub, _ in self.substations]


def _check_plan(plan: MergePlan) -> None:
    names = plan.substation_names()
    if any(not n for n in names):
        raise MergeError("plan contains a substation without a name (already consolidated?)")
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise MergeError(f"duplicate substation names in plan: {', '.join(dupes)}")
    for sed in plan.sed_links:
        for sub in (sed.from_substation, sed.to_substation):
            if sub not in names:
                raise MergeError(f"SED references unknown substation {sub!r}")
    if len(names) >= 2:
        # inter-substation graph must be connected
        adj: dict[str, set[str]] = {n: set() for n in names}
        for sed in plan.sed_links:
            adj[sed.from_substation].add(sed.to_substation)
            adj[sed.to_substation].add(sed.from_substation)
        start = names[0]
        seen = {start}
        stack = [start]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        missing = sorted(set(names) - seen)
        if missing:
            raise MergeError(
                "SED links do not connect all substations; unreachable: " + ", ".join(missing))


def _prefixed_substation(sub: SubstationModel) -> SubstationModel:
    p = sub.name + NAME_SEP

    def pf(eid: str) -> str:
        return eid if eid.startswith(p) else p + eid

    return SubstationModel(
        name="",
        voltage_levels=tuple(VoltageLevel(pf(v.name), v.nominal_kv) for v in sub.voltage_levels),
        buses=tuple(replace(b, id=pf(b.id), voltage_level=pf(b.voltage_level)) for b in sub.buses),
        branches=tuple(replace(b, id=pf(b.id), from_bus=pf(b.from_bus), to_bus=pf(b.to_bus))
                       for b in sub.branches),
        switches=tuple(replace(s, id=pf(s.id), from_bus=pf(s.from_bus), to_bus=pf(s.to_bus))
                       for s in sub.switches),
        loads=tuple(replace(l, id=pf(l.id), bus=pf(l.bus)) for l in sub.loads),
        sources=tuple(replace(s, id=pf(s.id), bus=pf(s.bus)) for s in sub.sources),
    )


def merge_ssd(plan: MergePlan) -> SubstationModel:
    """Combine the plan's substation models into one consolidated model."""
    _check_plan(plan)
    parts = [_prefixed_substation(sub) for sub, _ in plan.substations]

    buses: list = []
    branches: list[Branch] = []
    switches: list[SwitchDevice] = []
    loads: list[Load] = []
    sources: list[Source] = []
    vls: list[VoltageLevel] = []
    for part in parts:
        vls.extend(part.voltage_levels)
        buses.extend(part.buses)
        branches.extend(part.branches)
        switches.extend(part.switches)
        loads.extend(part.loads)
        sources.extend(part.sources)

    bus_ids = {b.id for b in buses}
    sed_order = sorted(plan.sed_links,
                       key=lambda s: (s.from_substation, s.to_substation, s.from_bus, s.to_bus))
    for i, sed in enumerate(sed_order):
        for end in (sed.from_bus, sed.to_bus):
            if end not in bus_ids:
                raise MergeError(f"SED tie endpoint {end!r} does not exist")
        tie_id = f"{sed.from_substation}{NAME_SEP}TIE-{sed.to_substation}-{i}"
        branches.append(Branch(tie_id, sed.from_bus, sed.to_bus, BranchKind.TIE_LINE,
                               sed.r_pu, sed.x_pu, sed.rating_a))

    # keep one grid slack: owned by the smallest substation name holding one
    slack_subs = sorted({s.id.split(NAME_SEP, 1)[0] for s in sources
                         if s.kind == SourceKind.GRID_SLACK})
    if slack_subs:
        keeper = slack_subs[0]
        demoted = []
        for s in sources:
            if s.kind == SourceKind.GRID_SLACK and s.id.split(NAME_SEP, 1)[0] != keeper:
                demoted.append(replace(s, kind=SourceKind.GENERATOR))
            else:
                demoted.append(s)
        sources = demoted

    return normalize_substation(SubstationModel(
        name="",
        voltage_levels=tuple(vls), buses=tuple(buses), branches=tuple(branches),
        switches=tuple(switches), loads=tuple(loads), sources=tuple(sources),
    ))


def _prefixed_cyber(cyber: CyberModel, sub_name: str) -> CyberModel:
    p = sub_name + NAME_SEP

    def pf(name: str) -> str:
        return name if name.startswith(p) else p + name

    return CyberModel(
        subnetworks=tuple(SubNetwork(pf(sn.name), sub_name) for sn in cyber.subnetworks),
        hosts=tuple(Host(pf(h.name), h.role, h.ip, h.mac, pf(h.subnetwork)) for h in cyber.hosts),
        switches=tuple(SwitchNode(pf(s.name), pf(s.subnetwork)) for s in cyber.switches
                       if s.subnetwork),  # drop any stray WAN switches
        links=tuple(Link(pf(l.endpoint_a), pf(l.endpoint_b), l.latency_ticks)
                    for l in cyber.links
                    if WAN_SWITCH_NAME not in (l.endpoint_a, l.endpoint_b)),
    )


def merge_scd(plan: MergePlan) -> CyberModel:
    """Combine cyber models; with two or more substations add the WAN switch."""
    _check_plan(plan)
    parts = [_prefixed_cyber(cyber, sub.name) for sub, cyber in plan.substations]

    subnetworks: list[SubNetwork] = []
    hosts: list[Host] = []
    switches: list[SwitchNode] = []
    links: list[Link] = []
    for part in parts:
        subnetworks.extend(part.subnetworks)
        hosts.extend(part.hosts)
        switches.extend(part.switches)
        links.extend(part.links)

    by_ip: dict[str, str] = {}
    for h in sorted(hosts, key=lambda h: h.name):
        if h.ip in by_ip:
            raise MergeError(f"cross-substation IP collision: {by_ip[h.ip]} and {h.name} share {h.ip}")
        by_ip[h.ip] = h.name
    by_mac: dict[str, str] = {}
    for h in sorted(hosts, key=lambda h: h.name):
        mac = h.mac.lower()
        if mac in by_mac:
            raise MergeError(f"cross-substation MAC collision: {by_mac[mac]} and {h.name} share {h.mac}")
        by_mac[mac] = h.name

    if len(plan.substations) >= 2:
        switches.append(SwitchNode(WAN_SWITCH_NAME, ""))
        for sw in sorted(switches, key=lambda s: s.name):
            if sw.subnetwork:
                links.append(Link(sw.name, WAN_SWITCH_NAME, 0))

    return normalize_cyber(CyberModel(
        subnetworks=tuple(subnetworks), hosts=tuple(hosts),
        switches=tuple(switches), links=tuple(links),
    ))
