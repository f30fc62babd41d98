"""Parsers for the SCL-family documents: SSD, SCD, ICD and SED.

Only the slice of SCL this pipeline consumes is interpreted; unknown
elements and equipment types are ignored with a warning. The exact subset
(element names, attributes, units) is documented in docs/schema-reference.md.

Electrical parameters ride on ConductingEquipment attributes in physical
units (ohms, MW, MVAr) and are converted to per-unit on SYSTEM_BASE_MVA
using the from-side voltage level as the impedance base.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

from sgml.model import (
    Branch,
    BranchKind,
    Bus,
    CyberModel,
    Host,
    HostRole,
    IedSpec,
    KNOWN_LN_CLASSES,
    Link,
    Load,
    NAME_SEP,
    SYSTEM_BASE_MVA,
    SedLink,
    Source,
    SourceKind,
    SubNetwork,
    SubstationModel,
    SwitchDevice,
    SwitchKind,
    SwitchNode,
    SwitchState,
    VoltageLevel,
    normalize_cyber,
    normalize_substation,
)
from sgml.parsing.source import (
    DiagnosticSink,
    FileKind,
    SourceFile,
    XmlDocument,
    local_name,
    parse_xml,
)

# equipment type -> handler category
_SWITCH_TYPES = {"CBR": SwitchKind.CBR, "DIS": SwitchKind.DIS}
_BRANCH_TYPES = {"LIN": BranchKind.LINE, "PTR": BranchKind.TRANSFORMER}
_SOURCE_TYPES = {
    "IFL": SourceKind.GRID_SLACK,
    "GEN": SourceKind.GENERATOR,
    "PV": SourceKind.PV,
    "BAT": SourceKind.BATTERY,
}
_LOAD_TYPES = {"LOD"}

#: Infrastructure logical nodes that are expected but carry no capability.
_SILENT_LN_CLASSES = {"LLN0", "LPHD"}

ACCESS_SWITCH_SUFFIX = "-SW"
WAN_SWITCH_NAME = "WAN-SW"


def _expect_kind(file: SourceFile, kind: FileKind) -> None:
    if file.kind != kind:
        raise ValueError(f"{file.path}: expected a {kind.value} file, found {file.kind.value}")


def _float_attr(doc: XmlDocument, sink: DiagnosticSink, elem: ET.Element,
                name: str, default: float | None = None) -> float | None:
    raw = elem.get(name)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        sink.error_at(doc, elem, f"attribute {name}={raw!r} is not a number")
        return default


def access_switch_name(subnetwork_name: str) -> str:
    return subnetwork_name + ACCESS_SWITCH_SUFFIX


# --------------------------------------------------------------------------
# SSD
# --------------------------------------------------------------------------

def _parse_one_substation(doc: XmlDocument, sink: DiagnosticSink, sub_elem: ET.Element,
                          prefix: str) -> dict:
    """Collect the raw pieces of one Substation section, ids prefixed."""
    vls: list[VoltageLevel] = []
    buses: list[Bus] = []
    branches: list[Branch] = []
    switches: list[SwitchDevice] = []
    loads: list[Load] = []
    sources: list[Source] = []
    bus_kv: dict[str, float] = {}

    for vl_elem in doc.children(sub_elem, "VoltageLevel"):
        vl_name = vl_elem.get("name", "")
        if NAME_SEP in vl_name:
            sink.error_at(doc, vl_elem, f"name {vl_name!r} contains forbidden character {NAME_SEP!r}")
        kv = _float_attr(doc, sink, vl_elem, "nominal_kv")
        voltage_child = doc.find(vl_elem, "Voltage")
        if kv is None and voltage_child is not None and voltage_child.text:
            try:
                kv = float(voltage_child.text.strip())
                if voltage_child.get("multiplier", "k") != "k":
                    sink.warning_at(doc, voltage_child, "only kilovolt voltages are interpreted")
            except ValueError:
                sink.error_at(doc, voltage_child, "Voltage text is not a number")
        if kv is None:
            sink.error_at(doc, vl_elem, f"voltage level {vl_name!r} has no nominal voltage")
            kv = 0.0
        vls.append(VoltageLevel(prefix + vl_name, kv))

        for bay in doc.children(vl_elem, "Bay"):
            for cn in doc.children(bay, "ConnectivityNode"):
                cn_name = cn.get("name", "")
                if not cn_name:
                    sink.error_at(doc, cn, "ConnectivityNode without a name")
                    continue
                if NAME_SEP in cn_name:
                    sink.error_at(doc, cn, f"name {cn_name!r} contains forbidden character {NAME_SEP!r}")
                bus_id = prefix + cn_name
                if bus_id in bus_kv:
                    sink.error_at(doc, cn, f"duplicate connectivity node {cn_name!r}")
                    continue
                bus_kv[bus_id] = kv
                buses.append(Bus(bus_id, prefix + vl_name, kv))

    # second pass: equipment (terminals may reference nodes in any bay)
    for vl_elem in doc.children(sub_elem, "VoltageLevel"):
        for bay in doc.children(vl_elem, "Bay"):
            for eq in doc.children(bay, "ConductingEquipment"):
                _parse_equipment(doc, sink, eq, prefix, bus_kv,
                                 branches, switches, loads, sources)

    return {
        "voltage_levels": vls, "buses": buses, "branches": branches,
        "switches": switches, "loads": loads, "sources": sources,
    }


def _equipment_terminals(doc: XmlDocument, sink: DiagnosticSink, eq: ET.Element,
                         prefix: str, bus_kv: dict[str, float], required: int) -> list[str] | None:
    terms = doc.children(eq, "Terminal")
    name = eq.get("name", "?")
    if len(terms) != required:
        sink.error_at(doc, eq, f"equipment {name!r} has {len(terms)} terminals, needs {required}")
        return None
    nodes = []
    for t in terms:
        node = t.get("connectivityNode") or t.get("cNodeName") or ""
        node_id = node if NAME_SEP in node else prefix + node
        if node_id not in bus_kv:
            sink.error_at(doc, t, f"terminal of {name!r} references missing connectivity node {node!r}")
            return None
        nodes.append(node_id)
    return nodes


def _parse_equipment(doc: XmlDocument, sink: DiagnosticSink, eq: ET.Element, prefix: str,
                     bus_kv: dict[str, float], branches: list, switches: list,
                     loads: list, sources: list) -> None:
    eq_type = eq.get("type", "")
    name = eq.get("name", "")
    if not name:
        sink.error_at(doc, eq, "ConductingEquipment without a name")
        return
    if NAME_SEP in name:
        sink.error_at(doc, eq, f"name {name!r} contains forbidden character {NAME_SEP!r}")
        return
    eid = prefix + name

    if eq_type in _SWITCH_TYPES:
        nodes = _equipment_terminals(doc, sink, eq, prefix, bus_kv, 2)
        if nodes is None:
            return
        state = SwitchState(eq.get("state", "closed"))
        switches.append(SwitchDevice(eid, nodes[0], nodes[1], _SWITCH_TYPES[eq_type], state))
    elif eq_type in _BRANCH_TYPES:
        nodes = _equipment_terminals(doc, sink, eq, prefix, bus_kv, 2)
        if nodes is None:
            return
        rating = _float_attr(doc, sink, eq, "rating_a", 400.0)
        # per-unit attributes (canonical form) win over physical ohms
        r_pu = _float_attr(doc, sink, eq, "r_pu")
        x_pu = _float_attr(doc, sink, eq, "x_pu")
        if r_pu is None or x_pu is None:
            kv = bus_kv[nodes[0]]
            if kv <= 0:
                sink.error_at(doc, eq, f"equipment {name!r} sits on a voltage level without a usable base")
                return
            z_base = kv * kv / SYSTEM_BASE_MVA
            if r_pu is None:
                r_pu = _float_attr(doc, sink, eq, "r_ohm", 0.0) / z_base
            if x_pu is None:
                x_pu = _float_attr(doc, sink, eq, "x_ohm", 0.0) / z_base
        branches.append(Branch(eid, nodes[0], nodes[1], _BRANCH_TYPES[eq_type],
                               r_pu, x_pu, rating))
    elif eq_type in _LOAD_TYPES:
        nodes = _equipment_terminals(doc, sink, eq, prefix, bus_kv, 1)
        if nodes is None:
            return
        loads.append(Load(eid, nodes[0],
                          _float_attr(doc, sink, eq, "p_mw", 0.0),
                          _float_attr(doc, sink, eq, "q_mvar", 0.0)))
    elif eq_type in _SOURCE_TYPES:
        nodes = _equipment_terminals(doc, sink, eq, prefix, bus_kv, 1)
        if nodes is None:
            return
        sources.append(Source(eid, nodes[0], _SOURCE_TYPES[eq_type],
                              _float_attr(doc, sink, eq, "p_mw", 0.0),
                              _float_attr(doc, sink, eq, "v_setpoint_pu", 1.0)))
    else:
        sink.warning_at(doc, eq, f"equipment type {eq_type!r} is not interpreted; {name!r} ignored")


def parse_ssd(file: SourceFile) -> tuple[SubstationModel, list]:
    """Parse an SSD (or consolidated SSD) into a SubstationModel.

    Returns the model and the diagnostics collected along the way.
    A document with multiple Substation sections, or one flagged
    consolidated="true", yields prefixed element ids and an empty name.
    """
    _expect_kind(file, FileKind.SSD)
    doc = parse_xml(file.data, file.path)
    sink = DiagnosticSink(file.path)

    sub_elems = doc.children(doc.root, "Substation")
    consolidated = doc.root.get("consolidated") == "true" or len(sub_elems) > 1
    parts: list[dict] = []
    names: list[str] = []
    for sub_elem in sub_elems:
        sub_name = sub_elem.get("name", "")
        if not sub_name:
            sink.error_at(doc, sub_elem, "Substation without a name")
            continue
        if sub_name in names:
            sink.error_at(doc, sub_elem, f"duplicate substation {sub_name!r}")
            continue
        names.append(sub_name)
        prefix = sub_name + NAME_SEP if consolidated else ""
        parts.append(_parse_one_substation(doc, sink, sub_elem, prefix))

    merged: dict[str, list] = {k: [] for k in
                               ("voltage_levels", "buses", "branches", "switches", "loads", "sources")}
    for part in parts:
        for k in merged:
            merged[k].extend(part[k])

    inter = doc.find(doc.root, "Interconnection")
    if inter is not None:
        bus_ids = {b.id for b in merged["buses"]}
        for tie in doc.children(inter, "TieLine"):
            tie_name = tie.get("name", "")
            fb, tb = tie.get("fromBus", ""), tie.get("toBus", "")
            if fb not in bus_ids or tb not in bus_ids:
                sink.error_at(doc, tie, f"tie line {tie_name!r} references a missing bus")
                continue
            merged["branches"].append(Branch(
                tie_name, fb, tb, BranchKind.TIE_LINE,
                _float_attr(doc, sink, tie, "r_pu", 0.01),
                _float_attr(doc, sink, tie, "x_pu", 0.05),
                _float_attr(doc, sink, tie, "rating_a", 400.0)))

    sink.raise_if_errors()
    name = "" if consolidated else (names[0] if names else "")
    model = normalize_substation(SubstationModel(
        name=name,
        voltage_levels=tuple(merged["voltage_levels"]),
        buses=tuple(merged["buses"]),
        branches=tuple(merged["branches"]),
        switches=tuple(merged["switches"]),
        loads=tuple(merged["loads"]),
        sources=tuple(merged["sources"]),
    ))
    return model, sink.items


# --------------------------------------------------------------------------
# SCD
# --------------------------------------------------------------------------

_ROLE_BY_TYPE = {
    "IED": HostRole.IED,
    "PLC": HostRole.PLC,
    "SCADA": HostRole.SCADA,
    "ATTACKER": HostRole.ATTACKER_SLOT,
}


def parse_scd(file: SourceFile) -> tuple[CyberModel, list]:
    """Parse an SCD (or consolidated SCD) into a CyberModel.

    One host per ConnectedAP with IP/MAC from its Address block; one access
    switch is synthesized per SubNetwork with zero-latency host links.
    """
    _expect_kind(file, FileKind.SCD)
    doc = parse_xml(file.data, file.path)
    sink = DiagnosticSink(file.path)

    sub_stubs = [e.get("name", "") for e in doc.children(doc.root, "Substation")]
    default_substation = sub_stubs[0] if len(sub_stubs) == 1 else ""

    consolidated = doc.root.get("consolidated") == "true"
    ied_types: dict[str, str] = {}
    for ied in doc.children(doc.root, "IED"):
        ied_name = ied.get("name", "")
        if not ied_name:
            sink.error_at(doc, ied, "IED without a name")
            continue
        if not consolidated and NAME_SEP in ied_name:
            sink.error_at(doc, ied, f"name {ied_name!r} contains forbidden character {NAME_SEP!r}")
            continue
        ied_types[ied_name] = ied.get("type", "IED").upper()

    comm = doc.find(doc.root, "Communication")
    subnetworks: list[SubNetwork] = []
    hosts: list[Host] = []
    switches: list[SwitchNode] = []
    links: list[Link] = []
    seen_ips: dict[str, ET.Element] = {}
    seen_macs: dict[str, ET.Element] = {}

    if comm is None:
        sink.error(1, 1, "SCD has no Communication section")
        sink.raise_if_errors()

    for sn_elem in doc.children(comm, "SubNetwork"):
        sn_name = sn_elem.get("name", "")
        if not sn_name:
            sink.error_at(doc, sn_elem, "SubNetwork without a name")
            continue
        if sn_elem.get("type", "").upper() == "WAN" or sn_name == "WAN":
            switches.append(SwitchNode(WAN_SWITCH_NAME, ""))
            continue
        substation = sn_elem.get("substation", default_substation)
        subnetworks.append(SubNetwork(sn_name, substation))
        sw_name = access_switch_name(sn_name)
        switches.append(SwitchNode(sw_name, sn_name))

        for ap in doc.children(sn_elem, "ConnectedAP"):
            ied_name = ap.get("iedName", "")
            if ied_name not in ied_types:
                sink.error_at(doc, ap, f"ConnectedAP names unknown IED {ied_name!r}")
                continue
            addr = doc.find(ap, "Address")
            ip = mac = ""
            if addr is not None:
                for p in doc.children(addr, "P"):
                    p_type = (p.get("type") or "").upper()
                    if p_type == "IP":
                        ip = (p.text or "").strip()
                    elif p_type in ("MAC-ADDRESS", "MAC"):
                        mac = (p.text or "").strip()
            if not ip or not mac:
                sink.error_at(doc, ap, f"ConnectedAP for {ied_name!r} lacks an IP or MAC address")
                continue
            if ip in seen_ips:
                sink.error_at(doc, ap, f"IP address {ip} already assigned")
                continue
            if mac.lower() in seen_macs:
                sink.error_at(doc, ap, f"MAC address {mac} already assigned")
                continue
            seen_ips[ip] = ap
            seen_macs[mac.lower()] = ap
            role = _ROLE_BY_TYPE.get(ied_types[ied_name], HostRole.IED)
            hosts.append(Host(ied_name, role, ip, mac, sn_name))
            links.append(Link(ied_name, sw_name, 0))

    # explicit Link elements add or override connectivity
    for ln in doc.children(comm, "Link"):
        a, b = ln.get("a", ""), ln.get("b", "")
        latency = int(ln.get("latency", "0"))
        override = next((i for i, x in enumerate(links)
                         if {x.endpoint_a, x.endpoint_b} == {a, b}), None)
        if override is not None:
            links[override] = Link(links[override].endpoint_a, links[override].endpoint_b, latency)
        else:
            links.append(Link(a, b, latency))

    # WAN uplinks: every access switch links to the WAN switch when present
    wan = next((s for s in switches if s.subnetwork == ""), None)
    if wan is not None:
        for sw in switches:
            if sw.subnetwork:
                links.append(Link(sw.name, wan.name, 0))

    sink.raise_if_errors()
    model = normalize_cyber(CyberModel(
        tuple(subnetworks), tuple(hosts), tuple(switches), tuple(links)))
    return model, sink.items


# --------------------------------------------------------------------------
# ICD
# --------------------------------------------------------------------------

def parse_icd(file: SourceFile) -> tuple[IedSpec, list]:
    """Parse an ICD into a capabilities-only IedSpec.

    Thresholds and bindings stay empty; the IED Config overlay supplies them.
    """
    _expect_kind(file, FileKind.ICD)
    doc = parse_xml(file.data, file.path)
    sink = DiagnosticSink(file.path)

    ied_elem = doc.find(doc.root, "IED")
    if ied_elem is None:
        sink.error(1, 1, "ICD has no IED element")
        sink.raise_if_errors()
    name = ied_elem.get("name", "")
    if not name:
        sink.error_at(doc, ied_elem, "IED without a name")

    found: set[str] = set()
    for ln in doc.iter_named("LN"):
        ln_class = ln.get("lnClass", "")
        if ln_class in KNOWN_LN_CLASSES:
            found.add(ln_class)
        elif ln_class in _SILENT_LN_CLASSES or local_name(ln.tag) == "LN0":
            continue
        else:
            sink.warning_at(doc, ln, f"logical node class {ln_class!r} is not supported; ignored")
    if not found:
        sink.error(1, 1, f"ICD for {name!r} declares no supported logical nodes")

    sink.raise_if_errors()
    return IedSpec(name=name, logical_nodes=frozenset(found)), sink.items


# --------------------------------------------------------------------------
# SED
# --------------------------------------------------------------------------

def parse_sed(file: SourceFile) -> tuple[SedLink, list]:
    """Parse an SED describing one tie between a pair of substations."""
    _expect_kind(file, FileKind.SED)
    doc = parse_xml(file.data, file.path)
    sink = DiagnosticSink(file.path)

    ex = doc.find(doc.root, "SubstationExchange")
    if ex is None:
        sink.error(1, 1, "SED has no SubstationExchange element")
        sink.raise_if_errors()
    from_sub = ex.get("from", "")
    to_sub = ex.get("to", "")
    if not from_sub or not to_sub:
        sink.error_at(doc, ex, "SubstationExchange requires from and to substations")
    if from_sub and from_sub == to_sub:
        sink.error_at(doc, ex, f"SED links substation {from_sub!r} to itself")

    ties = doc.children(ex, "TieLine")
    if len(ties) != 1:
        sink.error_at(doc, ex, f"SED must describe exactly one TieLine, found {len(ties)}")
        sink.raise_if_errors()
    tie = ties[0]
    from_bus = tie.get("fromBus", "")
    to_bus = tie.get("toBus", "")
    if not from_bus or not to_bus:
        sink.error_at(doc, tie, "TieLine requires fromBus and toBus")
    if NAME_SEP not in from_bus:
        from_bus = from_sub + NAME_SEP + from_bus
    if NAME_SEP not in to_bus:
        to_bus = to_sub + NAME_SEP + to_bus

    comm = doc.find(ex, "CommLink")
    latency = int(comm.get("latency", "0")) if comm is not None else 0

    sink.raise_if_errors()
    link = SedLink(
        from_substation=from_sub, to_substation=to_sub,
        from_bus=from_bus, to_bus=to_bus,
        r_pu=_float_attr(doc, sink, tie, "r_pu", 0.01),
        x_pu=_float_attr(doc, sink, tie, "x_pu", 0.05),
        rating_a=_float_attr(doc, sink, tie, "rating_a", 400.0),
        comm_latency_ticks=latency,
    )
    return link, sink.items
