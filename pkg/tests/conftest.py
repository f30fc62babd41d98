import sys
from pathlib import Path

import pytest

# make tests.oracles importable when pytest is run from the repo root
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))


@pytest.fixture(scope="session")
def epic_model():
    """Compiled EPIC-style range model, shared read-only across tests."""
    from sgml.build import build_range_model
    from sgml.fixtures import epic_files
    from sgml.parsing import source_from_bytes

    files = epic_files()
    sources = [source_from_bytes(d, n) for n, d in files.items()
               if not n.endswith(".json")]
    result = build_range_model(sources)
    assert result.ok, result.violations
    return result.model

from sgml.model import (  # noqa: E402
    Branch,
    BranchKind,
    Bus,
    Load,
    Source,
    SourceKind,
    SubstationModel,
    SwitchDevice,
    SwitchKind,
    SwitchState,
    VoltageLevel,
    normalize_substation,
)


def make_bus(bid, kv=11.0, vl="VL1"):
    return Bus(bid, vl, kv)


def line(bid, a, b, r=0.01, x=0.1, rating=400.0):
    return Branch(bid, a, b, BranchKind.LINE, r, x, rating)


def breaker(bid, a, b, state=SwitchState.CLOSED):
    return SwitchDevice(bid, a, b, SwitchKind.CBR, state)


def slack(bid, bus, v=1.0):
    return Source(bid, bus, SourceKind.GRID_SLACK, 0.0, v)


def generator(bid, bus, p, v=1.0):
    return Source(bid, bus, SourceKind.GENERATOR, p, v)


def load(bid, bus, p, q=0.0):
    return Load(bid, bus, p, q)


def small_model(buses, branches=(), switches=(), loads=(), sources=(), kv=11.0, name="S1"):
    """Assemble a one-voltage-level test model from element lists."""
    return normalize_substation(SubstationModel(
        name=name,
        voltage_levels=(VoltageLevel("VL1", kv),),
        buses=tuple(make_bus(b, kv) for b in buses),
        branches=tuple(branches),
        switches=tuple(switches),
        loads=tuple(loads),
        sources=tuple(sources),
    ))


def mini_cyber(host_specs):
    """Cyber model for host (name, role) pairs; "Sub/host" names get one
    subnetwork per substation plus a WAN switch when there are several."""
    from sgml.model import CyberModel, Host, HostRole, Link, SubNetwork, SwitchNode

    prefixes = []
    for name, _ in host_specs:
        prefix = name.split("/", 1)[0] if "/" in name else "S1"
        if prefix not in prefixes:
            prefixes.append(prefix)
    prefixes.sort()
    subnet_of = {p: f"{p}/NET" for p in prefixes}
    subnetworks = tuple(SubNetwork(subnet_of[p], p) for p in prefixes)
    switches = [SwitchNode(f"{subnet_of[p]}-SW", subnet_of[p]) for p in prefixes]
    hosts = []
    links = []
    for i, (name, role) in enumerate(host_specs):
        prefix = name.split("/", 1)[0] if "/" in name else "S1"
        subnet = subnet_of[prefix]
        idx = prefixes.index(prefix) + 1
        hosts.append(Host(name, HostRole(role), f"10.0.{idx}.{11 + i}",
                          f"00-00-00-{idx:02X}-00-{11 + i:02X}", subnet))
        links.append(Link(name, f"{subnet}-SW", 0))
    if len(prefixes) >= 2:
        switches.append(SwitchNode("WAN-SW", ""))
        for p in prefixes:
            links.append(Link(f"{subnet_of[p]}-SW", "WAN-SW", 0))
    return CyberModel(subnetworks=subnetworks, hosts=tuple(hosts),
                      switches=tuple(switches), links=tuple(links))


def mini_range(substation, ieds=(), plcs=(), scada=None, timeline=None,
               extra_hosts=(), tick_ms=100):
    """Full RangeModel for kernel tests; hosts derived from the spec names."""
    from sgml.model import RangeModel, ScadaSpec, ScenarioTimeline

    host_specs = [(i.name, "ied") for i in ieds] + [(p.name, "plc") for p in plcs]
    host_specs += list(extra_hosts)
    return RangeModel(
        substation=substation,
        cyber=mini_cyber(host_specs),
        ieds=tuple(ieds),
        plcs=tuple(plcs),
        scada=scada or ScadaSpec(),
        timeline=timeline or ScenarioTimeline(),
        tick_ms=tick_ms,
    )
