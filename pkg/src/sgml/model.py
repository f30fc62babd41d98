"""In-memory representation of the cyber range model.

Everything the input files describe ends up in one of the types below:
the physical single-line topology (SubstationModel), the communication
network (CyberModel), per-device capability and configuration (IedSpec,
PlcSpec, ScadaSpec), the scenario timeline, and the consolidated
RangeModel that the simulation kernel is built from.

Impedances are stored in per-unit on a single system base (SYSTEM_BASE_MVA);
parsers convert from physical units once at model build time. Switch state
lives here (physical truth); IEDs only hold bindings to it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

SYSTEM_BASE_MVA = 100.0

#: Separator inserted between substation name and local element name when
#: models are consolidated. Raw names must not contain it.
NAME_SEP = "/"


class BranchKind(enum.Enum):
    LINE = "line"
    TRANSFORMER = "transformer"
    TIE_LINE = "tie_line"


class SwitchKind(enum.Enum):
    CBR = "CBR"
    DIS = "DIS"


class SwitchState(enum.Enum):
    OPEN = "open"
    CLOSED = "closed"


class SourceKind(enum.Enum):
    GRID_SLACK = "grid_slack"
    GENERATOR = "generator"
    PV = "pv"
    BATTERY = "battery"


class HostRole(enum.Enum):
    IED = "ied"
    PLC = "plc"
    SCADA = "scada"
    ATTACKER_SLOT = "attacker_slot"


class Quantity(enum.Enum):
    """State-store quantities an element can expose."""

    V_PU = "v_pu"
    I_A = "i_a"
    P_MW = "p_mw"
    Q_MVAR = "q_mvar"
    STATE = "state"


#: Logical node classes a virtual IED can enable.
KNOWN_LN_CLASSES = frozenset(
    {"MMXU", "XCBR", "CSWI", "PTOC", "PTOV", "PTUV", "PDIF", "CILO"}
)
PROTECTION_LN_CLASSES = ("PTOC", "PTOV", "PTUV", "PDIF")


# --------------------------------------------------------------------------
# physical model
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class VoltageLevel:
    name: str
    nominal_kv: float


@dataclass(frozen=True)
class Bus:
    id: str
    voltage_level: str
    nominal_kv: float


@dataclass(frozen=True)
class Branch:
    id: str
    from_bus: str
    to_bus: str
    kind: BranchKind
    r_pu: float
    x_pu: float
    rating_a: float


@dataclass(frozen=True)
class SwitchDevice:
    id: str
    from_bus: str
    to_bus: str
    kind: SwitchKind
    state: SwitchState


@dataclass(frozen=True)
class Load:
    id: str
    bus: str
    p_mw: float
    q_mvar: float


@dataclass(frozen=True)
class Source:
    id: str
    bus: str
    kind: SourceKind
    p_mw: float
    v_setpoint_pu: float


@dataclass(frozen=True)
class SubstationModel:
    """Single-line topology of one substation, or of a consolidated model.

    In a consolidated model every element id carries a "Sub/" prefix and
    ``name`` is empty.
    """

    name: str
    voltage_levels: tuple[VoltageLevel, ...] = ()
    buses: tuple[Bus, ...] = ()
    branches: tuple[Branch, ...] = ()
    switches: tuple[SwitchDevice, ...] = ()
    loads: tuple[Load, ...] = ()
    sources: tuple[Source, ...] = ()

    def bus_ids(self) -> set[str]:
        return {b.id for b in self.buses}

    def element_ids(self) -> set[str]:
        ids = self.bus_ids()
        for group in (self.branches, self.switches, self.loads, self.sources):
            ids.update(e.id for e in group)
        return ids

    def find_bus(self, bus_id: str) -> Bus | None:
        for b in self.buses:
            if b.id == bus_id:
                return b
        return None

    def find_switch(self, switch_id: str) -> SwitchDevice | None:
        for s in self.switches:
            if s.id == switch_id:
                return s
        return None

    def with_switch_state(self, switch_id: str, state: SwitchState) -> "SubstationModel":
        switches = tuple(
            replace(s, state=state) if s.id == switch_id else s for s in self.switches
        )
        return replace(self, switches=switches)


# --------------------------------------------------------------------------
# cyber model
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SubNetwork:
    name: str
    substation: str


@dataclass(frozen=True)
class Host:
    name: str
    role: HostRole
    ip: str
    mac: str
    subnetwork: str


@dataclass(frozen=True)
class SwitchNode:
    name: str
    subnetwork: str  # "" marks the WAN switch


@dataclass(frozen=True)
class Link:
    endpoint_a: str
    endpoint_b: str
    latency_ticks: int = 0


@dataclass(frozen=True)
class CyberModel:
    subnetworks: tuple[SubNetwork, ...] = ()
    hosts: tuple[Host, ...] = ()
    switches: tuple[SwitchNode, ...] = ()
    links: tuple[Link, ...] = ()

    def find_host(self, name: str) -> Host | None:
        for h in self.hosts:
            if h.name == name:
                return h
        return None

    def host_by_ip(self, ip: str) -> Host | None:
        for h in self.hosts:
            if h.ip == ip:
                return h
        return None

    def wan_switch(self) -> SwitchNode | None:
        for s in self.switches:
            if s.subnetwork == "":
                return s
        return None


# --------------------------------------------------------------------------
# device specs
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ProtectionThresholds:
    ptoc_limit_a: float | None = None
    ptoc_delay_ticks: int = 3
    ptov_limit_pu: float | None = None
    ptuv_limit_pu: float | None = None
    pdif_limit_a: float | None = None


@dataclass(frozen=True)
class MeasurementBinding:
    """Maps an IED data-object path to a physical element quantity."""

    path: str
    element: str
    quantity: Quantity


@dataclass(frozen=True)
class ControlBinding:
    """Maps an IED control path to a physical switch."""

    path: str
    switch: str


@dataclass(frozen=True)
class CyberPhysicalMap:
    measurements: tuple[MeasurementBinding, ...] = ()
    controls: tuple[ControlBinding, ...] = ()

    def measured_element(self, quantity: Quantity) -> str | None:
        for m in self.measurements:
            if m.quantity == quantity:
                return m.element
        return None

    def trip_switch(self) -> str | None:
        return self.controls[0].switch if self.controls else None


@dataclass(frozen=True)
class InterlockGuard:
    guarded_switch: str
    guard_switch: str


@dataclass(frozen=True)
class IedSpec:
    name: str
    logical_nodes: frozenset[str] = frozenset()
    thresholds: ProtectionThresholds = ProtectionThresholds()
    bindings: CyberPhysicalMap = CyberPhysicalMap()
    interlock_guards: tuple[InterlockGuard, ...] = ()
    remote_peer: str | None = None


class StDataType(enum.Enum):
    BOOL = "BOOL"
    INT = "INT"
    REAL = "REAL"


class IoDirection(enum.Enum):
    READ = "read"
    WRITE = "write"


@dataclass(frozen=True)
class StVariable:
    name: str
    data_type: StDataType
    initial: bool | int | float | None = None


@dataclass(frozen=True)
class IoBinding:
    variable: str
    ied: str
    path: str
    direction: IoDirection


@dataclass(frozen=True)
class StLogicProgram:
    """Structured-text program: declarations plus a statement list.

    Statements are the AST node tuples produced by sgml.parsing.stlogic.
    """

    name: str
    variables: tuple[StVariable, ...] = ()
    statements: tuple = ()


@dataclass(frozen=True)
class ScadaExposure:
    variable: str
    point_path: str


@dataclass(frozen=True)
class PlcSpec:
    name: str
    program: StLogicProgram
    io_map: tuple[IoBinding, ...] = ()
    scada_points: tuple[ScadaExposure, ...] = ()


class ScadaProtocol(enum.Enum):
    MMS = "mms"
    PLC_GATEWAY = "plc_gateway"


class PointKind(enum.Enum):
    MEASUREMENT = "measurement"
    STATUS = "status"
    CONTROL = "control"


@dataclass(frozen=True)
class DataSource:
    name: str
    host: str
    protocol: ScadaProtocol


@dataclass(frozen=True)
class DataPoint:
    id: str
    source: str
    path: str
    kind: PointKind
    display_name: str
    unit: str


@dataclass(frozen=True)
class ScadaSpec:
    data_sources: tuple[DataSource, ...] = ()
    data_points: tuple[DataPoint, ...] = ()


class TimelineField(enum.Enum):
    LOAD_P = "load_p"
    LOAD_Q = "load_q"
    SWITCH_STATE = "switch_state"
    SOURCE_P = "source_p"


@dataclass(frozen=True)
class TimelineEntry:
    tick: int
    target: str
    field: TimelineField
    value: float | SwitchState


@dataclass(frozen=True)
class ScenarioTimeline:
    entries: tuple[TimelineEntry, ...] = ()


@dataclass(frozen=True)
class SedLink:
    """Electrical tie between two substations, endpoints substation-qualified."""

    from_substation: str
    to_substation: str
    from_bus: str  # "S1/B7" form
    to_bus: str
    r_pu: float = 0.01
    x_pu: float = 0.05
    rating_a: float = 400.0
    comm_latency_ticks: int = 0


@dataclass(frozen=True)
class RangeModel:
    """Validated, immutable input to the simulation kernel."""

    substation: SubstationModel
    cyber: CyberModel
    ieds: tuple[IedSpec, ...] = ()
    plcs: tuple[PlcSpec, ...] = ()
    scada: ScadaSpec = ScadaSpec()
    timeline: ScenarioTimeline = ScenarioTimeline()
    tick_ms: int = 100


# --------------------------------------------------------------------------
# canonical ordering
# --------------------------------------------------------------------------

def normalize_substation(model: SubstationModel) -> SubstationModel:
    """Sort every collection by id so structurally equal models compare equal."""
    return replace(
        model,
        voltage_levels=tuple(sorted(model.voltage_levels, key=lambda v: v.name)),
        buses=tuple(sorted(model.buses, key=lambda b: b.id)),
        branches=tuple(sorted(model.branches, key=lambda b: b.id)),
        switches=tuple(sorted(model.switches, key=lambda s: s.id)),
        loads=tuple(sorted(model.loads, key=lambda l: l.id)),
        sources=tuple(sorted(model.sources, key=lambda s: s.id)),
    )


def normalize_cyber(model: CyberModel) -> CyberModel:
    return CyberModel(
        subnetworks=tuple(sorted(model.subnetworks, key=lambda s: s.name)),
        hosts=tuple(sorted(model.hosts, key=lambda h: h.name)),
        switches=tuple(sorted(model.switches, key=lambda s: s.name)),
        links=tuple(sorted(model.links, key=lambda l: (l.endpoint_a, l.endpoint_b, l.latency_ticks))),
    )


# --------------------------------------------------------------------------
# state keys
# --------------------------------------------------------------------------

class UnknownElementError(KeyError):
    pass


def element_key(element_id: str, quantity: Quantity) -> str:
    """Deterministic state-store key for an element quantity.

    The encoding is ``<element id>.<quantity>``; quantity tokens never
    suffix-collide, so the mapping is injective for distinct ids.
    """
    return f"{element_id}.{quantity.value}"


def checked_element_key(model: SubstationModel, element_id: str, quantity: Quantity) -> str:
    """Like element_key but verifies the element exists in the model."""
    if element_id not in model.element_ids():
        raise UnknownElementError(element_id)
    return element_key(element_id, quantity)


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    code: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.subject}: {self.message}"


def _physical_islands(model: SubstationModel) -> dict[str, int]:
    """Union-find over branches and closed switches; returns bus -> island id."""
    parent = {b.id: b.id for b in model.buses}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: str, b: str) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for br in model.branches:
        if br.from_bus in parent and br.to_bus in parent:
            union(br.from_bus, br.to_bus)
    for sw in model.switches:
        if sw.state == SwitchState.CLOSED and sw.from_bus in parent and sw.to_bus in parent:
            union(sw.from_bus, sw.to_bus)

    roots = sorted({find(b) for b in parent})
    index = {r: i for i, r in enumerate(roots)}
    return {b: index[find(b)] for b in parent}


def _validate_substation(sub: SubstationModel) -> list[Violation]:
    out: list[Violation] = []
    buses = sub.bus_ids()

    seen: set[str] = set()
    for eid in [b.id for b in sub.buses] + [e.id for e in sub.branches] + \
            [e.id for e in sub.switches] + [e.id for e in sub.loads] + \
            [e.id for e in sub.sources]:
        if eid in seen:
            out.append(Violation("duplicate-id", eid, "element id used more than once"))
        seen.add(eid)

    for br in sub.branches:
        for end in (br.from_bus, br.to_bus):
            if end not in buses:
                out.append(Violation("dangling-branch", br.id, f"endpoint bus {end!r} does not exist"))
        if br.kind in (BranchKind.LINE, BranchKind.TRANSFORMER, BranchKind.TIE_LINE) and br.x_pu == 0.0:
            out.append(Violation(
                "zero-impedance-branch", br.id,
                "branch reactance is zero; model zero-impedance couplings as switches"))
    for sw in sub.switches:
        for end in (sw.from_bus, sw.to_bus):
            if end not in buses:
                out.append(Violation("dangling-switch", sw.id, f"endpoint bus {end!r} does not exist"))
    for ld in sub.loads:
        if ld.bus not in buses:
            out.append(Violation("dangling-load", ld.id, f"bus {ld.bus!r} does not exist"))
    for src in sub.sources:
        if src.bus not in buses:
            out.append(Violation("dangling-source", src.id, f"bus {src.bus!r} does not exist"))

    # one grid_slack per island that has any source at all
    if not any(out):  # island analysis only meaningful on a well-referenced model
        islands = _physical_islands(sub)
        slacks_per_island: dict[int, list[str]] = {}
        sources_per_island: dict[int, list[str]] = {}
        for src in sub.sources:
            isl = islands[src.bus]
            sources_per_island.setdefault(isl, []).append(src.id)
            if src.kind == SourceKind.GRID_SLACK:
                slacks_per_island.setdefault(isl, []).append(src.id)
        for isl, srcs in sorted(sources_per_island.items()):
            slacks = slacks_per_island.get(isl, [])
            if len(slacks) == 0:
                out.append(Violation(
                    "missing-slack", ",".join(sorted(srcs)),
                    "island with sources has no grid_slack"))
            elif len(slacks) > 1:
                out.append(Violation(
                    "multiple-slack", ",".join(sorted(slacks)),
                    "island has more than one grid_slack"))
    return out


def _validate_cyber(cyber: CyberModel, n_substations: int) -> list[Violation]:
    out: list[Violation] = []
    by_ip: dict[str, list[str]] = {}
    by_mac: dict[str, list[str]] = {}
    for h in cyber.hosts:
        by_ip.setdefault(h.ip, []).append(h.name)
        by_mac.setdefault(h.mac.lower(), []).append(h.name)
    for ip, names in sorted(by_ip.items()):
        if len(names) > 1:
            out.append(Violation("duplicate-ip", ",".join(sorted(names)), f"IP {ip} assigned more than once"))
    for mac, names in sorted(by_mac.items()):
        if len(names) > 1:
            out.append(Violation("duplicate-mac", ",".join(sorted(names)), f"MAC {mac} assigned more than once"))

    switch_names = {s.name for s in cyber.switches}
    node_names = switch_names | {h.name for h in cyber.hosts}
    adj: dict[str, set[str]] = {n: set() for n in node_names}
    for ln in cyber.links:
        if ln.endpoint_a in adj and ln.endpoint_b in adj:
            adj[ln.endpoint_a].add(ln.endpoint_b)
            adj[ln.endpoint_b].add(ln.endpoint_a)
        else:
            missing = ln.endpoint_a if ln.endpoint_a not in adj else ln.endpoint_b
            out.append(Violation("dangling-link", f"{ln.endpoint_a}<->{ln.endpoint_b}",
                                 f"link endpoint {missing!r} does not exist"))

    # connectivity within each subnetwork
    for sn in cyber.subnetworks:
        members = sorted(
            [h.name for h in cyber.hosts if h.subnetwork == sn.name]
            + [s.name for s in cyber.switches if s.subnetwork == sn.name]
        )
        if len(members) <= 1:
            continue
        seen = {members[0]}
        stack = [members[0]]
        member_set = set(members)
        while stack:
            node = stack.pop()
            for nxt in adj.get(node, ()):
                if nxt in member_set and nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        if seen != member_set:
            out.append(Violation("disconnected-subnetwork", sn.name,
                                 "link graph is not connected inside the subnetwork"))

    wan_switches = [s for s in cyber.switches if s.subnetwork == ""]
    if n_substations >= 2 and len(wan_switches) != 1:
        out.append(Violation("wan-switch", "WAN",
                             f"expected exactly one WAN switch for {n_substations} substations, "
                             f"found {len(wan_switches)}"))
    if n_substations < 2 and wan_switches:
        out.append(Violation("wan-switch", "WAN", "single-substation model must not have a WAN switch"))
    return out


def _validate_ied(ied: IedSpec, sub: SubstationModel) -> list[Violation]:
    out: list[Violation] = []
    lns = ied.logical_nodes
    th = ied.thresholds
    limit_by_fn = {
        "PTOC": th.ptoc_limit_a,
        "PTOV": th.ptov_limit_pu,
        "PTUV": th.ptuv_limit_pu,
        "PDIF": th.pdif_limit_a,
    }
    for fn, limit in limit_by_fn.items():
        if fn in lns and limit is None:
            out.append(Violation("missing-threshold", ied.name, f"{fn} enabled but no threshold configured"))
        if fn not in lns and limit is not None:
            out.append(Violation("threshold-without-ln", ied.name,
                                 f"{fn} threshold configured but logical node not declared"))
    if "CILO" in lns and not ied.interlock_guards:
        out.append(Violation("missing-guards", ied.name, "CILO enabled but no interlock guards configured"))
    if "CILO" not in lns and ied.interlock_guards:
        out.append(Violation("guards-without-ln", ied.name, "interlock guards configured without CILO"))
    if "PDIF" in lns and ied.remote_peer is None:
        out.append(Violation("missing-peer", ied.name, "PDIF enabled but no remote peer configured"))
    if "PDIF" not in lns and ied.remote_peer is not None:
        out.append(Violation("peer-without-ln", ied.name, "remote peer configured without PDIF"))

    elements = sub.element_ids()
    switch_ids = {s.id for s in sub.switches}
    for m in ied.bindings.measurements:
        if m.element not in elements:
            out.append(Violation("dangling-binding", ied.name, f"measured element {m.element!r} does not exist"))
    for c in ied.bindings.controls:
        if c.switch not in switch_ids:
            out.append(Violation("dangling-binding", ied.name, f"controlled switch {c.switch!r} does not exist"))
    for g in ied.interlock_guards:
        for sw in (g.guarded_switch, g.guard_switch):
            if sw not in switch_ids:
                out.append(Violation("dangling-guard", ied.name, f"guard switch {sw!r} does not exist"))
    return out


def validate_model(model: RangeModel) -> list[Violation]:
    """Collect every invariant violation in the model. Never mutates.

    An empty result means the model is fit for kernel construction.
    """
    out: list[Violation] = []
    out.extend(_validate_substation(model.substation))

    n_subs = len({sn.substation for sn in model.cyber.subnetworks if sn.substation})
    out.extend(_validate_cyber(model.cyber, n_subs))

    host_names_all = {h.name for h in model.cyber.hosts}
    ied_names = set()
    for ied in model.ieds:
        if ied.name in ied_names:
            out.append(Violation("duplicate-ied", ied.name, "IED name used more than once"))
        ied_names.add(ied.name)
        if ied.name not in host_names_all:
            out.append(Violation("ied-host-missing", ied.name,
                                 "IED has no matching host in the cyber model"))
        out.extend(_validate_ied(ied, model.substation))
    for plc in model.plcs:
        if plc.name not in host_names_all:
            out.append(Violation("plc-host-missing", plc.name,
                                 "PLC has no matching host in the cyber model"))
    if model.scada.data_points and not any(
            h.role == HostRole.SCADA for h in model.cyber.hosts):
        out.append(Violation("scada-host-missing", "scada",
                             "SCADA points configured but no host has the scada role"))
    for ied in model.ieds:
        if ied.remote_peer is not None and ied.remote_peer not in ied_names:
            out.append(Violation("unknown-peer", ied.name, f"remote peer {ied.remote_peer!r} is not an IED"))

    ieds_by_name = {i.name: i for i in model.ieds}
    for plc in model.plcs:
        declared = [v.name for v in plc.program.variables]
        for name in declared:
            if declared.count(name) > 1:
                out.append(Violation("duplicate-variable", plc.name, f"variable {name!r} declared more than once"))
        declared_set = set(declared)
        for io in plc.io_map:
            if io.variable not in declared_set:
                out.append(Violation("unknown-io-variable", plc.name, f"io_map names undeclared variable {io.variable!r}"))
            target = ieds_by_name.get(io.ied)
            if target is None:
                out.append(Violation("unknown-io-ied", plc.name, f"io_map references unknown IED {io.ied!r}"))
            else:
                ln_class = io.path.split(".", 1)[0].rstrip("0123456789")
                if ln_class in KNOWN_LN_CLASSES and ln_class not in target.logical_nodes:
                    out.append(Violation("io-ln-missing", plc.name,
                                         f"IED {io.ied!r} does not declare logical node {ln_class} for path {io.path!r}"))

    host_names = {h.name for h in model.cyber.hosts}
    point_ids = set()
    sources_by_name = {s.name: s for s in model.scada.data_sources}
    for src in model.scada.data_sources:
        if src.host not in host_names:
            out.append(Violation("unknown-source-host", src.name, f"host {src.host!r} does not exist"))
    for pt in model.scada.data_points:
        if pt.id in point_ids:
            out.append(Violation("duplicate-point", pt.id, "point id used more than once"))
        point_ids.add(pt.id)
        if pt.source not in sources_by_name:
            out.append(Violation("unknown-point-source", pt.id, f"data source {pt.source!r} does not exist"))

    last_tick = -1
    load_ids = {l.id for l in model.substation.loads}
    source_ids = {s.id for s in model.substation.sources}
    sw_ids = {s.id for s in model.substation.switches}
    target_kind = {
        TimelineField.LOAD_P: load_ids,
        TimelineField.LOAD_Q: load_ids,
        TimelineField.SOURCE_P: source_ids,
        TimelineField.SWITCH_STATE: sw_ids,
    }
    for entry in model.timeline.entries:
        if entry.tick < 0:
            out.append(Violation("negative-tick", entry.target, f"timeline tick {entry.tick} is negative"))
        if entry.tick < last_tick:
            out.append(Violation("unordered-timeline", entry.target,
                                 f"timeline tick {entry.tick} precedes {last_tick}"))
        last_tick = max(last_tick, entry.tick)
        if entry.target not in target_kind[entry.field]:
            out.append(Violation("unknown-timeline-target", entry.target,
                                 f"no {entry.field.value} target with this id"))

    # every switch addressable by scenario or HMI control must be IED-controlled
    controlled = {c.switch for ied in model.ieds for c in ied.bindings.controls}
    switch_ids = {s.id for s in model.substation.switches}
    addressable = {
        e.target for e in model.timeline.entries
        if e.field == TimelineField.SWITCH_STATE and e.target in switch_ids
    }
    for pt in model.scada.data_points:
        if pt.kind != PointKind.CONTROL:
            continue
        src = sources_by_name.get(pt.source)
        if src is None:
            continue
        target_ied = ieds_by_name.get(src.host)
        if target_ied is not None:
            for c in target_ied.bindings.controls:
                if c.path == pt.path:
                    addressable.add(c.switch)
        for plc in model.plcs:
            if plc.name != src.host:
                continue
            for io in plc.io_map:
                if io.direction == IoDirection.WRITE:
                    owner = ieds_by_name.get(io.ied)
                    if owner is None:
                        continue
                    for c in owner.bindings.controls:
                        if c.path == io.path:
                            addressable.add(c.switch)
    for sw in sorted(addressable):
        if sw not in controlled:
            out.append(Violation("uncontrolled-switch", sw, "switch is addressable but no IED controls it"))

    if model.tick_ms < 1:
        out.append(Violation("bad-tick-ms", str(model.tick_ms), "tick_ms must be at least 1"))
    return out
