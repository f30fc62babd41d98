"""SCADA gateway: polls data points over the network and serves the HMI.

This is deliberately not an HMI: it keeps the live point table, validates
control requests, and turns them into MMS operates toward the owning
source host. Every displayed value therefore travels the same network the
attacks target; the gateway never reads the physical state store.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from sgml.model import DataPoint, PointKind, ScadaSpec
from sgml.netsim import Frame, Message, Protocol, Verb

POINT_TABLE_VERSION = 1


def resolve_point_bindings(scada: ScadaSpec, ieds=(), plcs=()) -> dict:
    """Point id -> (physical element, quantity) where statically derivable.

    MMS points resolve through the source IED's bindings; PLC-gateway
    points chase the exposed variable back to its read binding and then
    into that IED's bindings.
    """
    sources = {s.name: s for s in scada.data_sources}
    ied_by_name = {i.name: i for i in ieds}
    plc_by_name = {p.name: p for p in plcs}
    out: dict[str, tuple[str, str]] = {}

    def from_ied(ied, path):
        for m in ied.bindings.measurements:
            if m.path == path:
                return m.element, m.quantity.value
        for c in ied.bindings.controls:
            if c.path == path:
                return c.switch, "state"
        return None

    for p in scada.data_points:
        src = sources.get(p.source)
        if src is None:
            continue
        resolved = None
        ied = ied_by_name.get(src.host)
        if ied is not None:
            resolved = from_ied(ied, p.path)
        plc = plc_by_name.get(src.host)
        if resolved is None and plc is not None:
            variable = next((e.variable for e in plc.scada_points
                             if e.point_path == p.path), None)
            binding = next((b for b in plc.io_map if b.variable == variable), None)
            target = ied_by_name.get(binding.ied) if binding else None
            if binding is not None and target is not None:
                resolved = from_ied(target, binding.path)
        if resolved is not None:
            out[p.id] = resolved
    return out


def point_table_document(scada: ScadaSpec, ieds=(), plcs=()) -> dict:
    """Machine-readable point table for API and console consumption."""
    sources = {s.name: s for s in scada.data_sources}
    bindings = resolve_point_bindings(scada, ieds, plcs)
    entries = []
    for p in scada.data_points:
        src = sources.get(p.source)
        element, quantity = bindings.get(p.id, (None, None))
        entries.append({
            "id": p.id,
            "display_name": p.display_name,
            "unit": p.unit,
            "kind": p.kind.value,
            "writable": p.kind == PointKind.CONTROL,
            "source": p.source,
            "host": src.host if src else None,
            "protocol": src.protocol.value if src else None,
            "path": p.path,
            "element": element,
            "quantity": quantity,
        })
    return {"format_version": POINT_TABLE_VERSION, "points": entries}


@dataclass
class ScadaGateway:
    name: str
    spec: ScadaSpec
    values: dict[str, tuple[object, int]] = field(default_factory=dict)
    inbox: list[Frame] = field(default_factory=list)
    _pending: dict[str, str] = field(default_factory=dict)  # correlation -> point id
    _controls: list[tuple[str, object]] = field(default_factory=list)
    _corr: int = 0

    def __post_init__(self):
        self._points: dict[str, DataPoint] = {p.id: p for p in self.spec.data_points}
        self._sources = {s.name: s for s in self.spec.data_sources}

    def deliver(self, frame: Frame) -> None:
        self.inbox.append(frame)

    def point(self, point_id: str) -> DataPoint | None:
        return self._points.get(point_id)

    def queue_control(self, point_id: str, value) -> None:
        self._controls.append((point_id, value))

    def switch_control_point(self, switch_id: str, ieds) -> DataPoint | None:
        """Find the control point that reaches the IED controlling a switch."""
        controlling = {c.path: ied.name for ied in ieds
                       for c in ied.bindings.controls if c.switch == switch_id}
        for p in self.spec.data_points:
            if p.kind != PointKind.CONTROL:
                continue
            src = self._sources.get(p.source)
            if src is not None and controlling.get(p.path) == src.host:
                return p
        return None

    def _next_corr(self) -> str:
        self._corr += 1
        return f"{self.name}#{self._corr}"

    def scan(self, ctx) -> None:
        inbox, self.inbox = self.inbox, []
        for frame in inbox:
            msg = frame.payload
            if not isinstance(msg, Message) or msg.verb != Verb.RESPONSE:
                continue
            point_id = self._pending.pop(msg.correlation_id, None)
            if point_id is None:
                continue
            if msg.ok:
                self.values[point_id] = (msg.value, ctx.tick)
            else:
                ctx.event("control" if self._points[point_id].kind == PointKind.CONTROL
                          else "alarm",
                          {"what": "request-rejected", "point": point_id,
                           "gateway": self.name})

        controls, self._controls = self._controls, []
        for point_id, value in controls:
            p = self._points[point_id]
            src = self._sources.get(p.source)
            host_ip = ctx.host_ip(src.host) if src else None
            if host_ip is None:
                ctx.event("alarm", {"what": "control-source-missing", "point": point_id})
                continue
            corr = self._next_corr()
            self._pending[corr] = point_id
            ctx.send(host_ip, Message(Protocol.MMS, Verb.OPERATE, p.path, value,
                                      correlation_id=corr))
            ctx.event("control", {"what": "control-issued", "point": point_id,
                                  "value": value, "gateway": self.name})

        for p in self.spec.data_points:
            if p.kind == PointKind.CONTROL:
                continue
            src = self._sources.get(p.source)
            host_ip = ctx.host_ip(src.host) if src else None
            if host_ip is None:
                continue
            corr = self._next_corr()
            self._pending[corr] = p.id
            ctx.send(host_ip, Message(Protocol.MMS, Verb.READ, p.path,
                                      correlation_id=corr))

    def live_values(self) -> dict[str, dict]:
        return {
            pid: {"value": value, "tick": tick}
            for pid, (value, tick) in sorted(self.values.items())
        }
