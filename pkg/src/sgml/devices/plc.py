"""PLC runtime: one program scan per kernel tick over MMS-bound variables.

Each scan polls the read-bound variables from their IEDs, runs the
statement list, then pushes changed write-bound variables out as MMS
write/operate. A runtime fault (unset variable in an expression, division
by zero) aborts the scan: the variable store rolls back to its pre-scan
values and an alarm event is logged.

Boolean writes to breaker control paths translate TRUE -> "open",
FALSE -> "close" (a raised trip flag opens the breaker).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from sgml.model import IoDirection, PlcSpec, StDataType, SwitchState
from sgml.netsim import Frame, Message, Protocol, Verb


class ScanAbort(Exception):
    pass


def eval_expr(node, store: dict):
    kind = node[0]
    if kind == "num":
        return node[1]
    if kind == "bool":
        return node[1]
    if kind == "var":
        value = store.get(node[1])
        if value is None:
            raise ScanAbort(f"variable {node[1]!r} has no value")
        return value
    if kind == "neg":
        return -eval_expr(node[1], store)
    if kind == "not":
        return not eval_expr(node[1], store)
    _, op, left, right = node
    a = eval_expr(left, store)
    if op == "AND":
        return bool(a) and bool(eval_expr(right, store))
    if op == "OR":
        return bool(a) or bool(eval_expr(right, store))
    b = eval_expr(right, store)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            raise ScanAbort("division by zero")
        return a / b
    if op == "=":
        return a == b
    if op == "<>":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    raise ScanAbort(f"unknown operator {op!r}")


def exec_statements(statements, store: dict, types: dict) -> None:
    for stmt in statements:
        if stmt[0] == "assign":
            _, name, expr = stmt
            value = eval_expr(expr, store)
            data_type = types[name]
            if data_type == StDataType.BOOL:
                store[name] = bool(value)
            elif data_type == StDataType.INT:
                store[name] = int(value)
            else:
                store[name] = float(value)
        else:
            _, branches, else_body = stmt
            taken = False
            for cond, body in branches:
                if eval_expr(cond, store):
                    exec_statements(body, store, types)
                    taken = True
                    break
            if not taken and else_body:
                exec_statements(else_body, store, types)


def _coerce_response(value, data_type: StDataType):
    if data_type == StDataType.BOOL:
        if isinstance(value, str):
            return value == SwitchState.CLOSED.value
        return bool(value)
    if data_type == StDataType.INT:
        return int(value)
    return float(value)


@dataclass
class PlcRuntime:
    spec: PlcSpec
    store: dict = field(default_factory=dict)
    scan_counter: int = 0
    inbox: list[Frame] = field(default_factory=list)
    _pending_reads: dict[str, str] = field(default_factory=dict)   # correlation -> variable
    _last_written: dict[str, object] = field(default_factory=dict)  # variable -> sent value
    _corr: int = 0

    def __post_init__(self):
        self.types = {v.name: v.data_type for v in self.spec.program.variables}
        for v in self.spec.program.variables:
            self.store[v.name] = v.initial
        self._exposed = {e.point_path: e.variable for e in self.spec.scada_points}
        self._write_bindings = [b for b in self.spec.io_map
                                if b.direction == IoDirection.WRITE]
        self._read_bindings = [b for b in self.spec.io_map
                               if b.direction == IoDirection.READ]
        # only a change relative to the declared initial value triggers a write
        for b in self._write_bindings:
            self._last_written[b.variable] = self.store.get(b.variable)

    @property
    def name(self) -> str:
        return self.spec.name

    def deliver(self, frame: Frame) -> None:
        self.inbox.append(frame)

    def _next_corr(self) -> str:
        self._corr += 1
        return f"{self.name}#{self._corr}"

    def _handle_frame(self, ctx, frame: Frame) -> None:
        msg = frame.payload
        if not isinstance(msg, Message) or msg.protocol != Protocol.MMS:
            return
        if msg.verb == Verb.RESPONSE:
            variable = self._pending_reads.pop(msg.correlation_id, None)
            if variable is not None and msg.ok and msg.value is not None:
                try:
                    self.store[variable] = _coerce_response(msg.value, self.types[variable])
                except (TypeError, ValueError):
                    ctx.event("alarm", {"what": "bad-response-value", "plc": self.name,
                                        "variable": variable, "value": msg.value})
            return
        if msg.verb == Verb.READ:
            variable = self._exposed.get(msg.path)
            if variable is None:
                ctx.send(frame.src_ip, Message(Protocol.MMS, Verb.RESPONSE, msg.path,
                                               None, msg.correlation_id, ok=False))
                return
            ctx.send(frame.src_ip, Message(Protocol.MMS, Verb.RESPONSE, msg.path,
                                           self.store.get(variable), msg.correlation_id,
                                           ok=self.store.get(variable) is not None))
            return
        if msg.verb in (Verb.OPERATE, Verb.WRITE):
            variable = self._exposed.get(msg.path)
            if variable is None:
                ctx.send(frame.src_ip, Message(Protocol.MMS, Verb.RESPONSE, msg.path,
                                               None, msg.correlation_id, ok=False))
                return
            try:
                if isinstance(msg.value, str) and self.types[variable] == StDataType.BOOL:
                    value = msg.value == SwitchState.OPEN.value
                else:
                    value = _coerce_response(msg.value, self.types[variable])
                self.store[variable] = value
                ctx.send(frame.src_ip, Message(Protocol.MMS, Verb.RESPONSE, msg.path,
                                               msg.value, msg.correlation_id, ok=True))
            except (TypeError, ValueError):
                ctx.send(frame.src_ip, Message(Protocol.MMS, Verb.RESPONSE, msg.path,
                                               None, msg.correlation_id, ok=False))

    def scan(self, ctx) -> None:
        self.scan_counter += 1
        inbox, self.inbox = self.inbox, []
        for frame in inbox:
            self._handle_frame(ctx, frame)

        # poll every read binding; answers land on a later tick
        for binding in self._read_bindings:
            corr = self._next_corr()
            self._pending_reads[corr] = binding.variable
            host = ctx.host_ip(binding.ied)
            if host is None:
                ctx.event("alarm", {"what": "unknown-io-host", "plc": self.name,
                                    "ied": binding.ied})
                continue
            ctx.send(host, Message(Protocol.MMS, Verb.READ, binding.path,
                                   correlation_id=corr))

        snapshot = dict(self.store)
        try:
            exec_statements(self.spec.program.statements, self.store, self.types)
        except ScanAbort as exc:
            self.store = snapshot
            ctx.event("alarm", {"what": "plc-scan-abort", "plc": self.name,
                                "reason": str(exc)})
            return

        for binding in self._write_bindings:
            value = self.store.get(binding.variable)
            if value is None or self._last_written.get(binding.variable) == value:
                continue
            self._last_written[binding.variable] = value
            host = ctx.host_ip(binding.ied)
            if host is None:
                continue
            if self.types[binding.variable] == StDataType.BOOL:
                wire = SwitchState.OPEN.value if value else SwitchState.CLOSED.value
                verb = Verb.OPERATE
            else:
                wire = value
                verb = Verb.WRITE
            ctx.send(host, Message(Protocol.MMS, verb, binding.path, wire,
                                   correlation_id=self._next_corr()))

    def point_values(self) -> dict[str, object]:
        return {path: self.store.get(var) for path, var in self._exposed.items()}
