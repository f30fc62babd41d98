"""Virtual IED: measurement serving, breaker control, protection functions.

Protections are evaluated in the fixed order PTOC, PTOV, PTUV, PDIF.
PTOC is definite-time: the pickup timer starts when current crosses the
limit and the trip fires once the configured delay has elapsed with the
condition still present. The voltage protections and PDIF act immediately.
A protection latches after tripping and re-arms when its condition clears,
so a constant grid state never produces a second trip.

Interlocking (CILO) is deliberately network-dependent: guard breaker
states are learned only from received GOOSE publishes, never from the
physical state store, so traffic manipulation can fool it. Unknown guard
state blocks the close (fail-safe).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from sgml.model import IedSpec, Quantity, SwitchState, element_key
from sgml.netsim import Frame, Message, Protocol, Verb

#: Remote current samples older than this many ticks make PDIF unavailable.
PDIF_MAX_SAMPLE_AGE = 2

#: Periodic GOOSE re-announcement interval in ticks.
GOOSE_HEARTBEAT_TICKS = 10

_PROTECTION_ORDER = ("PTOC", "PTOV", "PTUV", "PDIF")


@dataclass
class IedRuntime:
    spec: IedSpec
    pickup_tick: dict[str, int | None] = field(default_factory=dict)
    latched: dict[str, bool] = field(default_factory=dict)
    goose_guard_state: dict[str, str] = field(default_factory=dict)
    remote_sample: tuple[float, int] | None = None
    pdif_unavailable: bool = False
    last_published: dict[str, str] = field(default_factory=dict)
    last_measurements: dict[str, tuple[float, int]] = field(default_factory=dict)
    inbox: list[Frame] = field(default_factory=list)
    booted: bool = False

    @property
    def name(self) -> str:
        return self.spec.name

    def deliver(self, frame: Frame) -> None:
        self.inbox.append(frame)

    # -- helpers -------------------------------------------------------

    def _measurement_by_path(self, path: str):
        for m in self.spec.bindings.measurements:
            if m.path == path:
                return m
        return None

    def _control_by_path(self, path: str):
        for c in self.spec.bindings.controls:
            if c.path == path:
                return c
        return None

    def _measured(self, ctx, quantity: Quantity):
        element = self.spec.bindings.measured_element(quantity)
        if element is None:
            return None
        entry = ctx.read(element_key(element, quantity))
        return None if entry is None else entry[0]

    def _trip(self, ctx, function: str, switch: str | None) -> None:
        if switch is None:
            ctx.event("alarm", {"what": "protection-without-breaker",
                                "ied": self.name, "function": function})
            return
        acted = ctx.command_switch(switch, SwitchState.OPEN, source=f"{self.name}:{function}")
        ctx.event("protection", {"function": function, "ied": self.name,
                                 "switch": switch, "acted": bool(acted)})

    # -- inbound traffic -------------------------------------------------

    def _respond(self, ctx, frame: Frame, value, ok: bool) -> None:
        msg = frame.payload
        ctx.send(frame.src_ip, Message(Protocol.MMS, Verb.RESPONSE, msg.path, value,
                                       msg.correlation_id, ok=ok))

    def _handle_frame(self, ctx, frame: Frame) -> None:
        msg = frame.payload
        if not isinstance(msg, Message):
            return
        if msg.protocol in (Protocol.GOOSE, Protocol.R_GOOSE):
            # path is the state key of the published breaker
            self.goose_guard_state[msg.path.rsplit(".", 1)[0]] = str(msg.value)
            return
        if msg.protocol == Protocol.R_SV:
            if self.spec.remote_peer and frame.sender == self.spec.remote_peer:
                self.remote_sample = (float(msg.value), ctx.tick)
            return
        if msg.verb == Verb.READ:
            binding = self._measurement_by_path(msg.path)
            if binding is not None:
                entry = ctx.read(element_key(binding.element, binding.quantity))
                if entry is None:
                    self._respond(ctx, frame, None, ok=False)
                else:
                    self._respond(ctx, frame, entry[0], ok=True)
                return
            control = self._control_by_path(msg.path)
            if control is not None:
                entry = ctx.read(element_key(control.switch, Quantity.STATE))
                self._respond(ctx, frame, entry[0] if entry else None, ok=entry is not None)
                return
            self._respond(ctx, frame, None, ok=False)
            return
        if msg.verb in (Verb.OPERATE, Verb.WRITE):
            control = self._control_by_path(msg.path)
            if control is None:
                # writes to measurement or unknown paths are rejected
                ctx.event("control", {"what": "write-rejected", "ied": self.name,
                                      "path": msg.path, "from": frame.src_ip})
                self._respond(ctx, frame, None, ok=False)
                return
            try:
                state = SwitchState(str(msg.value))
            except ValueError:
                self._respond(ctx, frame, None, ok=False)
                return
            if state == SwitchState.CLOSED and "CILO" in self.spec.logical_nodes:
                verdict = self.check_interlock(ctx, control.switch)
                if verdict != "allow":
                    self._respond(ctx, frame, None, ok=False)
                    return
            ctx.command_switch(control.switch, state, source=f"{self.name}:operate")
            ctx.event("control", {"what": "operate", "ied": self.name,
                                  "switch": control.switch, "state": state.value,
                                  "from": frame.src_ip})
            self._respond(ctx, frame, state.value, ok=True)

    def check_interlock(self, ctx, switch: str) -> str:
        """Closing rule: every guard must be known closed via GOOSE."""
        guards = [g.guard_switch for g in self.spec.interlock_guards
                  if g.guarded_switch == switch]
        for guard in guards:
            known = self.goose_guard_state.get(guard)
            if known is None:
                ctx.event("protection", {"function": "CILO_BLOCK", "ied": self.name,
                                         "switch": switch, "guard": guard,
                                         "reason": "guard-state-unknown", "acted": True})
                return "block"
            if known != SwitchState.CLOSED.value:
                ctx.event("protection", {"function": "CILO_BLOCK", "ied": self.name,
                                         "switch": switch, "guard": guard,
                                         "reason": "guard-open", "acted": True})
                return "block"
        return "allow"

    # -- protections -----------------------------------------------------

    def _condition(self, ctx, function: str):
        th = self.spec.thresholds
        if function == "PTOC":
            i = self._measured(ctx, Quantity.I_A)
            if i is None:
                return None
            return i > th.ptoc_limit_a
        if function == "PTOV":
            v = self._measured(ctx, Quantity.V_PU)
            if v is None:
                return None
            return v > th.ptov_limit_pu
        if function == "PTUV":
            v = self._measured(ctx, Quantity.V_PU)
            if v is None:
                return None
            return 0.0 < v < th.ptuv_limit_pu  # dead bus is no undervoltage
        if function == "PDIF":
            i = self._measured(ctx, Quantity.I_A)
            if i is None:
                return None
            if self.remote_sample is None or \
                    ctx.tick - self.remote_sample[1] > PDIF_MAX_SAMPLE_AGE:
                if not self.pdif_unavailable:
                    self.pdif_unavailable = True
                    ctx.event("alarm", {"what": "pdif-unavailable", "ied": self.name})
                return None
            self.pdif_unavailable = False
            return abs(i - self.remote_sample[0]) > th.pdif_limit_a
        return None

    def _evaluate_protections(self, ctx) -> None:
        trip_switch = self.spec.bindings.trip_switch()
        for function in _PROTECTION_ORDER:
            if function not in self.spec.logical_nodes:
                continue
            condition = self._condition(ctx, function)
            if condition is None:
                continue
            if not condition:
                self.pickup_tick[function] = None
                self.latched[function] = False
                continue
            if self.latched.get(function):
                continue
            if function == "PTOC":
                if self.pickup_tick.get("PTOC") is None:
                    self.pickup_tick["PTOC"] = ctx.tick
                    ctx.event("protection", {"function": "PTOC", "ied": self.name,
                                             "switch": trip_switch, "acted": False,
                                             "what": "pickup"})
                if ctx.tick - self.pickup_tick["PTOC"] < self.spec.thresholds.ptoc_delay_ticks:
                    continue
            self.latched[function] = True
            self._trip(ctx, function, trip_switch)

    # -- publications ------------------------------------------------------

    def _publish_states(self, ctx) -> None:
        heartbeat = ctx.tick % GOOSE_HEARTBEAT_TICKS == 0
        for control in self.spec.bindings.controls:
            key = element_key(control.switch, Quantity.STATE)
            entry = ctx.read(key)
            if entry is None:
                continue
            state = str(entry[0])
            if self.last_published.get(key) != state or not self.booted or heartbeat:
                self.last_published[key] = state
                ctx.publish(Message(Protocol.GOOSE, Verb.PUBLISH, key, state))
        if self.spec.remote_peer is not None:
            element = self.spec.bindings.measured_element(Quantity.I_A)
            if element is not None:
                entry = ctx.read(element_key(element, Quantity.I_A))
                if entry is not None:
                    ctx.publish(Message(Protocol.R_SV, Verb.SAMPLE,
                                        element_key(element, Quantity.I_A), entry[0]))

    # -- main entry ---------------------------------------------------------

    def scan(self, ctx) -> None:
        inbox, self.inbox = self.inbox, []
        for frame in inbox:
            self._handle_frame(ctx, frame)

        missing = False
        for m in self.spec.bindings.measurements:
            entry = ctx.read(element_key(m.element, m.quantity))
            if entry is None:
                missing = True
                ctx.event("alarm", {"what": "missing-measurement", "ied": self.name,
                                    "key": element_key(m.element, m.quantity)})
            else:
                self.last_measurements[m.path] = entry

        if not missing:
            self._evaluate_protections(ctx)
        self._publish_states(ctx)
        self.booted = True
