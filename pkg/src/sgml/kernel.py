"""Co-simulation kernel: the per-tick heartbeat owning all mutable state.

Tick phases, in fixed order:

  1. apply timeline deltas, queued switch commands and external commands
  2. rebuild the electrical network if switch states changed, then solve
  3. publish the grid snapshot into the state store
  4. step the network, delivering due frames to device inboxes
  5. device scans: IEDs, then PLCs, then the SCADA gateway, then attackers,
     each group in name order; scans emit next-tick traffic and commands
  6. flush events and produce the tick report

Changes therefore become visible to devices one tick after they happen.
External commands enter through a thread-safe queue and are only applied
at phase 1, never mid-tick; the service layer reads the immutable snapshot
published at the end of each tick. On solver failure the previous grid
state is kept, a solver event is logged, and the run continues.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field, replace

from sgml.attack import AttackerRuntime, AttackScript
from sgml.devices import IedRuntime, PlcRuntime, ScadaGateway, point_table_document
from sgml.model import (
    HostRole,
    PointKind,
    Quantity,
    RangeModel,
    SwitchState,
    element_key,
    validate_model,
)
from sgml.netsim import Protocol, VirtualNetwork
from sgml.powerflow import (
    SolverSettings,
    apply_timeline,
    build_network,
    injections_from_model,
    solve,
)

EVENT_LOG_VERSION = 1


class ModelInvalidError(ValueError):
    def __init__(self, violations):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


@dataclass
class StateStore:
    """Key-value cache coupling devices to the physical solution."""

    _data: dict[str, tuple[object, int]] = field(default_factory=dict)

    def write(self, key: str, value, tick: int) -> None:
        self._data[key] = (value, tick)

    def read(self, key: str):
        return self._data.get(key)

    def keys(self):
        return self._data.keys()


@dataclass(frozen=True)
class TickReport:
    tick: int
    iterations: int
    converged: bool
    frames_delivered: int
    events: int
    duration_ms: float
    interval_ms: float | None = None  # start-to-start spacing, realtime runs


class EventLog:
    def __init__(self):
        self._entries: list[dict] = []
        self._seq = 0

    def append(self, tick: int, category: str, payload: dict) -> None:
        self._seq += 1
        self._entries.append({"tick": tick, "seq": self._seq,
                              "category": category, "payload": payload})

    def entries(self, since_seq: int = 0) -> list[dict]:
        if since_seq <= 0:
            return list(self._entries)
        return [e for e in self._entries if e["seq"] > since_seq]

    def count(self) -> int:
        return self._seq

    def export(self) -> str:
        lines = [json.dumps({"format_version": EVENT_LOG_VERSION})]
        lines.extend(json.dumps(e, sort_keys=True) for e in self._entries)
        return "\n".join(lines) + "\n"


class _DeviceContext:
    """Per-scan facade a device uses to touch the world."""

    __slots__ = ("kernel", "host", "tick")

    def __init__(self, kernel: "Kernel", host: str, tick: int):
        self.kernel = kernel
        self.host = host
        self.tick = tick

    def read(self, key: str):
        return self.kernel.store.read(key)

    def command_switch(self, switch: str, state: SwitchState, source: str) -> bool:
        return self.kernel._queue_switch_command(switch, state, source)

    def send(self, to_ip: str, message) -> None:
        self.kernel.net.send(self.host, to_ip, message, self.tick)

    def publish(self, message) -> None:
        self.kernel.net.publish(self.host, message, self.tick)

    def event(self, category: str, payload: dict) -> None:
        self.kernel.events.append(self.tick, category, payload)

    def host_ip(self, host_name: str) -> str | None:
        host = self.kernel.net.hosts.get(host_name)
        return host.ip if host else None


class Kernel:
    def __init__(self, model: RangeModel, attack_script: AttackScript | None = None,
                 settings: SolverSettings = SolverSettings()):
        violations = validate_model(model)
        if violations:
            raise ModelInvalidError(violations)

        self.model = model
        self.settings = settings
        self.substation = model.substation  # switch states evolve here
        self.events = EventLog()
        self.store = StateStore()
        self.net = VirtualNetwork(model.cyber, on_event=self._net_event)
        self.tick = -1
        self.grid = None

        self._injections = injections_from_model(model.substation)
        self._network_cache_key = None
        self._network = None
        self._pending_switch: list[tuple[str, SwitchState, str]] = []
        self._commands: list[dict] = []
        self._lock = threading.Lock()
        self._paused = threading.Event()
        self._stop = threading.Event()
        self.tick_reports: list[TickReport] = []
        self.latest_snapshot: dict = {}
        self._snapshot_history: dict[int, dict] = {}  # bounded ring, newest last
        self._last_tick_started: float | None = None

        hosts = {h.name: h for h in model.cyber.hosts}
        self.ieds = [IedRuntime(spec) for spec in sorted(model.ieds, key=lambda s: s.name)]
        self.plcs = [PlcRuntime(spec) for spec in sorted(model.plcs, key=lambda s: s.name)]
        scada_hosts = sorted(h.name for h in model.cyber.hosts if h.role == HostRole.SCADA)
        self.gateway = ScadaGateway(scada_hosts[0], model.scada) if scada_hosts else None

        # a host can carry one normal device plus, when compromised, a relay
        self._devices_by_host: dict[str, object] = {}
        self._attacker_by_host: dict[str, AttackerRuntime] = {}
        for runtime in self.ieds + self.plcs:
            self._devices_by_host[runtime.name] = runtime
        if self.gateway is not None:
            self._devices_by_host[self.gateway.name] = self.gateway

        self.attackers: list[AttackerRuntime] = []
        self._attack_steps: list = []
        self._script_attacker: str | None = None
        if attack_script is not None:
            if attack_script.attacker not in hosts:
                raise ModelInvalidError([f"attack script names unknown host {attack_script.attacker!r}"])
            self.add_attacker(attack_script.attacker)
            self._script_attacker = attack_script.attacker
            self._attack_steps = list(attack_script.steps)

        self._wire_subscriptions()

    # -- construction helpers ----------------------------------------------

    def add_attacker(self, host: str) -> AttackerRuntime:
        existing = self._attacker_by_host.get(host)
        if existing is not None:
            return existing
        runtime = AttackerRuntime(host, self.net)
        self.attackers.append(runtime)
        self.attackers.sort(key=lambda a: a.host)
        self._attacker_by_host[host] = runtime
        return runtime

    def _wire_subscriptions(self) -> None:
        controllers: dict[str, list[str]] = {}
        for ied in self.ieds:
            for c in ied.spec.bindings.controls:
                controllers.setdefault(c.switch, []).append(ied.name)
        for ied in self.ieds:
            for guard in ied.spec.interlock_guards:
                for publisher in sorted(controllers.get(guard.guard_switch, [])):
                    if publisher != ied.name:
                        self.net.subscribe(ied.name, Protocol.GOOSE, publisher)
            if ied.spec.remote_peer:
                self.net.subscribe(ied.name, Protocol.R_SV, ied.spec.remote_peer)

    def _net_event(self, category: str, payload: dict) -> None:
        self.events.append(max(self.tick, 0), category, payload)

    # -- external command surface -------------------------------------------

    def submit_command(self, source: str, command: dict):
        """Validate and queue an external command for the next tick.

        Returns (accepted: bool, detail: str). Accepted commands apply at
        phase 1 of the next tick.
        """
        kind = command.get("type")
        if kind == "control":
            if self.gateway is None:
                return False, "no SCADA gateway in this model"
            point = self.gateway.point(command.get("point", ""))
            if point is None:
                return False, f"unknown point {command.get('point')!r}"
            if point.kind != PointKind.CONTROL:
                return False, f"point {point.id!r} is not writable"
        elif kind == "breaker":
            switch = self.substation.find_switch(command.get("switch", ""))
            if switch is None:
                return False, f"unknown switch {command.get('switch')!r}"
            if command.get("action") not in ("open", "close"):
                return False, "action must be open or close"
            controlled = any(c.switch == switch.id for ied in self.model.ieds
                             for c in ied.bindings.controls)
            if not controlled:
                return False, f"no IED controls switch {switch.id!r}"
        elif kind == "attack_step":
            try:
                from sgml.attack import AttackStep
                step = AttackStep.from_dict({"at": max(self.tick + 1, 0),
                                             **command.get("step", {})})
            except Exception as exc:
                return False, str(exc)
            attacker = command.get("attacker", "")
            if attacker not in self.net.hosts:
                return False, f"unknown attacker host {attacker!r}"
            command = {"type": "attack_step", "attacker": attacker, "step": step}
        elif kind == "scenario_switch":
            if self.substation.find_switch(command.get("switch", "")) is None:
                return False, f"unknown switch {command.get('switch')!r}"
        else:
            return False, f"unknown command type {kind!r}"
        with self._lock:
            self._commands.append({"source": source, **command})
        return True, f"queued for tick {self.tick + 1}"

    def _queue_switch_command(self, switch: str, state: SwitchState, source: str) -> bool:
        """First command per switch per tick wins; later ones are dropped."""
        if any(s == switch for s, _, _ in self._pending_switch):
            return False
        if self.substation.find_switch(switch) is None:
            return False
        self._pending_switch.append((switch, state, source))
        return True

    # -- tick phases ---------------------------------------------------------

    def _phase_commands(self, tick: int) -> None:
        self._injections, switch_updates, delta = apply_timeline(
            self._injections, self.model.timeline, tick)
        for entry in delta:
            self.events.append(tick, "control", {
                "what": "scenario", "target": entry.target,
                "field": entry.field.value,
                "value": entry.value.value if isinstance(entry.value, SwitchState)
                else entry.value})
        for switch, state in switch_updates:
            self._apply_switch(tick, switch, state, "scenario")

        pending, self._pending_switch = self._pending_switch, []
        for switch, state, source in pending:
            self._apply_switch(tick, switch, state, source)

        with self._lock:
            commands, self._commands = self._commands, []
        for command in commands:
            if command["type"] == "control":
                self.gateway.queue_control(command["point"], command["value"])
            elif command["type"] == "breaker":
                self._route_breaker_command(tick, command)
            elif command["type"] == "scenario_switch":
                self._apply_switch(tick, command["switch"],
                                   SwitchState(command["action"]), "scenario")
            elif command["type"] == "attack_step":
                runtime = self.add_attacker(command["attacker"])
                ctx = _DeviceContext(self, runtime.host, tick)
                runtime.execute(command["step"], ctx)

        fired = [s for s in self._attack_steps if s.at == tick]
        self._attack_steps = [s for s in self._attack_steps if s.at != tick]
        for step in fired:
            runtime = self._attacker_by_host[self._script_attacker]
            ctx = _DeviceContext(self, runtime.host, tick)
            runtime.execute(step, ctx)

    def _route_breaker_command(self, tick: int, command: dict) -> None:
        """HMI breaker action: route as MMS through gateway -> (PLC) -> IED."""
        switch = command["switch"]
        value = command["action"]
        if self.gateway is not None:
            point = self.gateway.switch_control_point(switch, self.model.ieds)
            if point is not None:
                self.gateway.queue_control(point.id, value)
                return
        # no matching control point: direct MMS operate from the SCADA host
        owner = next((ied for ied in sorted(self.model.ieds, key=lambda i: i.name)
                      for c in ied.bindings.controls if c.switch == switch), None)
        sender = self.gateway.name if self.gateway is not None else None
        if owner is None or sender is None:
            self.events.append(tick, "alarm", {"what": "unroutable-breaker-command",
                                               "switch": switch})
            return
        path = next(c.path for c in owner.bindings.controls if c.switch == switch)
        from sgml.netsim import Message, Verb
        self.net.send(sender, self.net.hosts[owner.name].ip,
                      Message(Protocol.MMS, Verb.OPERATE, path, value,
                              correlation_id=f"hmi#{tick}#{switch}"), tick)
        self.events.append(tick, "control", {"what": "control-issued", "switch": switch,
                                             "value": value, "gateway": sender})

    def _apply_switch(self, tick: int, switch: str, state: SwitchState, source: str) -> None:
        current = self.substation.find_switch(switch)
        if current is None or current.state == state:
            return
        self.substation = self.substation.with_switch_state(switch, state)
        self.events.append(tick, "control", {"what": "switch-applied", "switch": switch,
                                             "state": state.value, "source": source})

    def _phase_solve(self, tick: int) -> None:
        cache_key = tuple(s.state for s in self.substation.switches)
        if cache_key != self._network_cache_key:
            self._network = build_network(self.substation)
            self._network_cache_key = cache_key
        state = solve(self._network, self._injections, self.substation,
                      self.settings, tick)
        if not state.converged and self.grid is not None:
            self.events.append(tick, "solver", {
                "what": "non-convergence", "detail": state.diagnostic,
                "iterations": state.iterations})
            self.grid = replace(self.grid, tick=tick, converged=False,
                                iterations=state.iterations)
            return
        if not state.converged:
            self.events.append(tick, "solver", {
                "what": "non-convergence", "detail": state.diagnostic,
                "iterations": state.iterations})
        self.grid = state

    def _phase_publish(self, tick: int) -> None:
        grid = self.grid
        write = self.store.write
        for bus, (mag, _ang) in grid.bus_voltage.items():
            write(element_key(bus, Quantity.V_PU), mag, tick)
        for branch, (p, q, i) in grid.branch_flow.items():
            write(element_key(branch, Quantity.P_MW), p, tick)
            write(element_key(branch, Quantity.Q_MVAR), q, tick)
            write(element_key(branch, Quantity.I_A), i, tick)
        for switch, state in grid.switch_state.items():
            write(element_key(switch, Quantity.STATE), state.value, tick)
        for load_id, p in grid.load_p_mw.items():
            write(element_key(load_id, Quantity.P_MW), p, tick)
        for load_id, q in grid.load_q_mvar.items():
            write(element_key(load_id, Quantity.Q_MVAR), q, tick)
        for source_id, p in grid.source_p_mw.items():
            write(element_key(source_id, Quantity.P_MW), p, tick)

    def _phase_network(self, tick: int) -> int:
        deliveries = self.net.step(tick)
        for host, frame in deliveries:
            # normal devices see traffic addressed to them; a compromised
            # host's relay additionally sees the diverted flows
            own_ip = self.net.hosts[host].ip
            device = self._devices_by_host.get(host)
            if device is not None and frame.dst_ip == own_ip:
                device.deliver(frame)
            attacker = self._attacker_by_host.get(host)
            if attacker is not None:
                attacker.deliver(frame)
        return len(deliveries)

    def _phase_scans(self, tick: int) -> None:
        for ied in self.ieds:
            ied.scan(_DeviceContext(self, ied.name, tick))
        for plc in self.plcs:
            plc.scan(_DeviceContext(self, plc.name, tick))
        if self.gateway is not None:
            self.gateway.scan(_DeviceContext(self, self.gateway.name, tick))
        for attacker in self.attackers:
            attacker.scan(_DeviceContext(self, attacker.host, tick))

    def run_tick(self) -> TickReport:
        started = time.perf_counter()
        interval = None
        if self._last_tick_started is not None:
            interval = (started - self._last_tick_started) * 1000.0
        self._last_tick_started = started

        tick = self.tick + 1
        events_before = self.events.count()
        self._phase_commands(tick)
        self._phase_solve(tick)
        self._phase_publish(tick)
        delivered = self._phase_network(tick)
        self._phase_scans(tick)
        self.tick = tick

        report = TickReport(
            tick=tick,
            iterations=self.grid.iterations,
            converged=self.grid.converged,
            frames_delivered=delivered,
            events=self.events.count() - events_before,
            duration_ms=(time.perf_counter() - started) * 1000.0,
            interval_ms=interval,
        )
        self.tick_reports.append(report)
        self.latest_snapshot = self._build_snapshot(report)
        self._snapshot_history[tick] = self.latest_snapshot
        if len(self._snapshot_history) > 512:
            oldest = next(iter(self._snapshot_history))
            del self._snapshot_history[oldest]
        return report

    def snapshot_at(self, tick: int) -> dict | None:
        return self._snapshot_history.get(tick)

    # -- run control -----------------------------------------------------------

    def pause(self) -> None:
        self._paused.set()

    def resume(self) -> None:
        self._paused.clear()

    def stop(self) -> None:
        self._stop.set()

    @property
    def paused(self) -> bool:
        return self._paused.is_set()

    def run(self, ticks: int, realtime: bool = False) -> list[TickReport]:
        """Run up to `ticks` ticks; realtime mode paces to tick_ms wall clock."""
        tick_s = self.model.tick_ms / 1000.0
        start = time.perf_counter()
        done = 0
        self._last_tick_started = None
        while done < ticks and not self._stop.is_set():
            if self._paused.is_set():
                time.sleep(0.005)
                continue
            self.run_tick()
            done += 1
            if realtime:
                deadline = start + done * tick_s
                delay = deadline - time.perf_counter()
                if delay > 0:
                    time.sleep(delay)
        return self.tick_reports[-done:] if done else []

    def step_once(self) -> TickReport | None:
        if not self._paused.is_set():
            return None
        return self.run_tick()

    # -- snapshots -----------------------------------------------------------

    def _build_snapshot(self, report: TickReport) -> dict:
        grid = self.grid
        points = self.gateway.live_values() if self.gateway is not None else {}
        return {
            "tick": report.tick,
            "converged": grid.converged,
            "iterations": grid.iterations,
            "bus_voltage": {b: {"v_pu": v, "angle_rad": a}
                            for b, (v, a) in grid.bus_voltage.items()},
            "branch_flow": {b: {"p_mw": p, "q_mvar": q, "i_a": i}
                            for b, (p, q, i) in grid.branch_flow.items()},
            "switch_state": {s: st.value for s, st in grid.switch_state.items()},
            "energized": dict(grid.energized),
            "source_p_mw": dict(grid.source_p_mw),
            "load_p_mw": dict(grid.load_p_mw),
            "points": points,
            "frames_delivered": report.frames_delivered,
            "duration_ms": report.duration_ms,
        }

    def point_table(self) -> dict:
        if self.gateway is None:
            return {"format_version": 1, "points": []}
        return point_table_document(self.gateway.spec, self.model.ieds, self.model.plcs)

    def export_snapshot(self) -> dict:
        """Full simulation state for exercise replay."""
        return {
            "tick": self.tick,
            "grid": self.latest_snapshot,
            "injections": {
                "load_p_mw": dict(self._injections.load_p_mw),
                "load_q_mvar": dict(self._injections.load_q_mvar),
                "source_p_mw": dict(self._injections.source_p_mw),
            },
            "arp_caches": {host: {ip: mac for ip, (mac, _t) in sorted(cache.items())}
                           for host, cache in sorted(self.net.arp.items())},
            "ied_state": {
                ied.name: {
                    "latched": dict(ied.latched),
                    "goose_guard_state": dict(ied.goose_guard_state),
                } for ied in self.ieds},
            "plc_state": {plc.name: dict(plc.store) for plc in self.plcs},
            "points": self.gateway.live_values() if self.gateway else {},
        }

    def export_tick_reports(self) -> str:
        lines = [json.dumps({"format_version": 1})]
        for r in self.tick_reports:
            lines.append(json.dumps({
                "tick": r.tick, "iterations": r.iterations, "converged": r.converged,
                "frames_delivered": r.frames_delivered, "events": r.events,
                "duration_ms": round(r.duration_ms, 3),
                "interval_ms": round(r.interval_ms, 3) if r.interval_ms is not None else None,
            }))
        return "\n".join(lines) + "\n"
