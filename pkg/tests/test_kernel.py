import threading
import time

import pytest

from sgml.kernel import Kernel, ModelInvalidError
from sgml.model import (
    ControlBinding,
    CyberPhysicalMap,
    IedSpec,
    MeasurementBinding,
    ProtectionThresholds,
    Quantity,
    ScenarioTimeline,
    SwitchState,
    TimelineEntry,
    TimelineField,
    element_key,
)
from tests.conftest import breaker, line, load, mini_range, slack, small_model
from tests.test_devices import feeder_substation, ptoc_ied


def basic_kernel(timeline=None, **kwargs):
    model = mini_range(feeder_substation(), ieds=[ptoc_ied()], timeline=timeline, **kwargs)
    return Kernel(model)


class TestConstruction:
    def test_invalid_model_rejected(self):
        bad = mini_range(feeder_substation(),
                         ieds=[IedSpec(name="P1", logical_nodes=frozenset({"PTOC"}))])
        with pytest.raises(ModelInvalidError):
            Kernel(bad)


class TestPhases:
    def test_constant_inputs_reach_fixed_point(self):
        kernel = basic_kernel()
        kernel.run_tick()
        kernel.run_tick()
        first = kernel.grid
        kernel.run_tick()
        second = kernel.grid
        assert first.bus_voltage == second.bus_voltage
        assert first.branch_flow == second.branch_flow

    def test_queued_breaker_command_applies_next_tick(self):
        kernel = basic_kernel()
        kernel.run_tick()
        assert kernel.grid.switch_state["CB1"] == SwitchState.CLOSED
        kernel._queue_switch_command("CB1", SwitchState.OPEN, "test")
        report = kernel.run_tick()
        assert kernel.grid.switch_state["CB1"] == SwitchState.OPEN
        assert kernel.grid.energized["B2"] is False
        assert report.converged

    def test_store_reads_see_current_tick_after_publish(self):
        kernel = basic_kernel()
        kernel.run_tick()
        ied = kernel.ieds[0]
        # phase isolation: measurements the IED captured during its scan
        # carry the tick that was published in phase 3 of the same tick
        for path, (value, tick) in ied.last_measurements.items():
            assert tick == kernel.tick
        entry = kernel.store.read(element_key("L1", Quantity.I_A))
        assert entry is not None and entry[1] == kernel.tick

    def test_every_bound_key_exists_after_first_tick(self):
        kernel = basic_kernel()
        kernel.run_tick()
        for ied in kernel.model.ieds:
            for m in ied.bindings.measurements:
                assert kernel.store.read(element_key(m.element, m.quantity)) is not None
            for c in ied.bindings.controls:
                assert kernel.store.read(element_key(c.switch, Quantity.STATE)) is not None

    def test_timeline_change_visible_to_devices_next_scan(self):
        timeline = ScenarioTimeline((TimelineEntry(2, "LD1", TimelineField.LOAD_P, 7.0),))
        kernel = basic_kernel(timeline=timeline)
        for _ in range(2):
            kernel.run_tick()
        # applied at tick 2 phase 1, published phase 3, seen by scan at tick 2
        i_now = kernel.ieds[0].last_measurements["MMXU1.A"][0]
        assert i_now == pytest.approx(kernel.grid.branch_flow["L1"][2])


class TestSolverFailurePolicy:
    def test_nonconvergence_keeps_previous_state_and_continues(self):
        timeline = ScenarioTimeline((
            TimelineEntry(3, "LD1", TimelineField.LOAD_P, 5000.0),  # impossible load
        ))
        kernel = basic_kernel(timeline=timeline)
        for _ in range(3):
            kernel.run_tick()
        v_before = kernel.grid.bus_voltage["B2"]
        reports = [kernel.run_tick() for _ in range(4)]
        # all ticks completed despite failures
        assert [r.tick for r in reports] == [3, 4, 5, 6]
        solver_events = [e for e in kernel.events.entries() if e["category"] == "solver"]
        assert len(solver_events) >= 4
        assert kernel.grid.converged is False
        assert kernel.grid.bus_voltage["B2"] == v_before  # previous solution retained


class TestCommands:
    def test_control_point_command_routed_through_gateway(self):
        from sgml.model import DataPoint, DataSource, PointKind, ScadaProtocol, ScadaSpec
        scada = ScadaSpec(
            data_sources=(DataSource("ied", "P1", ScadaProtocol.MMS),),
            data_points=(
                DataPoint("cb1_cmd", "ied", "XCBR1.Pos", PointKind.CONTROL, "CB1", ""),
                DataPoint("i_l1", "ied", "MMXU1.A", PointKind.MEASUREMENT, "L1 A", "A"),
            ),
        )
        model = mini_range(feeder_substation(), ieds=[ptoc_ied()], scada=scada,
                           extra_hosts=[("GW", "scada")])
        kernel = Kernel(model)
        kernel.run_tick()
        accepted, detail = kernel.submit_command("hmi", {
            "type": "control", "point": "cb1_cmd", "value": "open"})
        assert accepted, detail
        # command -> gateway operate -> IED -> physical within 3 ticks of apply
        for _ in range(4):
            kernel.run_tick()
        assert kernel.grid.switch_state["CB1"] == SwitchState.OPEN
        operates = [r for r in kernel.net.frame_log if r["verb"] == "operate"]
        assert operates and operates[0]["src"] == "GW" and operates[0]["dst"] == "P1"

    def test_control_on_measurement_point_rejected(self):
        from sgml.model import DataPoint, DataSource, PointKind, ScadaProtocol, ScadaSpec
        scada = ScadaSpec(
            data_sources=(DataSource("ied", "P1", ScadaProtocol.MMS),),
            data_points=(DataPoint("i_l1", "ied", "MMXU1.A", PointKind.MEASUREMENT,
                                   "L1 A", "A"),),
        )
        model = mini_range(feeder_substation(), ieds=[ptoc_ied()], scada=scada,
                           extra_hosts=[("GW", "scada")])
        kernel = Kernel(model)
        accepted, detail = kernel.submit_command("hmi", {
            "type": "control", "point": "i_l1", "value": 1.0})
        assert not accepted and "not writable" in detail

    def test_unknown_targets_rejected(self):
        kernel = basic_kernel()
        accepted, _ = kernel.submit_command("hmi", {"type": "breaker",
                                                    "switch": "GHOST", "action": "open"})
        assert not accepted
        accepted, _ = kernel.submit_command("hmi", {"type": "nonsense"})
        assert not accepted

    def test_first_command_per_switch_per_tick_wins(self):
        kernel = basic_kernel()
        kernel.run_tick()
        assert kernel._queue_switch_command("CB1", SwitchState.OPEN, "a") is True
        assert kernel._queue_switch_command("CB1", SwitchState.CLOSED, "b") is False
        kernel.run_tick()
        assert kernel.grid.switch_state["CB1"] == SwitchState.OPEN


class TestRunControl:
    def test_headless_run_completes(self):
        kernel = basic_kernel()
        reports = kernel.run(ticks=20, realtime=False)
        assert len(reports) == 20
        assert kernel.tick == 19

    def test_zero_ticks_clean_exit(self):
        kernel = basic_kernel()
        assert kernel.run(ticks=0) == []
        assert kernel.tick == -1

    def test_realtime_paces_to_wall_clock(self):
        model = mini_range(feeder_substation(), ieds=[ptoc_ied()], tick_ms=20)
        kernel = Kernel(model)
        started = time.perf_counter()
        kernel.run(ticks=10, realtime=True)
        elapsed = time.perf_counter() - started
        assert elapsed >= 0.2  # pacing lower bound: 10 ticks x 20 ms

    def test_pause_resume_loses_no_ticks(self):
        kernel = basic_kernel()
        done = []

        def worker():
            done.extend(kernel.run(ticks=30, realtime=False))

        kernel.pause()
        thread = threading.Thread(target=worker)
        thread.start()
        time.sleep(0.05)
        assert kernel.tick == -1  # paused before the first tick
        kernel.resume()
        thread.join(timeout=5)
        assert kernel.tick == 29
        assert [r.tick for r in done] == list(range(30))

    def test_single_step_while_paused(self):
        kernel = basic_kernel()
        kernel.run(ticks=5)
        kernel.pause()
        report = kernel.step_once()
        assert report is not None and report.tick == 5
        kernel.resume()
        assert kernel.step_once() is None


class TestDeterminism:
    def _run(self, ticks=40):
        timeline = ScenarioTimeline((
            TimelineEntry(5, "LD1", TimelineField.LOAD_P, 9.0),
            TimelineEntry(20, "LD1", TimelineField.LOAD_P, 4.0),
        ))
        kernel = basic_kernel(timeline=timeline)
        kernel.run(ticks=ticks)
        return kernel.events.export(), kernel.net.export_frame_log()

    def test_identical_runs_identical_logs(self):
        a_events, a_frames = self._run()
        b_events, b_frames = self._run()
        assert a_events == b_events
        assert a_frames == b_frames


class TestSnapshot:
    def test_snapshot_is_single_tick_consistent(self):
        kernel = basic_kernel()
        kernel.run(ticks=5)
        snap = kernel.latest_snapshot
        assert snap["tick"] == kernel.tick
        assert set(snap["bus_voltage"]) == {b.id for b in kernel.model.substation.buses}

    def test_export_snapshot_contains_device_and_arp_state(self):
        kernel = basic_kernel()
        kernel.run(ticks=5)
        full = kernel.export_snapshot()
        assert "arp_caches" in full and "ied_state" in full
        assert full["tick"] == kernel.tick
