import math
import random

import numpy as np
import pytest

from sgml.model import SwitchState, normalize_substation
from sgml.powerflow import (
    SolverSettings,
    build_network,
    injections_from_model,
    solve,
)
from tests.conftest import breaker, generator, line, load, slack, small_model
from tests.oracles.nr_oracle import (
    branch_flow_reference,
    electrical_islands,
    fuse_buses,
    solve_reference,
)


def run(model, tick=0, settings=SolverSettings()):
    net = build_network(model)
    return solve(net, injections_from_model(model), model, settings, tick)


class TestTopologyProcessing:
    def test_closed_breaker_fuses_nodes_but_keeps_buses(self):
        # line B1-B2 plus a breaker B2-B3: three buses stay reported,
        # two electrical connections, two nodes after fusing
        m = small_model(
            ["B1", "B2", "B3"],
            branches=[line("L1", "B1", "B2")],
            switches=[breaker("CB1", "B2", "B3")],
            sources=[slack("GRID", "B1")],
        )
        net = build_network(m)
        assert len(net.bus_ids) == 3
        assert len(net.branches) + len(m.switches) == 2
        assert net.n_nodes == 2
        # matches the union-find oracle
        groups = fuse_buses(m)
        assert len(set(groups.values())) == 2
        assert groups["B2"] == groups["B3"]

    def test_open_breaker_isolates(self):
        m = small_model(
            ["B1", "B2", "B3"],
            branches=[line("L1", "B1", "B2")],
            switches=[breaker("CB1", "B2", "B3", SwitchState.OPEN)],
            sources=[slack("GRID", "B1")],
            loads=[load("LD1", "B3", 1.0)],
        )
        net = build_network(m)
        assert net.n_nodes == 3
        state = run(m)
        assert state.energized["B3"] is False
        assert state.bus_voltage["B3"] == (0.0, 0.0)
        assert state.load_p_mw["LD1"] == 0.0

    def test_sourceless_island_marked_dark_not_error(self):
        m = small_model(
            ["B1", "B2"],
            branches=[line("L1", "B1", "B2")],
            loads=[load("LD1", "B2", 1.0)],
        )
        net = build_network(m)
        assert not net.island_energized.any()
        state = run(m)
        assert state.converged is True
        assert all(not e for e in state.energized.values())

    def test_island_count_matches_oracle(self):
        m = small_model(
            ["B1", "B2", "B3", "B4"],
            branches=[line("L1", "B1", "B2"), line("L2", "B3", "B4")],
            sources=[slack("G1", "B1")],
        )
        net = build_network(m)
        groups = fuse_buses(m)
        islands = electrical_islands(m, groups)
        assert net.n_islands == len(set(islands.values()))
        assert net.n_islands == 2


class TestSolve:
    def test_flat_network_converges_first_evaluation(self):
        m = small_model(
            ["B1", "B2"],
            branches=[line("L1", "B1", "B2")],
            sources=[slack("GRID", "B1")],
        )
        state = run(m)
        assert state.converged
        assert state.iterations == 1
        for mag, ang in state.bus_voltage.values():
            assert mag == pytest.approx(1.0, abs=1e-12)
            assert ang == pytest.approx(0.0, abs=1e-12)
        for p, q, i in state.branch_flow.values():
            assert p == pytest.approx(0.0, abs=1e-9)
            assert i == pytest.approx(0.0, abs=1e-9)

    def test_two_bus_case_frozen_oracle_values(self):
        # slack 1.0 pu, line r=0.01 x=0.1 pu, load 50 MW + 20 MVAr
        m = small_model(
            ["B1", "B2"],
            branches=[line("L1", "B1", "B2", r=0.01, x=0.1)],
            loads=[load("LD1", "B2", 50.0, 20.0)],
            sources=[slack("GRID", "B1")],
        )
        state = run(m)
        assert state.converged
        v2, a2 = state.bus_voltage["B2"]
        # frozen from the finite-difference reference implementation
        assert v2 == pytest.approx(0.9730913474354073, abs=1e-6)
        assert a2 == pytest.approx(-0.0493473577340693, abs=1e-6)
        p, q, i_a = state.branch_flow["L1"]
        assert p == pytest.approx(50.306260351123115, abs=1e-4)
        assert q == pytest.approx(23.06260351123121, abs=1e-4)
        assert i_a == pytest.approx(2904.638406646219, rel=1e-6)

    def test_open_feeder_sheds_load_from_slack(self):
        def build(state):
            return small_model(
                ["B1", "B2", "B3"],
                branches=[line("L1", "B1", "B2")],
                switches=[breaker("CB1", "B2", "B3", state)],
                loads=[load("LD1", "B3", 30.0, 10.0)],
                sources=[slack("GRID", "B1")],
            )

        closed = run(build(SwitchState.CLOSED))
        opened = run(build(SwitchState.OPEN))
        assert opened.energized["B3"] is False
        shed = closed.source_p_mw["GRID"] - opened.source_p_mw["GRID"]
        # shed equals the load plus its (small) feeder loss
        assert shed == pytest.approx(30.0, abs=0.5)
        assert opened.source_p_mw["GRID"] == pytest.approx(0.0, abs=1e-6)

    def test_pv_bus_holds_setpoint(self):
        m = small_model(
            ["B1", "B2", "B3"],
            branches=[line("L1", "B1", "B2"), line("L2", "B2", "B3")],
            loads=[load("LD1", "B3", 40.0, 10.0)],
            sources=[slack("GRID", "B1"), generator("GEN1", "B2", 20.0, v=1.02)],
        )
        state = run(m)
        assert state.converged
        assert state.bus_voltage["B2"][0] == pytest.approx(1.02, abs=1e-9)

    def test_non_convergence_reports_not_raises(self):
        m = small_model(
            ["B1", "B2"],
            branches=[line("L1", "B1", "B2", r=0.01, x=0.1)],
            loads=[load("LD1", "B2", 2000.0, 900.0)],  # far beyond transfer limit
            sources=[slack("GRID", "B1")],
        )
        state = run(m, settings=SolverSettings(max_iterations=15))
        assert state.converged is False
        assert state.diagnostic


def _random_radial_model(rng: random.Random, n_buses: int):
    buses = [f"B{i}" for i in range(1, n_buses + 1)]
    branches = []
    for i in range(1, n_buses):
        parent = rng.randrange(i)
        branches.append(line(f"L{i}", buses[parent], buses[i],
                             r=rng.uniform(0.004, 0.02), x=rng.uniform(0.03, 0.12)))
    loads = [load(f"LD{i}", buses[i], rng.uniform(2.0, 25.0), rng.uniform(0.5, 8.0))
             for i in range(1, n_buses)]
    sources = [slack("GRID", buses[0], v=rng.uniform(0.99, 1.03))]
    if n_buses >= 4 and rng.random() < 0.7:
        sources.append(generator("GEN1", buses[n_buses - 1], rng.uniform(3.0, 15.0),
                                 v=rng.uniform(0.99, 1.02)))
    return small_model(buses, branches=branches, loads=loads, sources=sources)


class TestOracleEquivalence:
    @pytest.mark.parametrize("seed", range(12))
    def test_random_networks_match_reference(self, seed):
        rng = random.Random(1000 + seed)
        m = _random_radial_model(rng, rng.randint(2, 5))
        state = run(m, settings=SolverSettings(tolerance=1e-8))
        ref = solve_reference(m, tol=1e-11)
        assert state.converged
        for bid, (mag, ang) in state.bus_voltage.items():
            assert mag == pytest.approx(abs(ref[bid]), abs=1e-6), bid
        ref_flows = branch_flow_reference(m, ref)
        for brid, (p, q, _) in state.branch_flow.items():
            assert p == pytest.approx(ref_flows[brid][0], abs=1e-4), brid

    def test_switched_network_matches_reference(self):
        m = small_model(
            ["B1", "B2", "B3", "B4"],
            branches=[line("L1", "B1", "B2"), line("L2", "B3", "B4")],
            switches=[breaker("CB1", "B2", "B3")],
            loads=[load("LD1", "B4", 25.0, 7.0)],
            sources=[slack("GRID", "B1")],
        )
        state = run(m, settings=SolverSettings(tolerance=1e-8))
        ref = solve_reference(m, tol=1e-11)
        for bid, (mag, _) in state.bus_voltage.items():
            assert mag == pytest.approx(abs(ref[bid]), abs=1e-6)
        # fused pair shares one voltage
        assert state.bus_voltage["B2"] == state.bus_voltage["B3"]


class TestInvariants:
    def test_power_balance_per_island(self):
        rng = random.Random(7)
        for _ in range(8):
            m = _random_radial_model(rng, rng.randint(3, 5))
            state = run(m)
            assert state.converged
            gen = sum(state.source_p_mw.values())
            used = sum(state.load_p_mw.values())
            losses = 0.0
            net = build_network(m)
            for k, br in enumerate(net.branches):
                p_from, q_from, _ = state.branch_flow[br.id]
                a, b = net.branch_nodes[k]
                # recompute to-end power for the loss sum
                va_ = state.bus_voltage[br.from_bus]
                vb_ = state.bus_voltage[br.to_bus]
                vf = va_[0] * np.exp(1j * va_[1])
                vt = vb_[0] * np.exp(1j * vb_[1])
                if vf == 0 or a == b:
                    continue
                y = 1.0 / complex(br.r_pu, br.x_pu)
                s_to = vt * np.conj((vt - vf) * y) * 100.0
                losses += p_from + s_to.real
            assert gen - used - losses == pytest.approx(0.0, abs=1e-4)

    def test_losses_nonnegative(self):
        rng = random.Random(21)
        for _ in range(6):
            m = _random_radial_model(rng, 5)
            state = run(m)
            for br in m.branches:
                p_from, _, _ = state.branch_flow[br.id]
                va_ = state.bus_voltage[br.from_bus]
                vb_ = state.bus_voltage[br.to_bus]
                vf = va_[0] * np.exp(1j * va_[1])
                vt = vb_[0] * np.exp(1j * vb_[1])
                if vf == 0:
                    continue
                y = 1.0 / complex(br.r_pu, br.x_pu)
                s_to = vt * np.conj((vt - vf) * y) * 100.0
                assert p_from + s_to.real >= -1e-9

    def test_bus_order_invariance(self):
        rng = random.Random(5)
        m = _random_radial_model(rng, 5)
        base = run(m)
        perm = list(m.buses)
        rng.shuffle(perm)
        from dataclasses import replace
        permuted = normalize_substation(replace(m, buses=tuple(perm)))
        other = run(permuted)
        for bid in base.bus_voltage:
            assert abs(base.bus_voltage[bid][0] - other.bus_voltage[bid][0]) < 1e-9

    def test_backend_flag_reports(self):
        from sgml.powerflow import accel
        assert accel.BACKEND in ("cython", "python")


class TestTimeline:
    def test_entries_applied_only_at_their_tick(self):
        from sgml.model import ScenarioTimeline, TimelineEntry, TimelineField
        from sgml.powerflow import apply_timeline, injections_from_model

        m = small_model(
            ["B1", "B2"],
            branches=[line("L1", "B1", "B2")],
            loads=[load("LD1", "B2", 10.0)],
            sources=[slack("GRID", "B1")],
        )
        tl = ScenarioTimeline((
            TimelineEntry(50, "LD1", TimelineField.LOAD_P, 2.0),
            TimelineEntry(60, "CB9", TimelineField.SWITCH_STATE, SwitchState.OPEN),
        ))
        inj = injections_from_model(m)
        same, switches, delta = apply_timeline(inj, tl, 10)
        assert same is inj and not switches and not delta
        inj2, switches, delta = apply_timeline(inj, tl, 50)
        assert inj2.load_p_mw["LD1"] == 2.0
        assert inj.load_p_mw["LD1"] == 10.0  # original untouched
        assert len(delta) == 1
        _, switches, _ = apply_timeline(inj, tl, 60)
        assert switches == [("CB9", SwitchState.OPEN)]
