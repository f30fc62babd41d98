"""Steady-state AC power flow: full Newton iteration in polar form.

One solve per kernel tick. Each energized island is solved independently
with its own slack (angle reference); de-energized islands are excluded
from the equations entirely and reported at zero voltage. Branch flows are
evaluated from the voltage solution; current in amperes is computed at the
from end as |S| / (sqrt(3) * V_line), the convention protection thresholds
are written against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from sgml.model import SYSTEM_BASE_MVA, SubstationModel, SwitchState
from sgml.powerflow import accel
from sgml.powerflow.network import ElectricalNetwork, build_network

__all__ = ["SolverSettings", "GridState", "Injections", "solve", "build_network",
           "injections_from_model", "apply_timeline"]


@dataclass(frozen=True)
class SolverSettings:
    tolerance: float = 1e-6     # max |dP|,|dQ| mismatch in per-unit
    max_iterations: int = 20
    flat_start: bool = True

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True)
class Injections:
    """Per-element P/Q for loads and P/V for sources, in model units."""

    load_p_mw: dict[str, float]
    load_q_mvar: dict[str, float]
    source_p_mw: dict[str, float]
    source_v_pu: dict[str, float]


@dataclass
class GridState:
    tick: int
    bus_voltage: dict[str, tuple[float, float]]       # id -> (mag pu, angle rad)
    branch_flow: dict[str, tuple[float, float, float]]  # id -> (P MW, Q MVAr, I A)
    switch_state: dict[str, SwitchState]
    energized: dict[str, bool]
    source_p_mw: dict[str, float] = field(default_factory=dict)
    load_p_mw: dict[str, float] = field(default_factory=dict)
    load_q_mvar: dict[str, float] = field(default_factory=dict)
    converged: bool = True
    iterations: int = 0
    diagnostic: str = ""


def injections_from_model(model: SubstationModel) -> Injections:
    return Injections(
        load_p_mw={l.id: l.p_mw for l in model.loads},
        load_q_mvar={l.id: l.q_mvar for l in model.loads},
        source_p_mw={s.id: s.p_mw for s in model.sources},
        source_v_pu={s.id: s.v_setpoint_pu for s in model.sources},
    )


def apply_timeline(inj: Injections, timeline, tick: int):
    """Apply every timeline entry scheduled exactly at this tick.

    Returns (new injections, switch updates, applied entries). Switch
    updates are handed back instead of applied so the kernel can route them
    as physical events that protections and the HMI observe.
    """
    from sgml.model import TimelineField

    entries = [e for e in timeline.entries if e.tick == tick]
    if not entries:
        return inj, [], []
    load_p = dict(inj.load_p_mw)
    load_q = dict(inj.load_q_mvar)
    source_p = dict(inj.source_p_mw)
    switch_updates: list[tuple[str, SwitchState]] = []
    for e in entries:
        if e.field == TimelineField.LOAD_P:
            load_p[e.target] = float(e.value)
        elif e.field == TimelineField.LOAD_Q:
            load_q[e.target] = float(e.value)
        elif e.field == TimelineField.SOURCE_P:
            source_p[e.target] = float(e.value)
        else:
            switch_updates.append((e.target, e.value))
    new_inj = Injections(load_p, load_q, source_p, dict(inj.source_v_pu))
    return new_inj, switch_updates, entries


def _build_ybus(net: ElectricalNetwork, nodes: np.ndarray) -> np.ndarray:
    """Dense complex admittance matrix over the given node subset."""
    pos = {int(n): i for i, n in enumerate(nodes)}
    n = len(nodes)
    ybus = np.zeros((n, n), dtype=complex)
    for k, br in enumerate(net.branches):
        a = int(net.branch_nodes[k, 0])
        b = int(net.branch_nodes[k, 1])
        if a not in pos or b not in pos or a == b:
            continue
        y = 1.0 / complex(br.r_pu, br.x_pu)
        i, j = pos[a], pos[b]
        ybus[i, i] += y
        ybus[j, j] += y
        ybus[i, j] -= y
        ybus[j, i] -= y
    return ybus


def _solve_island(net: ElectricalNetwork, island: int, inj: Injections,
                  model: SubstationModel, settings: SolverSettings):
    """Newton solve of one energized island; returns (nodes, vm, va, iters, ok)."""
    nodes = np.array([n for n in range(net.n_nodes) if net.island_of_node[n] == island],
                     dtype=np.intp)
    pos = {int(n): i for i, n in enumerate(nodes)}
    n = len(nodes)

    p_spec = np.zeros(n)
    q_spec = np.zeros(n)
    bus_pos = {bid: pos[int(net.node_of_bus[i])]
               for i, bid in enumerate(net.bus_ids)
               if int(net.node_of_bus[i]) in pos}
    for ld in model.loads:
        if ld.bus in bus_pos:
            p_spec[bus_pos[ld.bus]] -= inj.load_p_mw[ld.id] / SYSTEM_BASE_MVA
            q_spec[bus_pos[ld.bus]] -= inj.load_q_mvar[ld.id] / SYSTEM_BASE_MVA

    slack_node = net.slack_node_of_island[island]
    slack_pos = pos[slack_node]
    slack_source = net.slack_source_of_island[island]
    vm = np.ones(n)
    va = np.zeros(n)
    vm[slack_pos] = inj.source_v_pu.get(slack_source, 1.0)

    pv_pos: list[int] = []
    for src in model.sources:
        if src.bus not in bus_pos:
            continue
        i = bus_pos[src.bus]
        if i == slack_pos:
            continue
        p_spec[i] += inj.source_p_mw[src.id] / SYSTEM_BASE_MVA
        if i not in pv_pos:
            pv_pos.append(i)
            vm[i] = inj.source_v_pu[src.id]

    pq = np.array(sorted(set(range(n)) - set(pv_pos) - {slack_pos}), dtype=np.intp)
    pvpq = np.array(sorted(set(range(n)) - {slack_pos}), dtype=np.intp)

    ybus = _build_ybus(net, nodes)
    g = np.ascontiguousarray(ybus.real)
    b = np.ascontiguousarray(ybus.imag)

    iterations = 0
    converged = False
    while iterations < settings.max_iterations:
        iterations += 1
        p_calc, q_calc = accel.calc_injections(g, b, vm, va)
        dp = p_spec[pvpq] - p_calc[pvpq]
        dq = q_spec[pq] - q_calc[pq] if len(pq) else np.zeros(0)
        mismatch = np.concatenate((dp, dq))
        if len(mismatch) == 0 or np.max(np.abs(mismatch)) < settings.tolerance:
            converged = True
            break
        jac = accel.build_jacobian(g, b, vm, va, p_calc, q_calc, pvpq, pq)
        try:
            dx = np.linalg.solve(jac, mismatch)
        except np.linalg.LinAlgError:
            break
        va[pvpq] += dx[: len(pvpq)]
        if len(pq):
            vm[pq] += dx[len(pvpq):]
    return nodes, vm, va, iterations, converged


def solve(net: ElectricalNetwork, inj: Injections, model: SubstationModel,
          settings: SolverSettings = SolverSettings(), tick: int = 0) -> GridState:
    """Solve every energized island and assemble the grid snapshot."""
    node_vm = np.zeros(net.n_nodes)
    node_va = np.zeros(net.n_nodes)
    total_iterations = 0
    converged = True
    diagnostic = ""

    for island in range(net.n_islands):
        if not net.island_energized[island]:
            continue
        nodes, vm, va, iters, ok = _solve_island(net, island, inj, model, settings)
        total_iterations = max(total_iterations, iters)
        if not ok:
            converged = False
            diagnostic = f"island {island} did not converge in {iters} iterations"
        node_vm[nodes] = vm
        node_va[nodes] = va

    bus_voltage: dict[str, tuple[float, float]] = {}
    energized: dict[str, bool] = {}
    for i, bid in enumerate(net.bus_ids):
        node = int(net.node_of_bus[i])
        isl = int(net.island_of_node[node])
        if net.island_energized[isl]:
            bus_voltage[bid] = (float(node_vm[node]), float(node_va[node]))
            energized[bid] = True
        else:
            bus_voltage[bid] = (0.0, 0.0)
            energized[bid] = False

    branch_flow: dict[str, tuple[float, float, float]] = {}
    slack_extra: dict[int, complex] = {}
    for k, br in enumerate(net.branches):
        a = int(net.branch_nodes[k, 0])
        b_ = int(net.branch_nodes[k, 1])
        isl = int(net.island_of_node[a])
        if not net.island_energized[isl] or a == b_:
            branch_flow[br.id] = (0.0, 0.0, 0.0)
            continue
        y = 1.0 / complex(br.r_pu, br.x_pu)
        va_ = node_vm[a] * np.exp(1j * node_va[a])
        vb_ = node_vm[b_] * np.exp(1j * node_va[b_])
        s_from = va_ * np.conj((va_ - vb_) * y)  # per-unit
        p_mw = s_from.real * SYSTEM_BASE_MVA
        q_mvar = s_from.imag * SYSTEM_BASE_MVA
        kv = net.node_kv[a] * node_vm[a]
        i_a = abs(s_from) * SYSTEM_BASE_MVA * 1e3 / (math.sqrt(3) * kv) if kv > 0 else 0.0
        branch_flow[br.id] = (float(p_mw), float(q_mvar), float(i_a))

    # slack source output = total island imbalance it covers
    source_p: dict[str, float] = {}
    for src in model.sources:
        source_p[src.id] = inj.source_p_mw[src.id]
    for island, src_id in net.slack_source_of_island.items():
        nodes_in = [n for n in range(net.n_nodes) if net.island_of_node[n] == island]
        if not net.island_energized[island]:
            continue
        # P at slack node = net injection computed from the solution
        node = net.slack_node_of_island[island]
        pos_nodes = np.array(nodes_in, dtype=np.intp)
        ybus = _build_ybus(net, pos_nodes)
        pos = {int(n): i for i, n in enumerate(pos_nodes)}
        vect = node_vm[pos_nodes] * np.exp(1j * node_va[pos_nodes])
        s = vect * np.conj(ybus @ vect)
        slack_p_pu = s[pos[node]].real
        # subtract other sources at the node, add loads there
        other_p = 0.0
        load_p = 0.0
        for src in model.sources:
            node_s = int(net.node_of_bus[net.bus_ids.index(src.bus)])
            if node_s == node and src.id != src_id:
                other_p += inj.source_p_mw[src.id]
        for ld in model.loads:
            node_l = int(net.node_of_bus[net.bus_ids.index(ld.bus)])
            if node_l == node:
                load_p += inj.load_p_mw[ld.id]
        source_p[src_id] = slack_p_pu * SYSTEM_BASE_MVA + load_p - other_p

    for src in model.sources:  # sources in dark islands produce nothing
        node = int(net.node_of_bus[net.bus_ids.index(src.bus)])
        if not net.island_energized[int(net.island_of_node[node])]:
            source_p[src.id] = 0.0

    switch_state = {sw.id: sw.state for sw in model.switches}
    load_p_out: dict[str, float] = {}
    load_q_out: dict[str, float] = {}
    for ld in model.loads:
        if energized.get(ld.bus, False):
            load_p_out[ld.id] = inj.load_p_mw[ld.id]
            load_q_out[ld.id] = inj.load_q_mvar[ld.id]
        else:
            load_p_out[ld.id] = 0.0
            load_q_out[ld.id] = 0.0

    return GridState(
        tick=tick,
        bus_voltage=bus_voltage,
        branch_flow=branch_flow,
        switch_state=switch_state,
        energized=energized,
        source_p_mw=source_p,
        load_p_mw=load_p_out,
        load_q_mvar=load_q_out,
        converged=converged,
        iterations=total_iterations,
        diagnostic=diagnostic,
    )
