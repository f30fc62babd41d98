"""Independent power-flow oracle for small networks.

Deliberately separate from sgml.powerflow: its own switch fusing (BFS, not
union-find), its own complex Ybus, and a Newton iteration whose Jacobian is
built by finite differences on the mismatch function. Slow but trustworthy
for the <= 5 bus fixtures it is used against.
"""

from __future__ import annotations

import numpy as np

from sgml.model import SourceKind, SubstationModel, SwitchState

BASE_MVA = 100.0


def fuse_buses(model: SubstationModel) -> dict[str, int]:
    """Group buses connected by closed switches; BFS flood fill."""
    neighbors: dict[str, set[str]] = {b.id: set() for b in model.buses}
    for sw in model.switches:
        if sw.state == SwitchState.CLOSED:
            neighbors[sw.from_bus].add(sw.to_bus)
            neighbors[sw.to_bus].add(sw.from_bus)
    group: dict[str, int] = {}
    next_id = 0
    for bus in sorted(neighbors):
        if bus in group:
            continue
        queue = [bus]
        group[bus] = next_id
        while queue:
            for nxt in sorted(neighbors[queue.pop()]):
                if nxt not in group:
                    group[nxt] = next_id
                    queue.append(nxt)
        next_id += 1
    return group


def electrical_islands(model: SubstationModel, group: dict[str, int]) -> dict[int, int]:
    """Connected components of fused nodes under impedance branches."""
    nodes = sorted(set(group.values()))
    neighbors: dict[int, set[int]] = {n: set() for n in nodes}
    for br in model.branches:
        a, b = group[br.from_bus], group[br.to_bus]
        if a != b:
            neighbors[a].add(b)
            neighbors[b].add(a)
    island: dict[int, int] = {}
    next_id = 0
    for node in nodes:
        if node in island:
            continue
        queue = [node]
        island[node] = next_id
        while queue:
            for nxt in sorted(neighbors[queue.pop()]):
                if nxt not in island:
                    island[nxt] = next_id
                    queue.append(nxt)
        next_id += 1
    return island


def solve_reference(model: SubstationModel, overrides: dict | None = None,
                    tol: float = 1e-9, max_iter: int = 60):
    """Reference solution: bus id -> complex voltage (0 when de-energized).

    overrides replaces load/source values: {"load_p": {...}, "load_q": {...},
    "source_p": {...}}.
    """
    overrides = overrides or {}
    load_p = {l.id: overrides.get("load_p", {}).get(l.id, l.p_mw) for l in model.loads}
    load_q = {l.id: overrides.get("load_q", {}).get(l.id, l.q_mvar) for l in model.loads}
    source_p = {s.id: overrides.get("source_p", {}).get(s.id, s.p_mw) for s in model.sources}

    group = fuse_buses(model)
    island_of = electrical_islands(model, group)
    voltages: dict[str, complex] = {b.id: 0j for b in model.buses}

    kind_rank = {SourceKind.GRID_SLACK: 0, SourceKind.GENERATOR: 1,
                 SourceKind.PV: 2, SourceKind.BATTERY: 3}
    sources_sorted = sorted(model.sources, key=lambda s: (kind_rank[s.kind], s.id))

    for isl in sorted(set(island_of.values())):
        nodes = sorted(n for n in set(group.values()) if island_of[n] == isl)
        isl_sources = [s for s in sources_sorted if island_of[group[s.bus]] == isl]
        if not isl_sources:
            continue  # stays dark
        slack = isl_sources[0]
        slack_node = group[slack.bus]
        pos = {n: i for i, n in enumerate(nodes)}
        n = len(nodes)

        ybus = np.zeros((n, n), dtype=complex)
        for br in model.branches:
            a, b = group[br.from_bus], group[br.to_bus]
            if a not in pos or b not in pos or a == b:
                continue
            y = 1.0 / complex(br.r_pu, br.x_pu)
            i, j = pos[a], pos[b]
            ybus[i, i] += y
            ybus[j, j] += y
            ybus[i, j] -= y
            ybus[j, i] -= y

        p_spec = np.zeros(n)
        q_spec = np.zeros(n)
        for l in model.loads:
            node = group[l.bus]
            if node in pos:
                p_spec[pos[node]] -= load_p[l.id] / BASE_MVA
                q_spec[pos[node]] -= load_q[l.id] / BASE_MVA

        vm = np.ones(n)
        va = np.zeros(n)
        sp = pos[slack_node]
        vm[sp] = slack.v_setpoint_pu
        pv: list[int] = []
        for s in isl_sources:
            i = pos[group[s.bus]]
            if i == sp:
                continue
            p_spec[i] += source_p[s.id] / BASE_MVA
            if i not in pv:
                pv.append(i)
                vm[i] = s.v_setpoint_pu

        free_a = [i for i in range(n) if i != sp]           # angle unknowns
        free_v = [i for i in range(n) if i != sp and i not in pv]  # magnitude unknowns

        def mismatch(vm_, va_):
            v = vm_ * np.exp(1j * va_)
            s = v * np.conj(ybus @ v)
            dp = p_spec - s.real
            dq = q_spec - s.imag
            return np.concatenate((dp[free_a], dq[free_v]))

        for _ in range(max_iter):
            f0 = mismatch(vm, va)
            if not len(f0) or np.max(np.abs(f0)) < tol:
                break
            m = len(f0)
            jac = np.zeros((m, m))
            h = 1e-7
            for col, idx in enumerate(free_a):
                va2 = va.copy()
                va2[idx] += h
                jac[:, col] = (mismatch(vm, va2) - f0) / h
            for col, idx in enumerate(free_v):
                vm2 = vm.copy()
                vm2[idx] += h
                jac[:, len(free_a) + col] = (mismatch(vm2, va) - f0) / h
            dx = np.linalg.solve(jac, f0)
            for col, idx in enumerate(free_a):
                va[idx] -= dx[col]
            for col, idx in enumerate(free_v):
                vm[idx] -= dx[len(free_a) + col]

        for bus in model.buses:
            node = group[bus.id]
            if node in pos:
                i = pos[node]
                voltages[bus.id] = vm[i] * np.exp(1j * va[i])
    return voltages


def branch_flow_reference(model: SubstationModel, voltages: dict[str, complex]):
    """From-end branch flows (P MW, Q MVAr) from an oracle voltage solution."""
    flows: dict[str, tuple[float, float]] = {}
    group = fuse_buses(model)
    for br in model.branches:
        vf = voltages[br.from_bus]
        vt = voltages[br.to_bus]
        if vf == 0 or group[br.from_bus] == group[br.to_bus]:
            flows[br.id] = (0.0, 0.0)
            continue
        y = 1.0 / complex(br.r_pu, br.x_pu)
        s = vf * np.conj((vf - vt) * y) * BASE_MVA
        flows[br.id] = (s.real, s.imag)
    return flows
