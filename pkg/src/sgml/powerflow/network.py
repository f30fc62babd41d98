"""Topology processing: from the switched single-line model to a solvable network.

A closed switch fuses its two buses into one electrical node; an open
switch contributes nothing. Buses are never dropped: every bus keeps its
voltage entry in the results, fused buses simply share a node. Islands are
connected components of the node graph under impedance branches; an island
is energized when it contains at least one source, and its slack is the
grid slack if present, otherwise the first source by (kind, id) order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sgml.model import (
    Branch,
    SourceKind,
    SubstationModel,
    SwitchState,
)

_SLACK_PREFERENCE = {
    SourceKind.GRID_SLACK: 0,
    SourceKind.GENERATOR: 1,
    SourceKind.PV: 2,
    SourceKind.BATTERY: 3,
}


@dataclass(frozen=True)
class ElectricalNetwork:
    """Admittance-ready structure derived from one SubstationModel state."""

    bus_ids: tuple[str, ...]           # sorted
    bus_kv: np.ndarray                 # nominal kV per bus
    node_of_bus: np.ndarray            # bus index -> electrical node
    n_nodes: int
    node_kv: np.ndarray                # representative nominal kV per node
    branches: tuple[Branch, ...]       # impedance branches, model order
    branch_nodes: np.ndarray           # (nb, 2) node endpoints
    island_of_node: np.ndarray
    n_islands: int
    island_energized: np.ndarray       # bool per island
    slack_node_of_island: dict[int, int]
    slack_source_of_island: dict[int, str]
    pv_setpoint: dict[int, float]      # node -> voltage setpoint (non-slack sources)

    def bus_index(self, bus_id: str) -> int:
        return self.bus_ids.index(bus_id)


def build_network(model: SubstationModel) -> ElectricalNetwork:
    """Collapse switches, identify islands and assign per-island slacks."""
    bus_ids = tuple(sorted(b.id for b in model.buses))
    index = {bid: i for i, bid in enumerate(bus_ids)}
    kv_by_bus = {b.id: b.nominal_kv for b in model.buses}
    bus_kv = np.array([kv_by_bus[b] for b in bus_ids], dtype=float)
    n = len(bus_ids)

    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for sw in model.switches:
        if sw.state == SwitchState.CLOSED:
            a, b = find(index[sw.from_bus]), find(index[sw.to_bus])
            if a != b:
                parent[max(a, b)] = min(a, b)

    # node ids numbered by smallest member bus index
    roots = sorted({find(i) for i in range(n)})
    node_index = {r: k for k, r in enumerate(roots)}
    node_of_bus = np.array([node_index[find(i)] for i in range(n)], dtype=np.intp)
    n_nodes = len(roots)
    node_kv = np.zeros(n_nodes)
    for i in range(n - 1, -1, -1):
        node_kv[node_of_bus[i]] = bus_kv[i]

    branches = tuple(model.branches)
    branch_nodes = np.zeros((len(branches), 2), dtype=np.intp)
    for k, br in enumerate(branches):
        branch_nodes[k, 0] = node_of_bus[index[br.from_bus]]
        branch_nodes[k, 1] = node_of_bus[index[br.to_bus]]

    # islands over nodes connected by branches
    nparent = list(range(n_nodes))

    def nfind(i: int) -> int:
        while nparent[i] != i:
            nparent[i] = nparent[nparent[i]]
            i = nparent[i]
        return i

    for k in range(len(branches)):
        a, b = nfind(int(branch_nodes[k, 0])), nfind(int(branch_nodes[k, 1]))
        if a != b:
            nparent[max(a, b)] = min(a, b)
    iroots = sorted({nfind(i) for i in range(n_nodes)})
    island_index = {r: k for k, r in enumerate(iroots)}
    island_of_node = np.array([island_index[nfind(i)] for i in range(n_nodes)], dtype=np.intp)
    n_islands = len(iroots)

    slack_node: dict[int, int] = {}
    slack_source: dict[int, str] = {}
    pv_setpoint: dict[int, float] = {}
    best: dict[int, tuple] = {}
    for src in sorted(model.sources, key=lambda s: (_SLACK_PREFERENCE[s.kind], s.id)):
        node = int(node_of_bus[index[src.bus]])
        isl = int(island_of_node[node])
        key = (_SLACK_PREFERENCE[src.kind], src.id)
        if isl not in best or key < best[isl]:
            best[isl] = key
            slack_node[isl] = node
            slack_source[isl] = src.id
    energized = np.zeros(n_islands, dtype=bool)
    for isl in slack_node:
        energized[isl] = True
    for src in sorted(model.sources, key=lambda s: s.id):
        node = int(node_of_bus[index[src.bus]])
        isl = int(island_of_node[node])
        if slack_node.get(isl) != node and node not in pv_setpoint:
            pv_setpoint[node] = src.v_setpoint_pu

    return ElectricalNetwork(
        bus_ids=bus_ids,
        bus_kv=bus_kv,
        node_of_bus=node_of_bus,
        n_nodes=n_nodes,
        node_kv=node_kv,
        branches=branches,
        branch_nodes=branch_nodes,
        island_of_node=island_of_node,
        n_islands=n_islands,
        island_energized=energized,
        slack_node_of_island=slack_node,
        slack_source_of_island=slack_source,
        pv_setpoint=pv_setpoint,
    )
