"""Electrical network construction and steady-state power flow."""

from sgml.powerflow.network import ElectricalNetwork, build_network
from sgml.powerflow.solver import (
    GridState,
    Injections,
    SolverSettings,
    apply_timeline,
    injections_from_model,
    solve,
)

__all__ = [
    "ElectricalNetwork", "GridState", "Injections", "SolverSettings",
    "apply_timeline", "build_network", "injections_from_model", "solve",
]
