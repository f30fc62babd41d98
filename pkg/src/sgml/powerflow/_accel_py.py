"""Pure-numpy implementation of the solver hot kernels.

Used when the compiled extension is unavailable or explicitly disabled.
Same contract as sgml.powerflow._accel: dense G/B matrices in, injections
and the reduced Jacobian out.
"""

from __future__ import annotations

import numpy as np


def calc_injections(g: np.ndarray, b: np.ndarray, vm: np.ndarray, va: np.ndarray):
    """Active/reactive injections at every node for the voltage state."""
    theta = va[:, None] - va[None, :]
    ct = np.cos(theta)
    st = np.sin(theta)
    vv = vm[:, None] * vm[None, :]
    p = np.sum(vv * (g * ct + b * st), axis=1)
    q = np.sum(vv * (g * st - b * ct), axis=1)
    return p, q


def build_jacobian(g: np.ndarray, b: np.ndarray, vm: np.ndarray, va: np.ndarray,
                   p: np.ndarray, q: np.ndarray,
                   pvpq: np.ndarray, pq: np.ndarray) -> np.ndarray:
    """Polar-form Newton Jacobian restricted to the free variables.

    Rows: dP for pvpq nodes then dQ for pq nodes.
    Columns: dtheta for pvpq nodes then dVm for pq nodes.
    """
    theta = va[:, None] - va[None, :]
    ct = np.cos(theta)
    st = np.sin(theta)
    vv = vm[:, None] * vm[None, :]

    h = vv * (g * st - b * ct)          # dP/dtheta off-diagonal
    n = vm[:, None] * (g * ct + b * st)  # dP/dVm off-diagonal
    m = -vv * (g * ct + b * st)          # dQ/dtheta off-diagonal
    l = vm[:, None] * (g * st - b * ct)  # dQ/dVm off-diagonal

    diag = np.arange(len(vm))
    h[diag, diag] = -q - b.diagonal() * vm * vm
    n[diag, diag] = p / vm + g.diagonal() * vm
    m[diag, diag] = p - g.diagonal() * vm * vm
    l[diag, diag] = q / vm - b.diagonal() * vm

    top = np.hstack((h[np.ix_(pvpq, pvpq)], n[np.ix_(pvpq, pq)]))
    bottom = np.hstack((m[np.ix_(pq, pvpq)], l[np.ix_(pq, pq)]))
    return np.vstack((top, bottom))
