"""Pure numpy implementation of the hot kernels.

Mirrors the compiled extension's primitive interface: influence functions and
weight schemes arrive as integer codes plus parameters so either backend can
be swapped in without touching the callers.

Influence codes: 0 constant (param = value), 1 inverse power (param = beta),
2 table (table_s / table_psi arrays). Scheme codes: 0 classical, 1 normalized,
2 constant coupling (kappa).
"""

from __future__ import annotations

import numpy as np

OK = -1
DEGENERATE = -2


def psi_values(kind, param, table_s, table_psi, dist):
    if kind == 0:
        return np.full_like(dist, param)
    if kind == 1:
        return (1.0 + dist * dist) ** (-param)
    return np.clip(np.interp(dist, table_s, table_psi), 0.0, 1.0)


def weights(pos, kind, param, table_s, table_psi, scheme, kappa):
    """N x N weight matrix for one position frame; raises nothing, returns
    (W, status) with status OK or DEGENERATE."""
    n = pos.shape[0]
    if scheme == 2:
        w = np.full((n, n), kappa)
        np.fill_diagonal(w, 0.0)
        return w, OK
    diff = pos[None, :, :] - pos[:, None, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    w = psi_values(kind, param, table_s, table_psi, dist)
    if scheme == 0:
        return w / n, OK
    rows = w.sum(axis=1)
    if np.any(rows <= 0.0):
        return w, DEGENERATE
    w = w / rows[:, None]
    # second pass so each row re-sums to 1 within a couple ulp
    w = w / w.sum(axis=1)[:, None]
    return w, OK


def accelerations(w, vel):
    """Alignment force sum_j w_ij (v_j - v_i) for every agent."""
    return w @ vel - w.sum(axis=1)[:, None] * vel


def pairwise_diameter(arr):
    """Largest Euclidean distance between any two rows of an (N, d) array."""
    diff = arr[None, :, :] - arr[:, None, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    return float(np.sqrt(d2.max()))


def _accel_at(x, v, kind, param, table_s, table_psi, scheme, kappa):
    w, status = weights(x, kind, param, table_s, table_psi, scheme, kappa)
    if status == DEGENERATE:
        return None
    return accelerations(w, v)


def integrate_arrays(X, V, A, xd_init, vd_init, h, m, n_steps,
                     kind, param, table_s, table_psi, scheme, kappa, guard):
    """Advance the delayed alignment dynamics with fixed-step RK4.

    X, V, A are (m + 1 + n_steps, N, d) with frames 0..m prefilled; xd_init
    and vd_init hold the initial interval's own derivative estimates, used for
    interpolation left of t = 0. Frames are filled in place.

    Returns -1 on success, -2 on a degenerate normalized weight row, or the
    index of the first frame whose velocities broke the guard.
    """
    guard2 = guard * guard
    # right-hand side at t = 0 comes from the frame one delay back
    a0 = _accel_at(X[0], V[0], kind, param, table_s, table_psi, scheme, kappa)
    if a0 is None:
        return DEGENERATE
    A[m] = a0
    c_half = 0.125 * h
    for k in range(m, m + n_steps):
        s = k - m
        # midpoint of segment [s, s+1] via Hermite at theta = 1/2; the
        # derivative pair depends on which side of t = 0 the segment lies
        if s + 1 <= m:
            dxl, dxr = xd_init[s], xd_init[s + 1]
            dvl, dvr = vd_init[s], vd_init[s + 1]
        else:
            dxl, dxr = V[s], V[s + 1]
            dvl, dvr = A[s], A[s + 1]
        x_mid = 0.5 * (X[s] + X[s + 1]) + c_half * (dxl - dxr)
        v_mid = 0.5 * (V[s] + V[s + 1]) + c_half * (dvl - dvr)
        g2 = _accel_at(x_mid, v_mid, kind, param, table_s, table_psi, scheme, kappa)
        if g2 is None:
            return DEGENERATE
        g3 = _accel_at(X[s + 1], V[s + 1], kind, param, table_s, table_psi, scheme, kappa)
        if g3 is None:
            return DEGENERATE
        g1 = A[k]
        X[k + 1] = X[k] + h * V[k] + (h * h / 6.0) * (g1 + 2.0 * g2)
        V[k + 1] = V[k] + (h / 6.0) * (g1 + 4.0 * g2 + g3)
        A[k + 1] = g3
        vmax2 = float(np.einsum("ik,ik->i", V[k + 1], V[k + 1]).max())
        if not vmax2 <= guard2:  # catches NaN as well
            return k + 1
    return OK
