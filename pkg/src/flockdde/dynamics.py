"""Weight-matrix evaluation, delayed right-hand side, and the fixed-step RK4
integrator (method of steps) producing a recorded trajectory.

The stage structure exploits that the velocity derivative depends only on the
state one delay in the past: per step the three distinct stage values of the
right-hand side sit at t - tau, t + h/2 - tau and t + h - tau, of which the
first and last are grid frames and the middle one is a Hermite midpoint.
Stage times therefore always lag the integration front, which keeps the
method explicit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .core import (
    CoverageError,
    DegenerateWeightsError,
    Frame,
    HistoryBuffer,
    InfluenceSpec,
    ScenarioConfig,
    WeightScheme,
    build_history,
)

__all__ = [
    "WeightScheme",
    "Trajectory",
    "weight_matrix",
    "rhs",
    "integrate",
    "export_csv",
    "csv_header",
]

_INFLUENCE_CODE = {"constant": 0, "inverse_power": 1, "table": 2}
_SCHEME_CODE = {"classical": 0, "normalized": 1, "constant_coupling": 2}


def _influence_args(spec: InfluenceSpec):
    code = _INFLUENCE_CODE[spec.kind]
    param = spec.value if spec.kind == "constant" else spec.beta
    ts, tp = spec.table_arrays()
    return code, float(param), ts, tp


def _scheme_args(scheme: WeightScheme):
    return _SCHEME_CODE[scheme.kind], float(scheme.kappa)


def weight_matrix(positions, influence: InfluenceSpec, scheme: WeightScheme) -> np.ndarray:
    """Communication weights for one position frame.

    Entries are nonnegative; classical rows sum to at most 1, normalized rows
    to 1 within a few ulp. Diagonal entries are computed but dynamically
    inert (they multiply v_i - v_i). Raises DegenerateWeightsError when a
    normalized row has zero total influence (impossible while psi(0) > 0).
    """
    pos = np.ascontiguousarray(positions, dtype=float)
    if pos.ndim != 2 or pos.shape[0] < 1:
        raise ValueError("positions must be a nonempty (N, d) array")
    code, param, ts, tp = _influence_args(influence)
    scode, kappa = _scheme_args(scheme)
    w, status = kernels.weights(pos, code, param, ts, tp, scode, kappa)
    if status == kernels.DEGENERATE:
        raise DegenerateWeightsError("normalized weights: a row of influences sums to zero")
    return w


def rhs(history: HistoryBuffer, t: float, influence: InfluenceSpec,
        scheme: WeightScheme) -> np.ndarray:
    """Velocity derivative at time t: the alignment force built from the
    delayed frame at t - tau."""
    pos_d, vel_d = history.dense_eval(t - history.tau)
    w = weight_matrix(pos_d, influence, scheme)
    return kernels.accelerations(w, np.ascontiguousarray(vel_d))


@dataclass
class Trajectory:
    """Recorded simulation output.

    Frames are a strided subset of the integration grid, always including the
    initial interval's grid frames and the final frame. Diagnostics are
    computed from the recorded frames with the same arithmetic the analysis
    module uses, so recomputation reproduces them bitwise.
    """

    config: ScenarioConfig
    times: np.ndarray            # (R,)
    grid_indices: np.ndarray     # (R,) indices into the integration grid
    positions: np.ndarray        # (R, N, d)
    velocities: np.ndarray       # (R, N, d)
    accelerations: np.ndarray    # (R, N, d)
    d_x: np.ndarray              # (R,)
    d_v: np.ndarray              # (R,)
    momentum: np.ndarray         # (R, d) total momentum per frame
    h: float
    diverged: bool = False
    divergence_time: Optional[float] = None

    @property
    def n_recorded(self) -> int:
        return self.times.shape[0]

    def frame(self, i: int) -> Frame:
        return Frame(float(self.times[i]), self.positions[i].copy(),
                     self.velocities[i].copy(), self.accelerations[i].copy())

    def initial_frame_mask(self) -> np.ndarray:
        return self.grid_indices <= self.config.steps_per_delay


def _recording_indices(n_frames: int, stride: int) -> np.ndarray:
    idx = list(range(0, n_frames, stride))
    if idx[-1] != n_frames - 1:
        idx.append(n_frames - 1)
    return np.asarray(idx, dtype=np.intp)


def integrate(config: ScenarioConfig) -> Trajectory:
    """Run the scenario to its horizon (or until the divergence guard trips).

    The guard is not an error: trajectories that blow up are returned
    truncated, flagged with the blow-up time.
    """
    hist = build_history(config)
    m = config.steps_per_delay
    h = hist.h
    n_steps = max(1, math.ceil(config.horizon / h - 1e-9))
    n_total = m + 1 + n_steps

    hist.reserve(n_total)
    X, V, A = hist.arrays()
    xd, vd = hist.initial_derivative_arrays()

    vel_scale = hist.initial_velocity_scale()
    guard = config.guard_factor * max(vel_scale, 1.0)

    code, param, ts, tp = _influence_args(config.influence)
    scode, kappa = _scheme_args(config.scheme)
    status = kernels.integrate_arrays(X, V, A, xd, vd, h, m, n_steps,
                                      code, param, ts, tp, scode, kappa, guard)
    if status == kernels.DEGENERATE:
        raise DegenerateWeightsError("normalized weights degenerated during integration")

    diverged = status >= 0
    divergence_time = None
    if diverged:
        divergence_time = (status - m) * h
        n_filled = status + 1
        if not np.all(np.isfinite(V[status])) or not np.all(np.isfinite(X[status])):
            n_filled = status  # drop the non-finite frame, keep the last good one
    else:
        n_filled = n_total
    hist.mark_filled(n_filled)

    rec = _recording_indices(n_filled, config.record_stride)
    times = (rec - m) * h
    xr = X[rec].copy()
    vr = V[rec].copy()
    ar = A[rec].copy()
    d_x = np.array([kernels.pairwise_diameter(xr[i]) for i in range(len(rec))])
    d_v = np.array([kernels.pairwise_diameter(vr[i]) for i in range(len(rec))])
    momentum = vr.sum(axis=1)

    return Trajectory(config=config, times=times, grid_indices=rec,
                      positions=xr, velocities=vr, accelerations=ar,
                      d_x=d_x, d_v=d_v, momentum=momentum, h=h,
                      diverged=diverged, divergence_time=divergence_time)


# ---------------------------------------------------------------------------
# CSV export: header row, then one row per recorded frame with
# t, x_{agent}_{component}..., v_{agent}_{component}..., d_x, d_v, p_{component}...
# Numbers are written with 17 significant digits so the text round-trips
# losslessly.


def csv_header(n_agents: int, dim: int) -> list[str]:
    cols = ["t"]
    cols += [f"x_{i}_{k}" for i in range(n_agents) for k in range(dim)]
    cols += [f"v_{i}_{k}" for i in range(n_agents) for k in range(dim)]
    cols += ["d_x", "d_v"]
    cols += [f"p_{k}" for k in range(dim)]
    return cols


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def export_csv(traj: Trajectory, path) -> None:
    n, d = traj.config.n_agents, traj.config.dim
    lines = [",".join(csv_header(n, d))]
    for i in range(traj.n_recorded):
        row = [_fmt(traj.times[i])]
        row += [_fmt(v) for v in traj.positions[i].ravel()]
        row += [_fmt(v) for v in traj.velocities[i].ravel()]
        row += [_fmt(traj.d_x[i]), _fmt(traj.d_v[i])]
        row += [_fmt(v) for v in traj.momentum[i]]
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
