"""Theorem-level mathematics: diameters, the nonincreasing rearrangement of
the influence function, decay-certificate search, the delayed-Gronwall rate
solver, and trajectory monitors for the decay envelope, the startup bound and
the velocity-diameter differential inequality.

All operations here are pure functions of their inputs; monitors read
completed trajectories only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import kernels
from .core import (
    CoverageError,
    Frame,
    HistoryBuffer,
    InfluenceSpec,
    ScenarioConfig,
    ScopeError,
    build_history,
    evaluate_influence,
)
from .dynamics import Trajectory, _influence_args, _scheme_args

VARIANT_GENERAL = "general"
VARIANT_CONSTANT_VELOCITY = "constant_velocity"
VARIANTS = (VARIANT_GENERAL, VARIANT_CONSTANT_VELOCITY)


class FlockingClass(Enum):
    FLOCKING = "flocking"
    NOT_DECIDED = "not_decided"
    DIVERGED = "diverged"


class OscillationClass(Enum):
    MONOTONE_DECAY = "monotone_decay"
    OSCILLATORY_DECAY = "oscillatory_decay"
    OSCILLATORY_GROWTH = "oscillatory_growth"


# ---------------------------------------------------------------------------
# diameters


def diameters(frame: Frame) -> tuple[float, float]:
    """Position and velocity diameters of one frame (exact pairwise max)."""
    return (kernels.pairwise_diameter(frame.positions),
            kernels.pairwise_diameter(frame.velocities))


def initial_diameters(history: HistoryBuffer) -> tuple[float, float]:
    """Max of the frame diameters over the initial-interval grid [-tau, 0]."""
    if history.n_frames < history.m + 1:
        raise CoverageError("history does not cover the initial interval")
    d_x0 = 0.0
    d_v0 = 0.0
    for k in range(history.m + 1):
        fr = history.frame(k)
        d_x0 = max(d_x0, kernels.pairwise_diameter(fr.positions))
        d_v0 = max(d_v0, kernels.pairwise_diameter(fr.velocities))
    return d_x0, d_v0


# ---------------------------------------------------------------------------
# rearrangement and the certificate condition


def rearrangement(influence: InfluenceSpec, u):
    """Running minimum of the influence function over [0, u].

    Equals the influence itself for the monotone kinds; for tables it is the
    exact running minimum of the piecewise-linear interpolant (segment minima
    sit at sample points, so only the partial last segment needs the
    interpolated value). Accepts scalars or arrays.
    """
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("rearrangement argument must be nonnegative")
    if influence.kind in ("constant", "inverse_power"):
        return evaluate_influence(influence, u)
    ts, tp = influence.table_arrays()
    prefix = np.minimum.accumulate(tp)
    interp = np.clip(np.interp(arr, ts, tp), 0.0, 1.0)
    j = np.searchsorted(ts, arr, side="right") - 1
    covered = j >= 0
    base = np.where(covered, prefix[np.clip(j, 0, len(ts) - 1)], np.inf)
    out = np.minimum(base, interp)
    if arr.ndim == 0:
        return float(out)
    return out


def _exp_ratio(x):
    """(e^x - 1) / x, by series below 1e-4 to avoid cancellation."""
    arr = np.asarray(x, dtype=float)
    small = np.abs(arr) < 1e-4
    safe = np.where(small, 1.0, arr)
    series = 1.0 + arr / 2.0 + arr * arr / 6.0 + arr * arr * arr / 24.0
    out = np.where(small, series, np.expm1(safe) / safe)
    if arr.ndim == 0:
        return float(out)
    return out


def condition_lhs_rhs(C, d_x0: float, d_v0: float, tau: float,
                      influence: InfluenceSpec, variant: str = VARIANT_GENERAL):
    """Both sides of the decay-certificate inequality at rate C.

    lhs is the rearranged influence at the position-diameter bound minus C;
    rhs is 4 tau e^{C tau} (e^{C tau} - 1)/(C tau). The certificate requires
    lhs >= rhs. The constant-velocity variant uses the smaller diameter bound
    d_x0 + d_v0 / C. Accepts a scalar or array of rates in (0, 1).
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown certificate variant {variant!r}")
    if not tau > 0.0:
        raise ValueError("delay must be positive")
    if d_x0 < 0.0 or d_v0 < 0.0:
        raise ValueError("initial diameters must be nonnegative")
    arr = np.asarray(C, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValueError("decay rate must lie in the open interval (0, 1)")
    if variant == VARIANT_GENERAL:
        u = d_x0 + (1.0 + 2.0 * tau) * (tau + 1.0 / arr) * d_v0
    else:
        u = d_x0 + d_v0 / arr
    lhs = rearrangement(influence, u) - arr
    ct = arr * tau
    rhs = 4.0 * tau * np.exp(ct) * _exp_ratio(ct)
    if arr.ndim == 0:
        return float(lhs), float(rhs)
    return lhs, rhs


@dataclass(frozen=True)
class CertificateInputs:
    d_x0: float
    d_v0: float
    tau: float
    influence: InfluenceSpec


@dataclass(frozen=True)
class Certificate:
    """A feasible decay rate C with the margin by which the condition holds.

    ``feasible_low``/``feasible_high`` delimit the feasible component of the
    search grid containing C (high end refined by bisection; the low end is
    refined when an infeasible grid point exists below, otherwise it is the
    smallest grid point probed).
    """

    C: float
    margin: float
    variant: str
    inputs: CertificateInputs
    feasible_low: float
    feasible_high: float

    def __post_init__(self):
        if not 0.0 < self.C < 1.0:
            raise ValueError("certificate rate must lie in (0, 1)")
        if self.margin < 0.0:
            raise ValueError("certificate margin must be nonnegative")


@dataclass(frozen=True)
class Infeasible:
    """No grid rate satisfied the condition; carries the best attempt."""

    best_C: float
    best_margin: float
    variant: str
    inputs: CertificateInputs


def _search_grid(n: int) -> np.ndarray:
    n_log = max(n // 2, 4)
    n_lin = max(n - n_log, 4)
    log_part = np.geomspace(1e-9, 1.0, n_log + 1)[:-1]
    lin_part = np.linspace(0.0, 1.0, n_lin + 2)[1:-1]
    grid = np.unique(np.concatenate([log_part, lin_part]))
    return grid[(grid > 0.0) & (grid < 1.0)]


def find_certificate(d_x0: float, d_v0: float, tau: float, influence: InfluenceSpec,
                     variant: str = VARIANT_GENERAL, grid_points: int = 10_000):
    """Search (0, 1) for the largest feasible decay rate.

    Scans a logarithmic-plus-linear grid (the log part catches the tiny rates
    that remain feasible near the delay threshold), then refines the upper
    boundary of the feasible component containing the best grid point by
    bisection to relative width 1e-10. Returns a Certificate, or Infeasible
    with the least negative margin found.
    """
    inputs = CertificateInputs(float(d_x0), float(d_v0), float(tau), influence)
    grid = _search_grid(grid_points)
    lhs, rhs = condition_lhs_rhs(grid, d_x0, d_v0, tau, influence, variant)
    margins = lhs - rhs
    feasible = margins >= 0.0
    if not feasible.any():
        best = int(np.argmax(margins))
        return Infeasible(best_C=float(grid[best]), best_margin=float(margins[best]),
                          variant=variant, inputs=inputs)

    def margin_at(c: float) -> float:
        l, r = condition_lhs_rhs(c, d_x0, d_v0, tau, influence, variant)
        return l - r

    i_best = int(np.nonzero(feasible)[0][-1])
    # upper boundary: bisect between the best feasible grid point and the next
    # infeasible rate (margins are negative as C -> 1 since lhs <= 1 - C)
    lo = float(grid[i_best])
    hi = float(grid[i_best + 1]) if i_best + 1 < len(grid) else 1.0 - 1e-15
    if margin_at(hi) >= 0.0:
        lo = hi
    else:
        while hi - lo > 1e-10 * lo:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if margin_at(mid) >= 0.0:
                lo = mid
            else:
                hi = mid
    c_star = lo

    # lower end of the same feasible component
    j = i_best
    while j > 0 and feasible[j - 1]:
        j -= 1
    if j == 0:
        low = float(grid[0])
    else:
        flo, fhi = float(grid[j - 1]), float(grid[j])
        while fhi - flo > 1e-10 * fhi:
            mid = 0.5 * (flo + fhi)
            if mid <= flo or mid >= fhi:
                break
            if margin_at(mid) >= 0.0:
                fhi = mid
            else:
                flo = mid
        low = fhi
    return Certificate(C=c_star, margin=margin_at(c_star), variant=variant,
                       inputs=inputs, feasible_low=low, feasible_high=c_star)


def halanay_gamma(alpha: float, beta: float, tau: float) -> float:
    """Unique decay rate gamma in (0, beta - alpha) of the delayed-Gronwall
    comparison equation beta - gamma = alpha e^{gamma tau} (e^{gamma tau} - 1)
    / (gamma tau), found by bisection on the monotone residual."""
    if not (0.0 < alpha < beta):
        raise ValueError("need 0 < alpha < beta")
    if not tau > 0.0:
        raise ValueError("delay must be positive")

    def g(x: float) -> float:
        xt = x * tau
        return (beta - x) - alpha * math.exp(xt) * _exp_ratio(xt)

    lo, hi = 0.0, beta - alpha
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# monitors


@dataclass(frozen=True)
class MonitorReport:
    """Outcome of one bound check along a trajectory. ``worst_violation`` is
    the signed max of (quantity - bound); negative means margin to spare."""

    kind: str
    worst_violation: float
    time_of_worst: float
    tolerance_used: float
    passed: bool
    notes: dict = field(default_factory=dict)


def _check_certificate_matches(traj: Trajectory, cert: Certificate) -> tuple[float, float]:
    hist = build_history(traj.config)
    d_x0, d_v0 = initial_diameters(hist)
    scale = max(d_x0, d_v0, 1.0)
    if (abs(cert.inputs.d_x0 - d_x0) > 1e-9 * scale
            or abs(cert.inputs.d_v0 - d_v0) > 1e-9 * scale
            or cert.inputs.tau != traj.config.tau
            or cert.inputs.influence != traj.config.influence):
        raise ValueError("certificate was not produced from this trajectory's "
                         "initial diameters and config")
    return d_x0, d_v0


def monitor_envelope(traj: Trajectory, cert: Certificate,
                     rate_multiplier: float = 1.0) -> MonitorReport:
    """Check the exponential decay envelope along the recorded frames.

    General variant: d_v(t) <= (1 + 2 tau) d_v0 e^{-C (t - tau)} for t >= tau.
    Constant-velocity variant: checks the decaying form d_v0 e^{-C t} for
    t >= 0 and additionally records whether the literal constant bound
    d_v0 e^{-C tau} holds (the two readings differ; neither is silently
    dropped). ``rate_multiplier`` steepens the envelope without constructing
    an invalid certificate, for non-vacuity checks.
    """
    d_x0, d_v0 = _check_certificate_matches(traj, cert)
    tau = traj.config.tau
    c_eff = cert.C * rate_multiplier
    tol = (1e-8 + 100.0 * traj.h ** 4) * d_v0
    eps_t = 1e-9 * traj.h
    if cert.variant == VARIANT_GENERAL:
        sel = traj.times >= tau - eps_t
        bound = (1.0 + 2.0 * tau) * d_v0 * np.exp(-c_eff * (traj.times[sel] - tau))
        notes = {}
    else:
        sel = traj.times >= -eps_t
        bound = d_v0 * np.exp(-c_eff * traj.times[sel])
        const_bound = d_v0 * math.exp(-c_eff * tau)
        const_worst = float((traj.d_v[sel] - const_bound).max())
        notes = {"constant_form_holds": bool(const_worst <= tol),
                 "constant_form_worst": const_worst}
    viol = traj.d_v[sel] - bound
    i = int(np.argmax(viol))
    worst = float(viol[i])
    return MonitorReport(kind="decay_envelope", worst_violation=worst,
                         time_of_worst=float(traj.times[sel][i]),
                         tolerance_used=tol, passed=worst <= tol, notes=notes)


def monitor_startup_bound(traj: Trajectory) -> MonitorReport:
    """Check max d_v over [-tau, tau] against (1 + 2 tau) d_v0."""
    cfg = traj.config
    if not cfg.scheme.row_bound_satisfied(cfg.n_agents):
        raise ScopeError("weight rows may exceed 1 (coupling too strong); the "
                         "startup bound's hypothesis fails")
    tau = cfg.tau
    _, d_v0 = initial_diameters(build_history(cfg))
    eps_t = 1e-9 * traj.h
    sel = traj.times <= tau + eps_t
    bound = (1.0 + 2.0 * tau) * d_v0
    tol = 1e-8 * bound + 100.0 * traj.h ** 4 * d_v0
    viol = traj.d_v[sel] - bound
    i = int(np.argmax(viol))
    worst = float(viol[i])
    return MonitorReport(kind="startup_bound", worst_violation=worst,
                         time_of_worst=float(traj.times[sel][i]),
                         tolerance_used=tol, passed=worst <= tol)


def _argmax_pairs(vel: np.ndarray) -> np.ndarray:
    """Index pair attaining the velocity diameter, per frame (sorted)."""
    r, n, _ = vel.shape
    out = np.zeros((r, 2), dtype=np.intp)
    for lo in range(0, r, 512):
        chunk = vel[lo:lo + 512]
        diff = chunk[:, None, :, :] - chunk[:, :, None, :]
        d2 = np.einsum("bijk,bijk->bij", diff, diff)
        flat = d2.reshape(len(chunk), -1).argmax(axis=1)
        i, j = np.divmod(flat, n)
        out[lo:lo + len(chunk), 0] = np.minimum(i, j)
        out[lo:lo + len(chunk), 1] = np.maximum(i, j)
    return out


def _positions_at(traj: Trajectory, t: float) -> np.ndarray:
    """Positions at a (post-initial) time from the recorded frames: exact when
    t is a recorded grid time, cubic Hermite between recorded frames
    otherwise. Interpolation accuracy assumes the bracketing frames lie at or
    after t = 0, where position derivatives equal the stored velocities;
    record strides dividing steps_per_delay keep every lookup exact."""
    g = int(round(t / traj.h)) + traj.config.steps_per_delay
    k = int(np.searchsorted(traj.grid_indices, g))
    if k < len(traj.grid_indices) and traj.grid_indices[k] == g \
            and abs(traj.times[k] - t) <= 1e-9 * traj.h:
        return traj.positions[k]
    k = int(np.searchsorted(traj.times, t))
    if k <= 0 or k >= len(traj.times):
        raise CoverageError(f"t={t} outside recorded frames")
    t0, t1 = traj.times[k - 1], traj.times[k]
    width = t1 - t0
    theta = (t - t0) / width
    t2 = theta * theta
    t3 = t2 * theta
    h00 = 2.0 * t3 - 3.0 * t2 + 1.0
    h10 = t3 - 2.0 * t2 + theta
    h01 = -2.0 * t3 + 3.0 * t2
    h11 = t3 - t2
    return (h00 * traj.positions[k - 1] + h01 * traj.positions[k]
            + width * (h10 * traj.velocities[k - 1] + h11 * traj.velocities[k]))


def _min_offdiag_weight(traj: Trajectory, eval_times: np.ndarray) -> float:
    """min over the given times of min_{i != j} of the weight matrix built
    from the positions at those times."""
    cfg = traj.config
    n = cfg.n_agents
    if n < 2:
        return 0.0
    code, param, ts, tp = _influence_args(cfg.influence)
    scode, _ = _scheme_args(cfg.scheme)
    pos = np.stack([_positions_at(traj, float(t)) for t in eval_times])
    best = np.inf
    eye = np.arange(n)
    for lo in range(0, len(pos), 256):
        chunk = pos[lo:lo + 256]
        diff = chunk[:, None, :, :] - chunk[:, :, None, :]
        dist = np.sqrt(np.einsum("bijk,bijk->bij", diff, diff))
        from .kernels import _numpy as _ref

        psi = _ref.psi_values(code, param, ts, tp, dist)
        if scode == 0:
            w = psi / n
        else:
            rows = psi.sum(axis=2)
            w = psi / rows[:, :, None]
            w = w / w.sum(axis=2)[:, :, None]
        w[:, eye, eye] = np.inf
        best = min(best, float(w.min()))
    return best


def _cumtrapz(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    out = np.zeros(len(times))
    out[1:] = np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(times))
    return out


def _integral(times, values, ctz, a: float, b: float) -> float:
    """Trapezoid integral of the recorded series over [a, b] with linearly
    interpolated partial end segments."""
    ja = int(np.searchsorted(times, a, side="left"))
    jb = int(np.searchsorted(times, b, side="right")) - 1
    va = float(np.interp(a, times, values))
    vb = float(np.interp(b, times, values))
    if ja > jb:  # both ends inside one segment
        return 0.5 * (va + vb) * (b - a)
    total = float(ctz[jb] - ctz[ja])
    total += 0.5 * (va + values[ja]) * (times[ja] - a)
    total += 0.5 * (values[jb] + vb) * (b - times[jb])
    return total


def monitor_dv_inequality(traj: Trajectory, window: tuple[float, float]) -> MonitorReport:
    """Check the velocity-diameter differential inequality on the window:

        d/dt d_v(t) <= 4 * integral_{t-tau}^{t} d_v(s - tau) ds - psi_bar d_v(t)

    with psi_bar = N * min over the window of the smallest off-diagonal
    delayed weight. The derivative uses centered differences of the recorded
    d_v, the integral the trapezoid rule, and the tolerance is ten times an
    empirical second-order error bound. d_v is only piecewise differentiable:
    checks within one recorded step of a switch of the diameter-attaining
    pair are excused and counted separately rather than failed.
    """
    cfg = traj.config
    if cfg.scheme.kind not in ("classical", "normalized"):
        raise ScopeError("differential-inequality monitor needs the classical "
                         "or normalized scheme")
    tau = cfg.tau
    t_lo, t_hi = float(window[0]), float(window[1])
    times = traj.times
    dv = traj.d_v
    r = len(times)
    eps_t = 1e-9 * traj.h
    if t_lo < tau - eps_t or t_hi > times[-1] + eps_t or t_lo >= t_hi:
        raise CoverageError("window must sit inside (tau, horizon)")

    ok = np.zeros(r, dtype=bool)
    ok[1:-1] = ((times[1:-1] >= t_lo - eps_t) & (times[1:-1] <= t_hi + eps_t)
                & (times[:-2] >= tau - eps_t) & (times[2:] <= t_hi + eps_t))
    idx = np.nonzero(ok)[0]
    if idx.size == 0:
        raise ValueError("window too narrow for a centered difference stencil")

    deriv = (dv[idx + 1] - dv[idx - 1]) / (times[idx + 1] - times[idx - 1])
    ctz = _cumtrapz(times, dv)
    integrals = np.array([_integral(times, dv, ctz, t - 2.0 * tau, t - tau)
                          for t in times[idx]])
    psi_bar = cfg.n_agents * _min_offdiag_weight(traj, times[idx] - tau)
    viol = deriv - (4.0 * integrals - psi_bar * dv[idx])

    pairs = _argmax_pairs(traj.velocities)
    switch = np.zeros(r, dtype=bool)
    switch[1:] = np.any(pairs[1:] != pairs[:-1], axis=1)
    excused = switch[idx] | switch[np.minimum(idx + 1, r - 1)]

    # empirical curvature scales for the tolerance, away from the kinks and
    # the breakpoints at t = 0 and t = tau where d_v is not smooth
    delta = float(np.median(np.diff(times)))
    smooth = np.ones(r, dtype=bool)
    for k in np.nonzero(switch)[0]:
        smooth[max(0, k - 2):k + 3] = False
    smooth &= (np.abs(times) > 2.5 * delta) & (np.abs(times - tau) > 2.5 * delta)
    d2 = np.abs(dv[2:] - 2.0 * dv[1:-1] + dv[:-2]) / delta ** 2
    m2_ok = smooth[1:-1] & smooth[:-2] & smooth[2:]
    m2 = float(d2[m2_ok].max()) if m2_ok.any() else 0.0
    d3 = np.abs(dv[4:] - 2.0 * dv[3:-1] + 2.0 * dv[1:-3] - dv[:-4]) / (2.0 * delta ** 3)
    m3_ok = smooth[2:-2] & smooth[:-4] & smooth[4:]
    m3 = float(d3[m3_ok].max()) if m3_ok.any() else 0.0
    tol = 10.0 * (delta ** 2 * m3 / 6.0 + 4.0 * tau * delta ** 2 * m2 / 12.0)
    tol += 1e-13 * max(float(dv.max()), 1e-300)

    checked = ~excused
    if checked.any():
        vi = viol[checked]
        i = int(np.argmax(vi))
        worst = float(vi[i])
        t_worst = float(times[idx[checked]][i])
    else:
        worst = -math.inf
        t_worst = t_lo
    notes = {"psi_bar": psi_bar,
             "excused_checks": int(excused.sum()),
             "excused_worst": float(viol[excused].max()) if excused.any() else -math.inf,
             "checked": int(checked.sum())}
    return MonitorReport(kind="dv_differential_inequality", worst_violation=worst,
                         time_of_worst=t_worst, tolerance_used=tol,
                         passed=worst <= tol, notes=notes)


# ---------------------------------------------------------------------------
# classification


def classify_flocking(traj: Trajectory, dx_cap: float, dv_floor: float) -> FlockingClass:
    """Operationalized flocking decision: bounded position diameter, final
    velocity diameter below the floor, and a non-increasing trend proxy
    (d_v at the horizon no larger than at half the horizon)."""
    if traj.diverged:
        return FlockingClass.DIVERGED
    if float(traj.d_x.max()) > dx_cap:
        return FlockingClass.NOT_DECIDED
    dv_end = float(traj.d_v[-1])
    if dv_end > dv_floor:
        return FlockingClass.NOT_DECIDED
    t_half = 0.5 * float(traj.times[-1])
    i_half = int(np.argmin(np.abs(traj.times - t_half)))
    if dv_end > float(traj.d_v[i_half]):
        return FlockingClass.NOT_DECIDED
    return FlockingClass.FLOCKING


def default_flocking_thresholds(cert: Certificate, traj: Trajectory) -> tuple[float, float]:
    """Caps used when a certificate exists: the position cap is the proof's
    own diameter bound (plus discretization headroom); the velocity floor is
    the larger of 1e-6 d_v0 and the guaranteed envelope value at the final
    recorded time, so the classification never demands more decay than the
    certificate promises."""
    d_x0, d_v0 = cert.inputs.d_x0, cert.inputs.d_v0
    tau = cert.inputs.tau
    cap = d_x0 + (1.0 + 2.0 * tau) * (tau + 1.0 / cert.C) * d_v0
    num_tol = (1e-8 + 100.0 * traj.h ** 4) * max(cap, d_v0, 1.0)
    t_end = float(traj.times[-1])
    envelope_end = (1.0 + 2.0 * tau) * d_v0 * math.exp(-cert.C * (t_end - tau))
    floor = max(1e-6 * d_v0, 1.05 * envelope_end + (1e-8 + 100.0 * traj.h ** 4) * d_v0)
    return cap + num_tol, floor


def classify_oscillation(times, values, tau: float) -> OscillationClass:
    """Classify a scalar series from a two-agent run as monotone decay,
    oscillatory decay, or oscillatory growth.

    Discards a transient of two delay lengths, then counts sign changes and
    compares the magnitudes of successive local extrema; growth requires the
    increase to be sustained across at least three consecutive extrema.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.ndim != 1:
        raise ValueError("times and values must be matching 1-d arrays")
    if times[-1] - times[0] < 10.0 * tau:
        raise ValueError("series too short: need at least ten delay intervals")
    sel = times >= 2.0 * tau
    w = values[sel]
    if len(w) < 5:
        raise ValueError("series too short after the transient")

    crossings = int(np.sum(w[:-1] * w[1:] < 0.0))
    dw = np.diff(w)
    turning = np.nonzero(dw[:-1] * dw[1:] < 0.0)[0] + 1
    mags = np.abs(w[turning])

    if crossings == 0:
        if abs(w[-1]) <= abs(w[0]):
            return OscillationClass.MONOTONE_DECAY
        raise ValueError("series matches no class: no sign change but growing")

    if len(mags) >= 3:
        ratios = mags[1:] / np.maximum(mags[:-1], 1e-300)
        run = 0
        for rv in ratios[::-1]:
            if rv > 1.0:
                run += 1
            else:
                break
        if run >= 2:  # three consecutive extrema growing
            return OscillationClass.OSCILLATORY_GROWTH
        return OscillationClass.OSCILLATORY_DECAY
    # very few extrema: fall back to the overall trend
    if abs(w[-1]) > abs(w[0]):
        return OscillationClass.OSCILLATORY_GROWTH
    return OscillationClass.OSCILLATORY_DECAY
