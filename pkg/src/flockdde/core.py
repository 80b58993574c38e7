"""Shared domain types: influence functions, state frames, history buffers
with dense output, and scenario configuration.

All core types are immutable after construction except :class:`HistoryBuffer`,
which is appended to by exactly one integrator at a time; completed frames may
be read concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

INFLUENCE_KINDS = ("constant", "inverse_power", "table")
SCHEME_KINDS = ("classical", "normalized", "constant_coupling")
INITIAL_KINDS = ("constant", "random", "linear", "sinusoidal", "samples")


class FlockingError(Exception):
    """Base class for domain errors raised by this package."""


class CoverageError(FlockingError):
    """A time fell outside the interval covered by the available frames."""


class DegenerateWeightsError(FlockingError):
    """Normalized weights hit a zero row denominator."""


class ScopeError(FlockingError):
    """Inputs violate the hypotheses the requested check relies on."""


def _as_nested_tuple(values):
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        return float(arr)
    return tuple(_as_nested_tuple(row) for row in arr)


def _tuple_to_array(values, shape=None, name="array"):
    arr = np.asarray(values, dtype=float)
    if shape is not None and arr.shape != shape:
        raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


# ---------------------------------------------------------------------------
# influence functions


@dataclass(frozen=True)
class InfluenceSpec:
    """Distance-dependent coupling strength, with every evaluation in [0, 1].

    Kinds:
      * ``constant``: psi(s) = value
      * ``inverse_power``: psi(s) = 1 / (1 + s^2)^beta, beta > 0
      * ``table``: piecewise-linear through (s, psi) samples, extended
        constantly beyond the first / last sample
    """

    kind: str
    value: float = 1.0
    beta: float = 1.0
    table: tuple = ()

    def __post_init__(self):
        if self.kind not in INFLUENCE_KINDS:
            raise ValueError(f"unknown influence kind {self.kind!r}")
        if self.kind == "constant":
            if not 0.0 <= self.value <= 1.0:
                raise ValueError("constant influence value must lie in [0, 1]")
        elif self.kind == "inverse_power":
            if not self.beta > 0.0:
                raise ValueError("inverse_power exponent must be positive")
        else:
            if len(self.table) < 1:
                raise ValueError("table influence needs at least one sample")
            s_prev = -1.0
            for s, psi in self.table:
                if s < 0.0 or s <= s_prev:
                    raise ValueError("table distances must be >= 0 and strictly increasing")
                if not 0.0 <= psi <= 1.0:
                    raise ValueError("table psi values must lie in [0, 1]")
                s_prev = s

    @classmethod
    def constant(cls, value: float = 1.0) -> "InfluenceSpec":
        return cls(kind="constant", value=float(value))

    @classmethod
    def inverse_power(cls, beta: float) -> "InfluenceSpec":
        return cls(kind="inverse_power", beta=float(beta))

    @classmethod
    def from_table(cls, samples) -> "InfluenceSpec":
        table = tuple((float(s), float(p)) for s, p in samples)
        return cls(kind="table", table=table)

    def table_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind != "table":
            return np.empty(0), np.empty(0)
        arr = np.asarray(self.table, dtype=float)
        return np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1])


def evaluate_influence(spec: InfluenceSpec, s):
    """Evaluate psi(s); accepts scalars or arrays of distances >= 0."""
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("distance must be nonnegative")
    if spec.kind == "constant":
        out = np.full_like(arr, spec.value)
    elif spec.kind == "inverse_power":
        out = (1.0 + arr * arr) ** (-spec.beta)
    else:
        ts, tp = spec.table_arrays()
        # np.interp clamps to the end values, which is the wanted extension
        out = np.clip(np.interp(arr, ts, tp), 0.0, 1.0)
    if arr.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# weight schemes


@dataclass(frozen=True)
class WeightScheme:
    """How pairwise influence values turn into communication weights.

    ``classical`` scales psi by 1/N; ``normalized`` divides each row by the
    agent's total received influence (row-stochastic, generally nonsymmetric);
    ``constant_coupling`` uses a fixed off-diagonal kappa and is exempt from
    the row-sum bound the decay theory assumes.
    """

    kind: str
    kappa: float = 1.0

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ValueError(f"unknown weight scheme {self.kind!r}")
        if self.kind == "constant_coupling" and not self.kappa > 0.0:
            raise ValueError("constant coupling strength must be positive")

    @classmethod
    def classical(cls) -> "WeightScheme":
        return cls(kind="classical")

    @classmethod
    def normalized(cls) -> "WeightScheme":
        return cls(kind="normalized")

    @classmethod
    def constant_coupling(cls, kappa: float) -> "WeightScheme":
        return cls(kind="constant_coupling", kappa=float(kappa))

    def row_bound_satisfied(self, n_agents: int) -> bool:
        """Whether every weight row is guaranteed to sum to at most 1."""
        if self.kind != "constant_coupling":
            return True
        return self.kappa * (n_agents - 1) <= 1.0


# ---------------------------------------------------------------------------
# frames and history buffers


@dataclass(frozen=True)
class Frame:
    """States of all agents at one time: positions, velocities and the
    recorded velocity derivatives (dynamics right-hand side for t > 0,
    derivative estimates of the prescribed history on the initial interval)."""

    t: float
    positions: np.ndarray
    velocities: np.ndarray
    accelerations: np.ndarray

    def __post_init__(self):
        for name in ("positions", "velocities", "accelerations"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 2:
                raise ValueError(f"{name} must be an (N, d) array")
            object.__setattr__(self, name, arr)
        shape = self.positions.shape
        if shape[0] < 1 or shape[1] < 1:
            raise ValueError("need at least one agent and one dimension")
        if self.velocities.shape != shape or self.accelerations.shape != shape:
            raise ValueError("positions, velocities, accelerations must share one shape")

    @property
    def n_agents(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]


def _hermite(theta, h, y0, y1, d0, d1):
    # classic cubic Hermite basis on one segment of width h
    t2 = theta * theta
    t3 = t2 * theta
    h00 = 2.0 * t3 - 3.0 * t2 + 1.0
    h10 = t3 - 2.0 * t2 + theta
    h01 = -2.0 * t3 + 3.0 * t2
    h11 = t3 - t2
    return h00 * y0 + h01 * y1 + h * (h10 * d0 + h11 * d1)


class HistoryBuffer:
    """Uniform time grid t_k = (k - m) * h of agent frames, with cubic-Hermite
    dense output on (value, derivative) pairs.

    Frames 0..m carry the prescribed initial interval [-tau, 0]. Because the
    dynamics places no constraint there, those frames keep their own position
    and velocity derivative estimates in side arrays: the initial positions
    need not integrate the initial velocities, and the velocity derivative is
    two-sided at t = 0 (history estimate from the left, dynamics right-hand
    side from the right). Segment lookups pick the side-correct pair, which
    keeps the interpolant fourth-order accurate across the junction.

    The delay equals exactly m grid steps, so delayed lookups of grid points
    land on grid points.
    """

    def __init__(self, h, m, x, v, a, x_derivs, v_derivs, tau=None):
        if m < 1:
            raise ValueError("need at least one step per delay")
        if not h > 0.0:
            raise ValueError("step must be positive")
        x = _tuple_to_array(x, name="positions")
        if x.ndim != 3 or x.shape[0] != m + 1:
            raise ValueError("initial frames must have shape (m+1, N, d)")
        shape = x.shape
        self.h = float(h)
        self.m = int(m)
        self.tau = float(tau) if tau is not None else self.m * self.h
        self.n_agents = shape[1]
        self.dim = shape[2]
        self._n = m + 1
        self._x = np.array(x, dtype=float)
        self._v = _tuple_to_array(v, shape, "velocities").copy()
        self._a = _tuple_to_array(a, shape, "accelerations").copy()
        self._xd = _tuple_to_array(x_derivs, shape, "position derivatives").copy()
        self._vd = _tuple_to_array(v_derivs, shape, "velocity derivatives").copy()

    @classmethod
    def from_arrays(cls, h, m, x, v, x_derivs, v_derivs, tau=None) -> "HistoryBuffer":
        """Build an initial-interval buffer from explicit grid samples and
        their derivatives; the stored accelerations start as the velocity
        derivative estimates."""
        return cls(h, m, x, v, np.asarray(v_derivs, float), x_derivs, v_derivs, tau=tau)

    # -- growth -------------------------------------------------------------

    def reserve(self, n_total: int) -> None:
        """Grow capacity to n_total frames (contents beyond n_frames are
        unspecified until appended)."""
        if n_total <= self._x.shape[0]:
            return
        shape = (n_total, self.n_agents, self.dim)
        for name in ("_x", "_v", "_a"):
            grown = np.empty(shape)
            old = getattr(self, name)
            grown[: old.shape[0]] = old
            setattr(self, name, grown)

    def append(self, x, v, a) -> None:
        self.reserve(self._n + 1)
        self._x[self._n] = x
        self._v[self._n] = v
        self._a[self._n] = a
        self._n += 1

    def set_acceleration(self, k: int, a) -> None:
        """Overwrite the stored velocity derivative of frame k (used once, to
        place the dynamics right-hand side at t = 0)."""
        self._a[k] = a

    def mark_filled(self, n: int) -> None:
        """Declare frames [0, n) valid after bulk in-place integration."""
        if n < self.m + 1 or n > self._x.shape[0]:
            raise ValueError("invalid filled count")
        self._n = n

    # -- access -------------------------------------------------------------

    @property
    def n_frames(self) -> int:
        return self._n

    def time_of(self, k: int) -> float:
        return (k - self.m) * self.h

    @property
    def times(self) -> np.ndarray:
        return (np.arange(self._n) - self.m) * self.h

    def arrays(self):
        """Raw (x, v, a) storage including reserved capacity; integrator use."""
        return self._x, self._v, self._a

    def initial_derivative_arrays(self):
        return self._xd, self._vd

    def frame(self, k: int) -> Frame:
        if not 0 <= k < self._n:
            raise CoverageError(f"frame {k} not available (have {self._n})")
        return Frame(self.time_of(k), self._x[k].copy(), self._v[k].copy(), self._a[k].copy())

    @property
    def coverage(self) -> tuple[float, float]:
        return self.time_of(0), self.time_of(self._n - 1)

    def dense_eval(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Positions and velocities at time t.

        Grid times reproduce stored frames exactly; between grid points the
        result is the cubic-Hermite interpolant of the bracketing frames.
        """
        pos = t / self.h + self.m
        k = int(round(pos))
        if 0 <= k < self._n and abs(t - self.time_of(k)) <= 1e-9 * self.h:
            return self._x[k].copy(), self._v[k].copy()
        if pos < 0.0 or pos > self._n - 1:
            lo, hi = self.coverage
            raise CoverageError(f"t={t} outside covered interval [{lo}, {hi}]")
        s = min(int(math.floor(pos)), self._n - 2)
        theta = (t - self.time_of(s)) / self.h
        if s + 1 <= self.m:
            xd0, xd1 = self._xd[s], self._xd[s + 1]
            vd0, vd1 = self._vd[s], self._vd[s + 1]
        else:
            xd0, xd1 = self._v[s], self._v[s + 1]
            vd0, vd1 = self._a[s], self._a[s + 1]
        x = _hermite(theta, self.h, self._x[s], self._x[s + 1], xd0, xd1)
        v = _hermite(theta, self.h, self._v[s], self._v[s + 1], vd0, vd1)
        return x, v

    def initial_velocity_scale(self) -> float:
        """Largest agent speed over the initial interval (divergence guard unit)."""
        speeds = np.linalg.norm(self._v[: self.m + 1], axis=2)
        return float(speeds.max(initial=0.0))


def dense_eval(history: HistoryBuffer, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Module-level alias for :meth:`HistoryBuffer.dense_eval`."""
    return history.dense_eval(t)


# ---------------------------------------------------------------------------
# initial data


@dataclass(frozen=True)
class InitialHistorySpec:
    """Declarative prescription of agent states on the initial interval.

    Kinds: ``constant`` per-agent values, seeded ``random`` draws (positions
    uniform in a box, velocities uniform in a ball, constant in time unless a
    sinusoidal velocity perturbation is switched on), analytic ``linear`` and
    ``sinusoidal`` families with exact derivatives, and raw grid ``samples``
    differentiated numerically.
    """

    kind: str
    positions: tuple = ()
    velocities: tuple = ()
    position_rates: tuple = ()
    velocity_rates: tuple = ()
    position_amplitudes: tuple = ()
    velocity_amplitudes: tuple = ()
    omega: float = 0.0
    phases: tuple = ()
    box_half: float = 0.5
    vel_radius: float = 0.1
    center: tuple = ()
    perturbation: float = 0.0
    perturbation_omega: float = 0.0
    sample_positions: tuple = ()
    sample_velocities: tuple = ()

    def __post_init__(self):
        if self.kind not in INITIAL_KINDS:
            raise ValueError(f"unknown initial-history kind {self.kind!r}")
        if self.kind == "random":
            if not self.box_half >= 0.0 or not self.vel_radius >= 0.0:
                raise ValueError("random initial data needs nonnegative box_half and vel_radius")
            if self.perturbation < 0.0:
                raise ValueError("perturbation amplitude must be nonnegative")

    @classmethod
    def constant(cls, positions, velocities) -> "InitialHistorySpec":
        return cls(kind="constant", positions=_as_nested_tuple(positions),
                   velocities=_as_nested_tuple(velocities))

    @classmethod
    def random(cls, box_half, vel_radius, center=None, perturbation=0.0,
               perturbation_omega=0.0) -> "InitialHistorySpec":
        return cls(kind="random", box_half=float(box_half), vel_radius=float(vel_radius),
                   center=_as_nested_tuple(center) if center is not None else (),
                   perturbation=float(perturbation),
                   perturbation_omega=float(perturbation_omega))

    @classmethod
    def linear(cls, positions, velocities, position_rates=None,
               velocity_rates=None) -> "InitialHistorySpec":
        pos = _as_nested_tuple(positions)
        vel = _as_nested_tuple(velocities)
        zeros = _as_nested_tuple(np.zeros_like(np.asarray(positions, float)))
        return cls(kind="linear", positions=pos, velocities=vel,
                   position_rates=_as_nested_tuple(position_rates) if position_rates is not None else zeros,
                   velocity_rates=_as_nested_tuple(velocity_rates) if velocity_rates is not None else zeros)

    @classmethod
    def sinusoidal(cls, positions, velocities, position_amplitudes=None,
                   velocity_amplitudes=None, omega=1.0, phases=None) -> "InitialHistorySpec":
        pos = np.asarray(positions, float)
        zeros = _as_nested_tuple(np.zeros_like(pos))
        return cls(kind="sinusoidal", positions=_as_nested_tuple(positions),
                   velocities=_as_nested_tuple(velocities),
                   position_amplitudes=_as_nested_tuple(position_amplitudes) if position_amplitudes is not None else zeros,
                   velocity_amplitudes=_as_nested_tuple(velocity_amplitudes) if velocity_amplitudes is not None else zeros,
                   omega=float(omega),
                   phases=_as_nested_tuple(phases) if phases is not None else zeros)

    @classmethod
    def from_samples(cls, positions, velocities) -> "InitialHistorySpec":
        return cls(kind="samples", sample_positions=_as_nested_tuple(positions),
                   sample_velocities=_as_nested_tuple(velocities))


# ---------------------------------------------------------------------------
# scenario configuration


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one simulation run.

    The integration step is h = tau / steps_per_delay, so the delay is an
    exact whole number of steps. Randomized initial data is reproduced from
    rng_seed alone.
    """

    n_agents: int
    dim: int
    tau: float
    influence: InfluenceSpec
    scheme: WeightScheme
    initial: InitialHistorySpec
    steps_per_delay: int
    horizon: float
    record_stride: int = 1
    rng_seed: Optional[int] = None
    guard_factor: float = 1e12

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError("need at least one agent")
        if self.dim < 1:
            raise ValueError("need at least one spatial dimension")
        if not self.tau > 0.0:
            raise ValueError("delay must be positive")
        if self.steps_per_delay < 1:
            raise ValueError("steps_per_delay must be >= 1")
        if not self.horizon > self.tau:
            raise ValueError("horizon must exceed the delay")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if not self.guard_factor > 0.0:
            raise ValueError("guard_factor must be positive")
        if self.initial.kind == "random" and self.rng_seed is None:
            raise ValueError("random initial data requires rng_seed")

    @property
    def step(self) -> float:
        return self.tau / self.steps_per_delay


def _initial_grid_times(config: ScenarioConfig) -> np.ndarray:
    h = config.step
    m = config.steps_per_delay
    return (np.arange(m + 1) - m) * h


def _materialized_random(config: ScenarioConfig):
    """Draw the box/ball initial data; returns base arrays plus the optional
    sinusoidal velocity perturbation parameters."""
    init = config.initial
    n, d = config.n_agents, config.dim
    rng = np.random.default_rng(config.rng_seed)
    center = np.zeros(d) if len(init.center) == 0 else _tuple_to_array(init.center, (d,), "center")
    pos = center + rng.uniform(-init.box_half, init.box_half, (n, d))
    gauss = rng.standard_normal((n, d))
    norms = np.linalg.norm(gauss, axis=1)
    norms[norms == 0.0] = 1.0
    radii = init.vel_radius * rng.random(n) ** (1.0 / d)
    vel = gauss / norms[:, None] * radii[:, None]
    if init.perturbation > 0.0:
        phases = rng.uniform(0.0, 2.0 * math.pi, (n, d))
        omega = init.perturbation_omega if init.perturbation_omega > 0.0 else math.pi / config.tau
        amp = np.full((n, d), init.perturbation)
    else:
        phases, omega, amp = None, 0.0, None
    return pos, vel, amp, omega, phases


def build_history(config: ScenarioConfig) -> HistoryBuffer:
    """Materialize the initial interval [-tau, 0] on the integration grid.

    Analytic kinds store exact derivatives; raw samples get second-order
    finite differences (one-sided at the endpoints). The stored accelerations
    start as the velocity-derivative estimates; the integrator replaces the
    t = 0 entry with the dynamics right-hand side.
    """
    n, d = config.n_agents, config.dim
    m = config.steps_per_delay
    h = config.step
    times = _initial_grid_times(config)
    shape = (m + 1, n, d)
    init = config.initial

    if init.kind == "constant":
        pos0 = _tuple_to_array(init.positions, (n, d), "initial positions")
        vel0 = _tuple_to_array(init.velocities, (n, d), "initial velocities")
        x = np.broadcast_to(pos0, shape).copy()
        v = np.broadcast_to(vel0, shape).copy()
        xd = np.zeros(shape)
        vd = np.zeros(shape)
    elif init.kind == "linear":
        pos0 = _tuple_to_array(init.positions, (n, d), "initial positions")
        vel0 = _tuple_to_array(init.velocities, (n, d), "initial velocities")
        pr = _tuple_to_array(init.position_rates, (n, d), "position rates")
        vr = _tuple_to_array(init.velocity_rates, (n, d), "velocity rates")
        t = times[:, None, None]
        x = pos0 + t * pr
        v = vel0 + t * vr
        xd = np.broadcast_to(pr, shape).copy()
        vd = np.broadcast_to(vr, shape).copy()
    elif init.kind == "sinusoidal":
        pos0 = _tuple_to_array(init.positions, (n, d), "initial positions")
        vel0 = _tuple_to_array(init.velocities, (n, d), "initial velocities")
        ax = _tuple_to_array(init.position_amplitudes, (n, d), "position amplitudes")
        av = _tuple_to_array(init.velocity_amplitudes, (n, d), "velocity amplitudes")
        ph = _tuple_to_array(init.phases, (n, d), "phases")
        w = init.omega
        t = times[:, None, None]
        x = pos0 + ax * np.sin(w * t + ph)
        v = vel0 + av * np.sin(w * t + ph)
        xd = ax * w * np.cos(w * t + ph)
        vd = av * w * np.cos(w * t + ph)
    elif init.kind == "random":
        pos0, vel0, amp, omega, phases = _materialized_random(config)
        x = np.broadcast_to(pos0, shape).copy()
        xd = np.zeros(shape)
        if amp is None:
            v = np.broadcast_to(vel0, shape).copy()
            vd = np.zeros(shape)
        else:
            t = times[:, None, None]
            v = vel0 + amp * np.sin(omega * t + phases)
            vd = amp * omega * np.cos(omega * t + phases)
    else:  # samples
        x = _tuple_to_array(init.sample_positions, shape, "sampled positions")
        v = _tuple_to_array(init.sample_velocities, shape, "sampled velocities")
        edge = 2 if m >= 2 else 1
        xd = np.gradient(x, h, axis=0, edge_order=edge)
        vd = np.gradient(v, h, axis=0, edge_order=edge)

    return HistoryBuffer(h, m, x, v, vd.copy(), xd, vd, tau=config.tau)
