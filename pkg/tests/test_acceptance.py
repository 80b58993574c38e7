"""Acceptance suite: one test per criterion, each printing a pass/fail line
and checking its stated tolerance and runtime budget.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines.
"""

import math
import time
from contextlib import contextmanager
from dataclasses import replace

import numpy as np
import pytest

from flockdde import (
    Certificate,
    FlockingClass,
    InfluenceSpec,
    InitialHistorySpec,
    OscillationClass,
    ScenarioConfig,
    WeightScheme,
    build_history,
    classify_flocking,
    classify_oscillation,
    default_flocking_thresholds,
    find_certificate,
    halanay_gamma,
    initial_diameters,
    integrate,
    monitor_dv_inequality,
    monitor_envelope,
    monitor_startup_bound,
    rearrangement,
    weight_matrix,
    write_scenario,
)
from flockdde.cli import EXIT_OK, main
from flockdde.kernels import pairwise_diameter

ULP = np.spacing(1.0)


@contextmanager
def criterion(num, name, budget_s=None):
    t0 = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"criterion {num} ({name}): FAIL")
        raise
    elapsed = time.perf_counter() - t0
    print(f"criterion {num} ({name}): PASS [{elapsed:.2f}s]")
    if budget_s is not None:
        assert elapsed < budget_s, f"criterion {num} exceeded its {budget_s}s budget"


# ---------------------------------------------------------------------------
# shared certified-scenario matrix (criteria 3, 5, 6, 8)

TAU_MATRIX = 0.1
MATRIX = []
_i = 0
for _N, _d in [(2, 1), (2, 2), (2, 3), (5, 1), (5, 2), (5, 3),
               (10, 1), (10, 2), (10, 3), (20, 1), (20, 2), (20, 3)]:
    for _scheme in ("classical", "normalized"):
        MATRIX.append((_N, _d, [0.25, 0.5, 1.0][_i % 3], _scheme, 100 + _i))
        _i += 1


def _matrix_config(n, d, beta, scheme, seed, horizon):
    return ScenarioConfig(
        n_agents=n, dim=d, tau=TAU_MATRIX,
        influence=InfluenceSpec.inverse_power(beta),
        scheme=WeightScheme(kind=scheme),
        initial=InitialHistorySpec.random(0.1, 0.02),
        steps_per_delay=32, horizon=horizon, rng_seed=seed)


@pytest.fixture(scope="module")
def certified_suite(tmp_path_factory):
    """Certificate, trajectory and monitor reports for the whole matrix, plus
    the scenario file path for CLI-level checks."""
    tmp = tmp_path_factory.mktemp("matrix")
    suite = []
    for k, (n, d, beta, scheme, seed) in enumerate(MATRIX):
        cfg0 = _matrix_config(n, d, beta, scheme, seed, horizon=1.0)
        d_x0, d_v0 = initial_diameters(build_history(cfg0))
        cert = find_certificate(d_x0, d_v0, cfg0.tau, cfg0.influence)
        assert isinstance(cert, Certificate), (n, d, beta, scheme)
        cfg = replace(cfg0, horizon=20.0 * cfg0.tau + 10.0 / cert.C)
        path = tmp / f"scenario_{k:02d}.ini"
        write_scenario(cfg, path)
        traj = integrate(cfg)
        reports = {
            "envelope": monitor_envelope(traj, cert),
            "startup": monitor_startup_bound(traj),
            "dv": monitor_dv_inequality(traj, (cfg.tau, float(traj.times[-1]))),
        }
        suite.append(dict(config=cfg, cert=cert, traj=traj, reports=reports,
                          path=str(path)))
    return suite


# ---------------------------------------------------------------------------


def test_criterion_1_quarter_delay_boundary(tmp_path):
    with criterion(1, "tau = 1/4 feasibility boundary", budget_s=5.0):
        cfg = ScenarioConfig(
            n_agents=2, dim=1, tau=0.1,
            influence=InfluenceSpec.constant(1.0),
            scheme=WeightScheme.classical(),
            initial=InitialHistorySpec.constant([[0.0], [0.0]], [[0.0], [0.0]]),
            steps_per_delay=8, horizon=1.0)
        path = tmp_path / "zero.ini"
        write_scenario(cfg, path)
        out = str(tmp_path / "sweep.csv")
        rc = main(["sweep", str(path), "--param", "tau",
                   "--lo", "0.24", "--hi", "0.26", "--points", "201",
                   "--out", out])
        assert rc == EXIT_OK
        rows = [line.split(",") for line in
                open(out).read().strip().split("\n")[1:]]
        assert len(rows) == 201
        flags = [r[1] for r in rows]
        flips = [(float(a[0]), float(b[0]))
                 for a, b in zip(rows, rows[1:]) if a[1] != b[1]]
        assert len(flips) == 1, flips
        lo, hi = flips[0]
        assert abs(lo - 0.25) < 1e-3 and abs(hi - 0.25) < 1e-3
        assert flags[0] == "1" and flags[-1] == "0"


def test_criterion_2_oscillation_triptych():
    with criterion(2, "two-agent delay threshold triptych", budget_s=5.0):
        expected = {0.1: OscillationClass.MONOTONE_DECAY,
                    0.5: OscillationClass.OSCILLATORY_DECAY,
                    1.0: OscillationClass.OSCILLATORY_GROWTH}
        for tau, want in expected.items():
            cfg = ScenarioConfig(
                n_agents=2, dim=1, tau=tau,
                influence=InfluenceSpec.constant(1.0),
                scheme=WeightScheme.constant_coupling(1.0),
                initial=InitialHistorySpec.constant([[0.0], [1.0]],
                                                    [[0.5], [-0.5]]),
                steps_per_delay=64, horizon=40.0 * tau)
            traj = integrate(cfg)
            w = traj.velocities[:, 0, 0] - traj.velocities[:, 1, 0]
            got = classify_oscillation(traj.times, w, tau)
            assert got is want, (tau, got)


def test_criterion_3_certified_end_to_end(certified_suite):
    with criterion(3, "certified scenarios verify end to end", budget_s=60.0):
        assert len(certified_suite) >= 20
        for item in certified_suite:
            cfg, cert, traj = item["config"], item["cert"], item["traj"]
            # CLI contract: verify exits 0 on every certified scenario
            assert main(["verify", item["path"]]) == EXIT_OK, item["path"]
            # explicit re-checks of the claims behind that exit code
            assert item["reports"]["envelope"].passed
            assert item["reports"]["startup"].passed
            dx_cap, dv_floor = default_flocking_thresholds(cert, traj)
            assert classify_flocking(traj, dx_cap, dv_floor) is FlockingClass.FLOCKING
            proof_bound = cert.inputs.d_x0 + (1.0 + 2.0 * cfg.tau) * (
                cfg.tau + 1.0 / cert.C) * cert.inputs.d_v0
            assert float(traj.d_x.max()) <= proof_bound + 1e-12


def test_criterion_4_halanay_oracle_equivalence():
    with criterion(4, "delayed-Gronwall rate solver vs oracle", budget_s=1.0):
        rng = np.random.default_rng(4)

        def oracle(alpha, beta, tau):
            def g(gam):
                x = gam * tau
                ratio = math.expm1(x) / x if x > 1e-12 else 1.0 + 0.5 * x
                return (beta - gam) - alpha * math.exp(x) * ratio

            lo, hi = 0.0, beta - alpha
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if g(mid) >= 0.0:
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)

        for _ in range(100):
            beta = rng.uniform(0.05, 5.0)
            alpha = beta * rng.uniform(0.02, 0.98)
            tau = rng.uniform(1e-3, 1.0)
            gamma = halanay_gamma(alpha, beta, tau)
            assert 0.0 < gamma < beta - alpha
            x = gamma * tau
            residual = (beta - gamma) - alpha * math.exp(x) * (math.expm1(x) / x)
            assert abs(residual) < 1e-12 * beta
            assert abs(gamma - oracle(alpha, beta, tau)) < 1e-10


def test_criterion_5_certificate_below_halanay_rate(certified_suite):
    with criterion(5, "certificate rate never exceeds the solved rate"):
        for item in certified_suite:
            cert = item["cert"]
            tau = cert.inputs.tau
            u = cert.inputs.d_x0 + (1.0 + 2.0 * tau) * (
                tau + 1.0 / cert.C) * cert.inputs.d_v0
            psi_bound = rearrangement(cert.inputs.influence, u)
            assert psi_bound > 4.0 * tau  # feasibility implies this
            gamma = halanay_gamma(4.0 * tau, psi_bound, tau)
            assert gamma >= cert.C - 1e-9


def test_criterion_6_momentum_dichotomy(certified_suite):
    with criterion(6, "momentum conserved (classical) vs drifting (normalized)",
                   budget_s=10.0):
        checked = 0
        for item in certified_suite:
            cfg, traj = item["config"], item["traj"]
            if cfg.scheme.kind != "classical":
                continue
            checked += 1
            i0 = int(np.argmin(np.abs(traj.times)))  # frame at t = 0
            drift = np.abs(traj.momentum - traj.momentum[i0]).max()
            assert drift <= 1e3 * traj.h ** 4 * float(traj.times[-1])
        assert checked >= 10
        # a strongly nonsymmetric normalized run drifts measurably
        cfg = ScenarioConfig(
            n_agents=3, dim=1, tau=0.05,
            influence=InfluenceSpec.inverse_power(1.0),
            scheme=WeightScheme.normalized(),
            initial=InitialHistorySpec.constant([[0.0], [1.0], [3.0]],
                                                [[0.5], [0.0], [-0.5]]),
            steps_per_delay=32, horizon=5.0)
        traj = integrate(cfg)
        assert np.abs(traj.momentum - traj.momentum[0]).max() > 1e-6


def test_criterion_7_integrator_order():
    with criterion(7, "fourth-order step-halving ratio", budget_s=10.0):
        cfg = ScenarioConfig(
            n_agents=3, dim=2, tau=0.2,
            influence=InfluenceSpec.constant(1.0),
            scheme=WeightScheme.classical(),
            initial=InitialHistorySpec.random(0.3, 3.0),
            steps_per_delay=16, horizon=2.0, rng_seed=11)
        d_x0, d_v0 = initial_diameters(build_history(cfg))
        assert isinstance(find_certificate(d_x0, d_v0, cfg.tau, cfg.influence),
                          Certificate)

        def terminal(m):
            t = integrate(replace(cfg, steps_per_delay=m))
            return np.concatenate([t.positions[-1].ravel(),
                                   t.velocities[-1].ravel()])

        ref = terminal(256)
        e16 = np.abs(terminal(16) - ref).max()
        e32 = np.abs(terminal(32) - ref).max()
        assert 12.0 <= e16 / e32 <= 20.0, e16 / e32


def test_criterion_8_dv_inequality_monitor(certified_suite):
    with criterion(8, "velocity-diameter inequality along the matrix"):
        for item in certified_suite:
            rep = item["reports"]["dv"]
            assert rep.passed, (item["path"], rep)
            assert rep.worst_violation <= rep.tolerance_used
            assert rep.notes["checked"] > 0


def test_criterion_9_weight_bounds_bulk():
    with criterion(9, "weight-matrix bounds over 1e5 random frames", budget_s=5.0):
        rng = np.random.default_rng(9)
        influences = [InfluenceSpec.constant(0.85),
                      InfluenceSpec.inverse_power(0.5),
                      InfluenceSpec.inverse_power(1.5),
                      InfluenceSpec.from_table([(0.0, 0.9), (1.0, 0.3),
                                                (3.0, 0.55), (6.0, 0.1)])]
        classical = WeightScheme.classical()
        normalized = WeightScheme.normalized()
        total = 100_000
        ns = rng.integers(1, 21, total)
        ds = rng.integers(1, 4, total)
        pool = rng.uniform(-3.0, 3.0, (total, 20, 3))
        infl_idx = rng.integers(0, len(influences), total)
        worst_row_c = -np.inf
        worst_row_n = 0.0
        worst_floor = np.inf
        for i in range(total):
            n, d = int(ns[i]), int(ds[i])
            pos = pool[i, :n, :d]
            infl = influences[infl_idx[i]]
            scheme = classical if i % 2 == 0 else normalized
            w = weight_matrix(pos, infl, scheme)
            rows = w.sum(axis=1)
            if scheme is classical:
                worst_row_c = max(worst_row_c, float(rows.max()) - 1.0)
            else:
                worst_row_n = max(worst_row_n, float(np.abs(rows - 1.0).max()))
            floor = rearrangement(infl, pairwise_diameter(pos)) / n
            worst_floor = min(worst_floor, float(w.min()) - floor)
        assert worst_row_c <= 4 * ULP
        assert worst_row_n <= 4 * ULP
        assert worst_floor >= -4 * ULP
