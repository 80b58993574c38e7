import math

import numpy as np
import pytest

from flockdde import (
    InfluenceSpec,
    InitialHistorySpec,
    ScenarioConfig,
    WeightScheme,
    parse_scenario,
    write_scenario,
)
from flockdde.cli import (
    EXIT_BAD_INPUT,
    EXIT_DIVERGED,
    EXIT_INFEASIBLE,
    EXIT_MONITOR_FAILED,
    EXIT_OK,
    main,
)

from conftest import make_config, two_agent_coupling_config


def _write(tmp_path, cfg, name="scenario.ini"):
    path = tmp_path / name
    write_scenario(cfg, path)
    return str(path)


def _read_rows(path):
    lines = open(path).read().strip().split("\n")
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


# -- simulate ------------------------------------------------------------------


def test_simulate_constant_velocities_zero_dv_column(tmp_path, capsys):
    cfg = make_config(initial=InitialHistorySpec.constant(
        [[0, 0], [1, 0], [0, 1], [1, 1], [2, 1]], [[0.2, 0.1]] * 5),
        steps_per_delay=8, horizon=1.0)
    out = str(tmp_path / "t.csv")
    assert main(["simulate", _write(tmp_path, cfg), "--out", out]) == EXIT_OK
    header, rows = _read_rows(out)
    i = header.index("d_v")
    assert all(float(r[i]) == 0.0 for r in rows)


def test_simulate_row_count_matches_config_arithmetic(tmp_path):
    cfg = make_config(steps_per_delay=16, horizon=1.0, record_stride=4, rng_seed=3)
    out = str(tmp_path / "t.csv")
    assert main(["simulate", _write(tmp_path, cfg), "--out", out]) == EXIT_OK
    _, rows = _read_rows(out)
    h = cfg.tau / cfg.steps_per_delay
    expected = 1 + math.floor(cfg.horizon / (h * cfg.record_stride)) \
        + cfg.steps_per_delay // cfg.record_stride
    assert len(rows) == expected


def test_simulate_divergence_exit_code_and_manifest(tmp_path):
    cfg = two_agent_coupling_config(tau=1.0, horizon=300.0, steps_per_delay=32,
                                    guard_factor=1e6)
    out = str(tmp_path / "d.csv")
    assert main(["simulate", _write(tmp_path, cfg), "--out", out]) == EXIT_DIVERGED
    manifest = open(out + ".manifest").read()
    assert "diverged = true" in manifest
    assert "divergence_time" in manifest
    # CSV truncated before the horizon
    _, rows = _read_rows(out)
    assert float(rows[-1][0]) < 300.0


def test_simulate_malformed_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[agents]\ncount = two\n")
    assert main(["simulate", str(bad), "--out", str(tmp_path / "x.csv")]) == EXIT_BAD_INPUT
    assert "error" in capsys.readouterr().err


def test_simulate_reruns_bit_identical(tmp_path):
    cfg = make_config(rng_seed=12, scheme=WeightScheme.normalized(),
                      steps_per_delay=8, horizon=1.0)
    path = _write(tmp_path, cfg)
    out1, out2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    assert main(["simulate", path, "--out", out1]) == EXIT_OK
    assert main(["simulate", path, "--out", out2]) == EXIT_OK
    assert open(out1, "rb").read() == open(out2, "rb").read()


def test_manifest_reparses_to_equal_config(tmp_path):
    cfg = make_config(steps_per_delay=8, horizon=1.0)
    out = str(tmp_path / "t.csv")
    assert main(["simulate", _write(tmp_path, cfg), "--out", out]) == EXIT_OK
    assert parse_scenario(out + ".manifest") == cfg


def test_seed_override_changes_initial_data(tmp_path):
    cfg = make_config(steps_per_delay=8, horizon=1.0, rng_seed=1)
    path = _write(tmp_path, cfg)
    out1, out2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    assert main(["simulate", path, "--out", out1]) == EXIT_OK
    assert main(["simulate", path, "--out", out2, "--seed-override", "2"]) == EXIT_OK
    assert open(out1).read() != open(out2).read()


# -- certify -------------------------------------------------------------------


ZERO_DIAMETER = dict(
    influence=InfluenceSpec.constant(1.0),
    scheme=WeightScheme.classical(),
    initial=InitialHistorySpec.constant([[0.0], [0.0]], [[0.0], [0.0]]),
    n_agents=2, dim=1, steps_per_delay=8, horizon=1.0, rng_seed=None)


def test_certify_infeasible_beyond_quarter(tmp_path, capsys):
    cfg = make_config(tau=0.3, **ZERO_DIAMETER)
    assert main(["certify", _write(tmp_path, cfg)]) == EXIT_INFEASIBLE
    assert "feasible = false" in capsys.readouterr().out


def test_certify_feasible_small_delay(tmp_path, capsys):
    cfg = make_config(tau=0.2, **ZERO_DIAMETER)
    report = str(tmp_path / "cert.txt")
    assert main(["certify", _write(tmp_path, cfg), "--report", report]) == EXIT_OK
    text = open(report).read()
    assert "feasible = true" in text
    c_line = [l for l in text.splitlines() if l.startswith("c = ")][0]
    assert abs(float(c_line.split("=")[1]) - 0.16050121702933686) < 1e-9


def test_certify_zero_velocity_diameter(tmp_path):
    cfg = make_config(tau=0.1, **ZERO_DIAMETER)
    assert main(["certify", _write(tmp_path, cfg)]) == EXIT_OK


# -- verify --------------------------------------------------------------------


@pytest.fixture(scope="module")
def certified_scenario_file(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("verify")
    cfg = make_config(n_agents=8, dim=2, tau=0.05,
                      influence=InfluenceSpec.inverse_power(0.5),
                      initial=InitialHistorySpec.random(0.1, 0.02),
                      steps_per_delay=32, horizon=13.0, rng_seed=19)
    return _write(tmp, cfg), cfg


def test_verify_certified_scenario_passes(certified_scenario_file, tmp_path, capsys):
    path, _ = certified_scenario_file
    report = str(tmp_path / "verify.txt")
    assert main(["verify", path, "--report", report]) == EXIT_OK
    text = open(report).read()
    assert "classification = flocking" in text
    assert text.count("pass = true") >= 4  # three monitors plus the verdict


def test_verify_uncertifiable_scenario_skips_monitors(tmp_path, capsys):
    cfg = make_config(tau=0.3, **ZERO_DIAMETER)
    assert main(["verify", _write(tmp_path, cfg)]) == EXIT_INFEASIBLE
    assert "monitors = skipped" in capsys.readouterr().out


def test_verify_tightened_envelope_fails(certified_scenario_file, capsys):
    path, _ = certified_scenario_file
    assert main(["verify", path, "--envelope-rate-multiplier", "10"]) \
        == EXIT_MONITOR_FAILED


def test_verify_rejects_constant_coupling(tmp_path, capsys):
    cfg = two_agent_coupling_config(tau=0.1, coupling=0.4)
    assert main(["verify", _write(tmp_path, cfg)]) == EXIT_BAD_INPUT


# -- sweep ---------------------------------------------------------------------


def test_sweep_finds_quarter_threshold(tmp_path):
    cfg = make_config(tau=0.1, **ZERO_DIAMETER)
    out = str(tmp_path / "sweep.csv")
    assert main(["sweep", _write(tmp_path, cfg), "--param", "tau",
                 "--lo", "0.2", "--hi", "0.3", "--points", "11",
                 "--out", out]) == EXIT_OK
    _, rows = _read_rows(out)
    flags = [r[1] for r in rows]
    flips = sum(a != b for a, b in zip(flags, flags[1:]))
    assert flips == 1
    assert flags[0] == "1" and flags[-1] == "0"


def test_single_point_sweep_matches_certify(tmp_path, capsys):
    cfg = make_config(tau=0.2, **ZERO_DIAMETER)
    path = _write(tmp_path, cfg)
    out = str(tmp_path / "one.csv")
    assert main(["sweep", path, "--param", "tau", "--lo", "0.2", "--hi", "0.2",
                 "--points", "1", "--out", out]) == EXIT_OK
    _, rows = _read_rows(out)
    report = str(tmp_path / "cert.txt")
    assert main(["certify", path, "--report", report]) == EXIT_OK
    c_line = [l for l in open(report) if l.startswith("c = ")][0]
    assert float(rows[0][2]) == float(c_line.split("=")[1])


def test_sweep_beta_monotone_best_rate(tmp_path):
    cfg = make_config(n_agents=2, dim=1, tau=0.05,
                      influence=InfluenceSpec.inverse_power(1.0),
                      initial=InitialHistorySpec.constant([[0.0], [0.6]],
                                                          [[0.01], [-0.01]]),
                      steps_per_delay=8, horizon=1.0, rng_seed=None)
    out = str(tmp_path / "beta.csv")
    assert main(["sweep", _write(tmp_path, cfg), "--param", "beta",
                 "--lo", "0.1", "--hi", "2.0", "--points", "8",
                 "--out", out]) == EXIT_OK
    _, rows = _read_rows(out)
    assert all(r[1] == "1" for r in rows)
    best_c = [float(r[2]) for r in rows]
    assert all(a >= b - 1e-12 for a, b in zip(best_c, best_c[1:]))


def test_sweep_with_simulation_and_threads(tmp_path):
    cfg = make_config(steps_per_delay=8, horizon=1.5, rng_seed=44)
    out = str(tmp_path / "sim.csv")
    assert main(["sweep", _write(tmp_path, cfg), "--param", "dv0_scale",
                 "--lo", "0.5", "--hi", "1.5", "--points", "3",
                 "--out", out, "--simulate", "--threads", "2"]) == EXIT_OK
    _, rows = _read_rows(out)
    assert len(rows) == 3
    assert all(r[4] != "" for r in rows)


# -- demo ----------------------------------------------------------------------


@pytest.mark.parametrize("tau,expected", [
    ("0.1", "monotone_decay"),
    ("0.5", "oscillatory_decay"),
    ("1.0", "oscillatory_growth"),
])
def test_demo_oscillation_matches_prediction(tau, expected, capsys, tmp_path):
    assert main(["demo-oscillation", "--tau", tau,
                 "--out", str(tmp_path / "w.csv")]) == EXIT_OK
    out = capsys.readouterr().out
    assert f"predicted: {expected}" in out
    assert f"observed:  {expected}" in out
