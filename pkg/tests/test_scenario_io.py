import numpy as np
import pytest

from flockdde import (
    ConfigError,
    InfluenceSpec,
    InitialHistorySpec,
    ScenarioConfig,
    WeightScheme,
    parse_scenario_text,
    scenario_text,
)

from conftest import make_config


CONFIGS = [
    make_config(),
    make_config(influence=InfluenceSpec.constant(0.73),
                scheme=WeightScheme.normalized()),
    make_config(influence=InfluenceSpec.from_table(
        [(0.0, 1.0), (0.5, 0.912345678901234), (2.0, 0.25)])),
    make_config(n_agents=2, dim=1,
                scheme=WeightScheme.constant_coupling(0.37),
                initial=InitialHistorySpec.constant([[0.0], [1.0]],
                                                    [[0.1], [-0.1]]),
                rng_seed=None),
    make_config(n_agents=2, dim=1,
                initial=InitialHistorySpec.linear(
                    [[0.0], [1.0]], [[0.1], [0.2]],
                    position_rates=[[0.3], [0.0]],
                    velocity_rates=[[1.0], [-1.0]]),
                rng_seed=None),
    make_config(n_agents=2, dim=1,
                initial=InitialHistorySpec.sinusoidal(
                    [[0.0], [1.0]], [[0.0], [0.0]],
                    velocity_amplitudes=[[1.0], [-1.0]], omega=2.0,
                    phases=[[0.25], [0.5]]),
                rng_seed=None),
    make_config(initial=InitialHistorySpec.random(
        0.2, 0.05, center=(1.0, -2.0), perturbation=0.01,
        perturbation_omega=3.0), rng_seed=97),
    make_config(record_stride=4, guard_factor=1e9, steps_per_delay=24),
]


@pytest.mark.parametrize("config", CONFIGS)
def test_roundtrip_is_lossless(config):
    assert parse_scenario_text(scenario_text(config)) == config


def test_samples_kind_roundtrip():
    m = 4
    h = 0.1 / m
    times = (np.arange(m + 1) - m) * h
    x = np.stack([np.stack([times, times ** 2], axis=1),
                  np.stack([np.cos(times), times], axis=1)], axis=1)
    v = 2.0 * x
    cfg = make_config(n_agents=2, dim=2, steps_per_delay=m,
                      initial=InitialHistorySpec.from_samples(x, v),
                      rng_seed=None)
    assert parse_scenario_text(scenario_text(cfg)) == cfg


def test_manifest_section_is_ignored():
    cfg = make_config()
    text = scenario_text(cfg) + "\n[manifest]\ncommand = simulate\n"
    assert parse_scenario_text(text) == cfg


@pytest.mark.parametrize("mutate,needle", [
    (lambda t: t.replace("[agents]", "[agentz]"), "unknown section"),
    (lambda t: t.replace("count = 5", "count = five"), "not an integer"),
    (lambda t: t.replace("kind = inverse_power", "kind = mystery"), "unknown"),
    (lambda t: t.replace("tau = 0.1", "bogus_field = 3\ntau = 0.1"), "unknown field"),
    (lambda t: t.replace("tau = 0.1\n", ""), "missing required field"),
])
def test_malformed_files_raise_config_errors(mutate, needle):
    text = mutate(scenario_text(make_config()))
    with pytest.raises(ConfigError) as err:
        parse_scenario_text(text)
    assert needle in str(err.value)


def test_semantic_errors_surface_as_config_errors():
    text = scenario_text(make_config()).replace("horizon = 2.0", "horizon = 0.01")
    with pytest.raises(ConfigError):
        parse_scenario_text(text)


def test_float_fields_roundtrip_exactly():
    cfg = make_config(tau=0.1 + 1e-17, horizon=np.nextafter(2.0, 3.0))
    parsed = parse_scenario_text(scenario_text(cfg))
    assert parsed.tau == cfg.tau
    assert parsed.horizon == cfg.horizon
