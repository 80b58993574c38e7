import numpy as np
import pytest

from flockdde import (
    InfluenceSpec,
    InitialHistorySpec,
    ScenarioConfig,
    WeightScheme,
)


def make_config(**overrides) -> ScenarioConfig:
    """A small, certifiable random scenario; tests override what they need."""
    kw = dict(
        n_agents=5,
        dim=2,
        tau=0.1,
        influence=InfluenceSpec.inverse_power(0.5),
        scheme=WeightScheme.classical(),
        initial=InitialHistorySpec.random(0.1, 0.02),
        steps_per_delay=16,
        horizon=2.0,
        rng_seed=42,
    )
    kw.update(overrides)
    return ScenarioConfig(**kw)


def two_agent_coupling_config(tau, coupling=1.0, w0=1.0, **overrides) -> ScenarioConfig:
    """Two agents on a line with constant coupling: the velocity gap
    w = v_1 - v_2 solves dw/dt = -2*coupling*w(t - tau)."""
    kw = dict(
        n_agents=2,
        dim=1,
        tau=tau,
        influence=InfluenceSpec.constant(1.0),
        scheme=WeightScheme.constant_coupling(coupling),
        initial=InitialHistorySpec.constant([[0.0], [1.0]], [[0.5 * w0], [-0.5 * w0]]),
        steps_per_delay=64,
        horizon=40.0 * tau,
    )
    kw.update(overrides)
    return ScenarioConfig(**kw)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260809)
