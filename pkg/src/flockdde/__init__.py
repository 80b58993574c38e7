"""Delayed velocity-alignment flocking: a fixed-step DDE simulator with
decay-rate certificates and trajectory monitors.

Agents align to the states their neighbors had one reaction delay ago, with
interaction weights that need not be symmetric. The package integrates the
dynamics by the method of steps, decides a sufficient flocking condition
numerically, and checks the resulting exponential decay bounds along
trajectories.
"""

__version__ = "0.1.0"

from .analysis import (
    Certificate,
    CertificateInputs,
    FlockingClass,
    Infeasible,
    MonitorReport,
    OscillationClass,
    VARIANT_CONSTANT_VELOCITY,
    VARIANT_GENERAL,
    classify_flocking,
    classify_oscillation,
    condition_lhs_rhs,
    default_flocking_thresholds,
    diameters,
    find_certificate,
    halanay_gamma,
    initial_diameters,
    monitor_dv_inequality,
    monitor_envelope,
    monitor_startup_bound,
    rearrangement,
)
from .core import (
    CoverageError,
    DegenerateWeightsError,
    FlockingError,
    Frame,
    HistoryBuffer,
    InfluenceSpec,
    InitialHistorySpec,
    ScenarioConfig,
    ScopeError,
    WeightScheme,
    build_history,
    dense_eval,
    evaluate_influence,
)
from .dynamics import Trajectory, export_csv, integrate, rhs, weight_matrix
from .kernels import BACKEND
from .scenario import ConfigError, parse_scenario, parse_scenario_text, scenario_text, write_scenario

__all__ = [
    "BACKEND",
    "Certificate",
    "CertificateInputs",
    "ConfigError",
    "CoverageError",
    "DegenerateWeightsError",
    "FlockingClass",
    "FlockingError",
    "Frame",
    "HistoryBuffer",
    "Infeasible",
    "InfluenceSpec",
    "InitialHistorySpec",
    "MonitorReport",
    "OscillationClass",
    "ScenarioConfig",
    "ScopeError",
    "Trajectory",
    "VARIANT_CONSTANT_VELOCITY",
    "VARIANT_GENERAL",
    "WeightScheme",
    "build_history",
    "classify_flocking",
    "classify_oscillation",
    "condition_lhs_rhs",
    "default_flocking_thresholds",
    "dense_eval",
    "diameters",
    "evaluate_influence",
    "export_csv",
    "find_certificate",
    "halanay_gamma",
    "initial_diameters",
    "integrate",
    "monitor_dv_inequality",
    "monitor_envelope",
    "monitor_startup_bound",
    "parse_scenario",
    "parse_scenario_text",
    "rearrangement",
    "rhs",
    "scenario_text",
    "weight_matrix",
    "write_scenario",
]
