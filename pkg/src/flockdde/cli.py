"""Command-line front end: simulate / certify / verify / sweep /
demo-oscillation, plus report and manifest emission.

Exit codes: 0 success or feasible, 2 bad input, 3 divergence guard tripped,
4 infeasible certificate, 5 certified but a monitor failed (the strongest
self-test: the decay theory guarantees those monitors pass, so 5 signals an
implementation bug).
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Optional

import numpy as np

from . import __version__
from .analysis import (
    VARIANT_CONSTANT_VELOCITY,
    VARIANT_GENERAL,
    Certificate,
    FlockingClass,
    Infeasible,
    MonitorReport,
    OscillationClass,
    classify_flocking,
    classify_oscillation,
    default_flocking_thresholds,
    find_certificate,
    initial_diameters,
    monitor_dv_inequality,
    monitor_envelope,
    monitor_startup_bound,
)
from .core import (
    CoverageError,
    FlockingError,
    InfluenceSpec,
    InitialHistorySpec,
    ScenarioConfig,
    ScopeError,
    WeightScheme,
    build_history,
)
from .dynamics import export_csv, integrate
from .scenario import ConfigError, parse_scenario, scenario_text

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_DIVERGED = 3
EXIT_INFEASIBLE = 4
EXIT_MONITOR_FAILED = 5

OSCILLATION_THRESHOLD = math.exp(-1.0)
GROWTH_THRESHOLD = math.pi / 2.0


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_BAD_INPUT


def _load_config(config_path, seed_override: Optional[int]) -> ScenarioConfig:
    config = parse_scenario(config_path)
    if seed_override is not None:
        config = replace(config, rng_seed=int(seed_override))
    return config


def _resolve_variant(config: ScenarioConfig, variant: Optional[str]) -> str:
    """The general certificate is the default; the simplified
    constant-velocity variant must be requested and requires initial
    velocities that are constant in time."""
    if variant in (None, "general"):
        return VARIANT_GENERAL
    if variant in ("constant-velocity", "constant_velocity"):
        hist = build_history(config)
        v = hist.arrays()[1][: hist.m + 1]
        if not np.array_equal(v, np.broadcast_to(v[0], v.shape)):
            raise ConfigError("constant-velocity variant requires initial "
                              "velocities constant on the initial interval")
        return VARIANT_CONSTANT_VELOCITY
    raise ConfigError(f"unknown certificate variant {variant!r}")


def _write_manifest(path, config: ScenarioConfig, command: str, outputs: dict,
                    wall_time: float, notes: Optional[dict] = None) -> None:
    lines = [scenario_text(config), "[manifest]"]
    lines.append(f"command = {command}")
    lines.append(f"version = {__version__}")
    lines.append(f"wall_time_s = {_fmt(wall_time)}")
    for name, p in outputs.items():
        lines.append(f"output_{name} = {p}")
    for key, value in (notes or {}).items():
        lines.append(f"{key} = {value}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _certificate_lines(result, config: ScenarioConfig, d_x0: float, d_v0: float) -> list[str]:
    in_scope = (config.scheme.kind != "constant_coupling"
                and config.scheme.row_bound_satisfied(config.n_agents))
    lines = ["[certificate]"]
    lines.append(f"feasible = {'true' if isinstance(result, Certificate) else 'false'}")
    lines.append(f"variant = {result.variant}")
    if isinstance(result, Certificate):
        lines.append(f"c = {_fmt(result.C)}")
        lines.append(f"margin = {_fmt(result.margin)}")
        lines.append(f"feasible_low = {_fmt(result.feasible_low)}")
        lines.append(f"feasible_high = {_fmt(result.feasible_high)}")
    else:
        lines.append(f"best_c = {_fmt(result.best_C)}")
        lines.append(f"best_margin = {_fmt(result.best_margin)}")
    lines.append(f"d_x0 = {_fmt(d_x0)}")
    lines.append(f"d_v0 = {_fmt(d_v0)}")
    lines.append(f"tau = {_fmt(config.tau)}")
    if not in_scope:
        lines.append("scheme_in_scope = false  ; weight rows may exceed 1")
    return lines


def _monitor_lines(report: MonitorReport) -> list[str]:
    lines = [f"[monitor.{report.kind}]"]
    lines.append(f"pass = {'true' if report.passed else 'false'}")
    lines.append(f"worst_violation = {_fmt(report.worst_violation)}")
    lines.append(f"time_of_worst = {_fmt(report.time_of_worst)}")
    lines.append(f"tolerance = {_fmt(report.tolerance_used)}")
    for key, value in report.notes.items():
        if isinstance(value, bool):
            lines.append(f"note_{key} = {'true' if value else 'false'}")
        elif isinstance(value, float):
            lines.append(f"note_{key} = {_fmt(value)}")
        else:
            lines.append(f"note_{key} = {value}")
    return lines


def _emit(lines: list[str], report_path) -> None:
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if report_path:
        with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(config_path, out_csv, manifest_path=None, seed_override=None) -> int:
    t0 = time.perf_counter()
    try:
        config = _load_config(config_path, seed_override)
    except (ConfigError, OSError, ValueError) as exc:
        return _fail(str(exc))
    traj = integrate(config)
    export_csv(traj, out_csv)
    notes = {}
    if traj.diverged:
        notes["diverged"] = "true"
        notes["divergence_time"] = _fmt(traj.divergence_time)
    manifest = manifest_path or f"{out_csv}.manifest"
    _write_manifest(manifest, config, "simulate", {"csv": out_csv},
                    time.perf_counter() - t0, notes)
    if traj.diverged:
        print(f"divergence guard tripped at t = {_fmt(traj.divergence_time)}")
        return EXIT_DIVERGED
    print(f"wrote {traj.n_recorded} frames to {out_csv}")
    return EXIT_OK


def cmd_certify(config_path, report_path=None, variant=None, seed_override=None) -> int:
    try:
        config = _load_config(config_path, seed_override)
        variant = _resolve_variant(config, variant)
    except (ConfigError, OSError, ValueError) as exc:
        return _fail(str(exc))
    d_x0, d_v0 = initial_diameters(build_history(config))
    result = find_certificate(d_x0, d_v0, config.tau, config.influence, variant)
    _emit(_certificate_lines(result, config, d_x0, d_v0), report_path)
    return EXIT_OK if isinstance(result, Certificate) else EXIT_INFEASIBLE


def cmd_verify(config_path, out_report=None, envelope_rate_multiplier=1.0,
               variant=None, seed_override=None) -> int:
    t0 = time.perf_counter()
    try:
        config = _load_config(config_path, seed_override)
        variant = _resolve_variant(config, variant)
        if config.scheme.kind == "constant_coupling":
            raise ScopeError("verify needs the classical or normalized scheme")
    except (ConfigError, OSError, ValueError, ScopeError) as exc:
        return _fail(str(exc))

    d_x0, d_v0 = initial_diameters(build_history(config))
    result = find_certificate(d_x0, d_v0, config.tau, config.influence, variant)
    lines = _certificate_lines(result, config, d_x0, d_v0)
    if isinstance(result, Infeasible):
        lines.append("")
        lines.append("[verify]")
        lines.append("monitors = skipped")
        _emit(lines, out_report)
        return EXIT_INFEASIBLE

    traj = integrate(config)
    if traj.diverged:
        lines += ["", "[verify]", "diverged = true",
                  f"divergence_time = {_fmt(traj.divergence_time)}"]
        _emit(lines, out_report)
        return EXIT_MONITOR_FAILED

    reports = [
        monitor_envelope(traj, result, rate_multiplier=envelope_rate_multiplier),
        monitor_startup_bound(traj),
        monitor_dv_inequality(traj, (config.tau, float(traj.times[-1]))),
    ]
    dx_cap, dv_floor = default_flocking_thresholds(result, traj)
    classification = classify_flocking(traj, dx_cap, dv_floor)

    for rep in reports:
        lines.append("")
        lines += _monitor_lines(rep)
    lines += ["", "[flocking]",
              f"classification = {classification.value}",
              f"dx_cap = {_fmt(dx_cap)}",
              f"dv_floor = {_fmt(dv_floor)}",
              f"max_d_x = {_fmt(float(traj.d_x.max()))}",
              f"final_d_v = {_fmt(float(traj.d_v[-1]))}"]
    ok = all(r.passed for r in reports) and classification is FlockingClass.FLOCKING
    lines += ["", "[verify]", f"pass = {'true' if ok else 'false'}",
              f"wall_time_s = {_fmt(time.perf_counter() - t0)}"]
    _emit(lines, out_report)
    if out_report:
        _write_manifest(f"{out_report}.manifest", config, "verify",
                        {"report": out_report}, time.perf_counter() - t0)
    return EXIT_OK if ok else EXIT_MONITOR_FAILED


def _scale_initial_velocities(init: InitialHistorySpec, factor: float) -> InitialHistorySpec:
    def scale(values):
        return tuple(tuple(factor * v for v in row) for row in values) if values else values

    if init.kind == "random":
        return replace(init, vel_radius=factor * init.vel_radius,
                       perturbation=factor * init.perturbation)
    if init.kind == "samples":
        scaled = tuple(scale(fr) for fr in init.sample_velocities)
        return replace(init, sample_velocities=scaled)
    return replace(init, velocities=scale(init.velocities),
                   velocity_rates=scale(init.velocity_rates),
                   velocity_amplitudes=scale(init.velocity_amplitudes))


def _sweep_point(config: ScenarioConfig, param: str, value: float,
                 simulate: bool, variant: str):
    if param == "tau":
        cfg = replace(config, tau=value)
    elif param == "beta":
        cfg = replace(config, influence=InfluenceSpec.inverse_power(value))
    else:  # dv0_scale
        cfg = replace(config, initial=_scale_initial_velocities(config.initial, value))
    d_x0, d_v0 = initial_diameters(build_history(cfg))
    result = find_certificate(d_x0, d_v0, cfg.tau, cfg.influence, variant)
    classification = ""
    if simulate:
        traj = integrate(cfg)
        if isinstance(result, Certificate):
            dx_cap, dv_floor = default_flocking_thresholds(result, traj)
        else:
            dx_cap = d_x0 + (1.0 + 2.0 * cfg.tau) * (cfg.tau + 100.0) * d_v0 + 1.0
            dv_floor = 1e-6 * d_v0
        classification = classify_flocking(traj, dx_cap, dv_floor).value
    return result, classification


def cmd_sweep(config_path, param, lo, hi, points, out_csv, simulate=False,
              threads=1, variant=None, seed_override=None) -> int:
    t0 = time.perf_counter()
    try:
        config = _load_config(config_path, seed_override)
        variant = _resolve_variant(config, variant)
        if param not in ("tau", "beta", "dv0_scale"):
            raise ConfigError(f"unknown sweep parameter {param!r}")
        if param == "beta" and config.influence.kind != "inverse_power":
            raise ConfigError("beta sweep needs an inverse_power influence")
        if points < 1 or not lo <= hi:
            raise ConfigError("bad sweep range")
        values = np.linspace(lo, hi, points) if points > 1 else np.array([lo])
        if param == "tau" and (values[0] <= 0.0 or values[-1] >= config.horizon):
            raise ConfigError("tau sweep range must stay inside (0, horizon)")
    except (ConfigError, OSError, ValueError) as exc:
        return _fail(str(exc))

    def run(v):
        return _sweep_point(config, param, float(v), simulate, variant)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, values))
    else:
        results = [run(v) for v in values]

    lines = [f"{param},feasible,best_c,margin,classification"]
    for v, (result, classification) in zip(values, results):
        if isinstance(result, Certificate):
            row = [_fmt(v), "1", _fmt(result.C), _fmt(result.margin), classification]
        else:
            row = [_fmt(v), "0", _fmt(result.best_C), _fmt(result.best_margin), classification]
        lines.append(",".join(row))
    with open(out_csv, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_manifest(f"{out_csv}.manifest", config, f"sweep {param}",
                    {"csv": out_csv}, time.perf_counter() - t0)
    n_feasible = sum(isinstance(r, Certificate) for r, _ in results)
    print(f"swept {param} over [{lo}, {hi}]: {n_feasible}/{len(values)} feasible")
    return EXIT_OK


def predicted_oscillation_class(a_tau: float) -> OscillationClass:
    """Classification the two-agent linear theory predicts from the product
    of coupling rate and delay."""
    if a_tau < OSCILLATION_THRESHOLD:
        return OscillationClass.MONOTONE_DECAY
    if a_tau < GROWTH_THRESHOLD:
        return OscillationClass.OSCILLATORY_DECAY
    return OscillationClass.OSCILLATORY_GROWTH


def cmd_demo_oscillation(tau, coupling, horizon=None, out_csv=None,
                         steps_per_delay=64) -> int:
    try:
        if not tau > 0.0 or not coupling > 0.0:
            raise ConfigError("tau and coupling must be positive")
        horizon = horizon if horizon is not None else 40.0 * tau
        config = ScenarioConfig(
            n_agents=2, dim=1, tau=tau,
            influence=InfluenceSpec.constant(1.0),
            scheme=WeightScheme.constant_coupling(coupling),
            initial=InitialHistorySpec.constant([[0.0], [1.0]], [[0.5], [-0.5]]),
            steps_per_delay=steps_per_delay, horizon=horizon)
    except (ConfigError, ValueError) as exc:
        return _fail(str(exc))
    traj = integrate(config)
    if out_csv:
        export_csv(traj, out_csv)
    w = traj.velocities[:, 0, 0] - traj.velocities[:, 1, 0]
    a_tau = 2.0 * coupling * tau
    predicted = predicted_oscillation_class(a_tau)
    if traj.diverged and traj.times[-1] - traj.times[0] < 10.0 * tau:
        observed = OscillationClass.OSCILLATORY_GROWTH  # guard tripped early
    else:
        observed = classify_oscillation(traj.times, w, tau)
    print(f"velocity-gap equation: dw/dt = -{_fmt(2.0 * coupling)} w(t - {_fmt(tau)})")
    print(f"rate-delay product = {_fmt(a_tau)} "
          f"(oscillation threshold {_fmt(OSCILLATION_THRESHOLD)}, "
          f"growth threshold {_fmt(GROWTH_THRESHOLD)})")
    print(f"predicted: {predicted.value}")
    print(f"observed:  {observed.value}")
    if traj.diverged:
        print(f"divergence guard tripped at t = {_fmt(traj.divergence_time)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flockdde",
        description="Simulate delayed velocity-alignment dynamics, search "
                    "decay certificates, and verify decay bounds along "
                    "trajectories.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate a scenario and write a trajectory CSV")
    sim.add_argument("config")
    sim.add_argument("--out", required=True, help="trajectory CSV path")
    sim.add_argument("--manifest", default=None)
    sim.add_argument("--seed-override", type=int, default=None)

    cert = sub.add_parser("certify", help="search for a feasible decay rate")
    cert.add_argument("config")
    cert.add_argument("--report", default=None)
    cert.add_argument("--variant", default=None,
                      choices=["general", "constant-velocity"])
    cert.add_argument("--seed-override", type=int, default=None)

    ver = sub.add_parser("verify", help="certify, simulate, then run all monitors")
    ver.add_argument("config")
    ver.add_argument("--report", default=None)
    ver.add_argument("--variant", default=None,
                     choices=["general", "constant-velocity"])
    ver.add_argument("--envelope-rate-multiplier", type=float, default=1.0)
    ver.add_argument("--seed-override", type=int, default=None)

    sw = sub.add_parser("sweep", help="map certificate feasibility over a parameter range")
    sw.add_argument("config")
    sw.add_argument("--param", required=True, choices=["tau", "beta", "dv0_scale"])
    sw.add_argument("--lo", type=float, required=True)
    sw.add_argument("--hi", type=float, required=True)
    sw.add_argument("--points", type=int, required=True)
    sw.add_argument("--out", required=True, help="sweep CSV path")
    sw.add_argument("--simulate", action="store_true",
                    help="also simulate each point and classify the outcome")
    sw.add_argument("--threads", type=int, default=1)
    sw.add_argument("--variant", default=None,
                    choices=["general", "constant-velocity"])
    sw.add_argument("--seed-override", type=int, default=None)

    demo = sub.add_parser("demo-oscillation",
                          help="two-agent constant-coupling oscillation demo")
    demo.add_argument("--tau", type=float, required=True)
    demo.add_argument("--coupling", type=float, default=1.0)
    demo.add_argument("--horizon", type=float, default=None)
    demo.add_argument("--steps-per-delay", type=int, default=64)
    demo.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args.config, args.out, args.manifest, args.seed_override)
        if args.command == "certify":
            return cmd_certify(args.config, args.report, args.variant, args.seed_override)
        if args.command == "verify":
            return cmd_verify(args.config, args.report, args.envelope_rate_multiplier,
                              args.variant, args.seed_override)
        if args.command == "sweep":
            return cmd_sweep(args.config, args.param, args.lo, args.hi, args.points,
                             args.out, args.simulate, args.threads, args.variant,
                             args.seed_override)
        return cmd_demo_oscillation(args.tau, args.coupling, args.horizon,
                                    args.out, args.steps_per_delay)
    except (ScopeError, CoverageError) as exc:
        return _fail(str(exc))
    except FlockingError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
