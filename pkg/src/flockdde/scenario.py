"""Scenario files: a structured key/value text format (INI sections) that
round-trips :class:`ScenarioConfig` losslessly.

Sections: [agents], [influence], [scheme], [initial], [integrator] and the
optional [output]. A [manifest] section is ignored when present, so run
manifests re-parse as the scenario they record. All quantities are
dimensionless (the model's time scale is normalized so influences stay
below 1). Floats are written with shortest round-trip precision.

Matrix values use semicolons between agents and whitespace between
components ("0 0; 1 0"); per-frame sample arrays separate frames with "|".
Table influence samples are comma-separated "s:psi" pairs.
"""

from __future__ import annotations

import configparser
from typing import Optional

import numpy as np

from .core import InfluenceSpec, InitialHistorySpec, ScenarioConfig, WeightScheme


class ConfigError(ValueError):
    """Malformed scenario file; message carries the section/field."""


_SECTIONS = ("agents", "influence", "scheme", "initial", "integrator", "output")

_SECTION_KEYS = {
    "agents": {"count", "dim"},
    "influence": {"kind", "value", "beta", "samples"},
    "scheme": {"kind", "kappa"},
    "initial": {"kind", "positions", "velocities", "position_rates",
                "velocity_rates", "position_amplitudes", "velocity_amplitudes",
                "omega", "phases", "box_half", "vel_radius", "center",
                "perturbation", "perturbation_omega", "seed"},
    "integrator": {"tau", "steps_per_delay", "horizon", "guard_factor"},
    "output": {"record_stride"},
}


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_matrix(rows) -> str:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim == 1:
        return " ".join(_fmt(v) for v in arr)
    return "; ".join(" ".join(_fmt(v) for v in row) for row in arr)


def _fmt_frames(frames) -> str:
    return " | ".join(_fmt_matrix(f) for f in np.asarray(frames, dtype=float))


def _parse_vector(text: str, where: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split())
    except ValueError as exc:
        raise ConfigError(f"{where}: bad number in {text!r}") from exc


def _parse_matrix(text: str, where: str) -> tuple:
    return tuple(_parse_vector(row, where) for row in text.split(";") if row.strip())


def _parse_frames(text: str, where: str) -> tuple:
    return tuple(_parse_matrix(f, where) for f in text.split("|") if f.strip())


class _Section:
    def __init__(self, name: str, proxy):
        self.name = name
        self._proxy = proxy

    def get(self, key: str, default=None, required: bool = False) -> Optional[str]:
        if key in self._proxy:
            return self._proxy[key].strip()
        if required:
            raise ConfigError(f"[{self.name}] missing required field {key!r}")
        return default

    def number(self, key: str, default=None, required: bool = False) -> Optional[float]:
        raw = self.get(key, required=required)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"[{self.name}] {key}: not a number: {raw!r}") from exc

    def integer(self, key: str, default=None, required: bool = False) -> Optional[int]:
        raw = self.get(key, required=required)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"[{self.name}] {key}: not an integer: {raw!r}") from exc


def _parse_influence(sec: _Section) -> InfluenceSpec:
    kind = sec.get("kind", required=True)
    if kind == "constant":
        return InfluenceSpec.constant(sec.number("value", default=1.0))
    if kind == "inverse_power":
        return InfluenceSpec.inverse_power(sec.number("beta", required=True))
    if kind == "table":
        raw = sec.get("samples", required=True)
        samples = []
        for item in raw.split(","):
            item = item.strip()
            if not item:
                continue
            try:
                s, psi = item.split(":")
                samples.append((float(s), float(psi)))
            except ValueError as exc:
                raise ConfigError(f"[influence] samples: expected 's:psi', got {item!r}") from exc
        return InfluenceSpec.from_table(samples)
    raise ConfigError(f"[influence] unknown kind {kind!r}")


def _parse_scheme(sec: _Section) -> WeightScheme:
    kind = sec.get("kind", required=True)
    if kind == "classical":
        return WeightScheme.classical()
    if kind == "normalized":
        return WeightScheme.normalized()
    if kind == "constant_coupling":
        return WeightScheme.constant_coupling(sec.number("kappa", required=True))
    raise ConfigError(f"[scheme] unknown kind {kind!r}")


def _parse_initial(sec: _Section) -> tuple[InitialHistorySpec, Optional[int]]:
    kind = sec.get("kind", required=True)
    seed = sec.integer("seed", default=None)
    where = "[initial]"
    if kind == "constant":
        return InitialHistorySpec.constant(
            _parse_matrix(sec.get("positions", required=True), where),
            _parse_matrix(sec.get("velocities", required=True), where)), seed
    if kind == "linear":
        pos = _parse_matrix(sec.get("positions", required=True), where)
        vel = _parse_matrix(sec.get("velocities", required=True), where)
        pr = sec.get("position_rates")
        vr = sec.get("velocity_rates")
        return InitialHistorySpec.linear(
            pos, vel,
            _parse_matrix(pr, where) if pr else None,
            _parse_matrix(vr, where) if vr else None), seed
    if kind == "sinusoidal":
        pos = _parse_matrix(sec.get("positions", required=True), where)
        vel = _parse_matrix(sec.get("velocities", required=True), where)
        pa = sec.get("position_amplitudes")
        va = sec.get("velocity_amplitudes")
        ph = sec.get("phases")
        return InitialHistorySpec.sinusoidal(
            pos, vel,
            _parse_matrix(pa, where) if pa else None,
            _parse_matrix(va, where) if va else None,
            omega=sec.number("omega", default=1.0),
            phases=_parse_matrix(ph, where) if ph else None), seed
    if kind == "random":
        center = sec.get("center")
        return InitialHistorySpec.random(
            box_half=sec.number("box_half", required=True),
            vel_radius=sec.number("vel_radius", required=True),
            center=_parse_vector(center, where) if center else None,
            perturbation=sec.number("perturbation", default=0.0),
            perturbation_omega=sec.number("perturbation_omega", default=0.0)), seed
    if kind == "samples":
        return InitialHistorySpec.from_samples(
            _parse_frames(sec.get("positions", required=True), where),
            _parse_frames(sec.get("velocities", required=True), where)), seed
    raise ConfigError(f"[initial] unknown kind {kind!r}")


def parse_scenario_text(text: str) -> ScenarioConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed scenario file: {exc}") from exc

    for name in cp.sections():
        if name == "manifest":
            continue
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
        extra = set(cp[name]) - _SECTION_KEYS[name]
        if extra:
            raise ConfigError(f"[{name}] unknown field(s): {', '.join(sorted(extra))}")
    for name in ("agents", "influence", "scheme", "initial", "integrator"):
        if name not in cp:
            raise ConfigError(f"missing section [{name}]")

    agents = _Section("agents", cp["agents"])
    integ = _Section("integrator", cp["integrator"])
    out = _Section("output", cp["output"]) if "output" in cp else None

    influence = _parse_influence(_Section("influence", cp["influence"]))
    scheme = _parse_scheme(_Section("scheme", cp["scheme"]))
    initial, seed = _parse_initial(_Section("initial", cp["initial"]))

    try:
        return ScenarioConfig(
            n_agents=agents.integer("count", required=True),
            dim=agents.integer("dim", required=True),
            tau=integ.number("tau", required=True),
            influence=influence,
            scheme=scheme,
            initial=initial,
            steps_per_delay=integ.integer("steps_per_delay", required=True),
            horizon=integ.number("horizon", required=True),
            record_stride=out.integer("record_stride", default=1) if out else 1,
            rng_seed=seed,
            guard_factor=integ.number("guard_factor", default=1e12),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_scenario(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario_text(fh.read())


def scenario_text(config: ScenarioConfig) -> str:
    """Serialize a config; parse_scenario_text returns an equal config."""
    lines = ["[agents]", f"count = {config.n_agents}", f"dim = {config.dim}", ""]

    infl = config.influence
    lines.append("[influence]")
    lines.append(f"kind = {infl.kind}")
    if infl.kind == "constant":
        lines.append(f"value = {_fmt(infl.value)}")
    elif infl.kind == "inverse_power":
        lines.append(f"beta = {_fmt(infl.beta)}")
    else:
        pairs = ", ".join(f"{_fmt(s)}:{_fmt(p)}" for s, p in infl.table)
        lines.append(f"samples = {pairs}")
    lines.append("")

    lines.append("[scheme]")
    lines.append(f"kind = {config.scheme.kind}")
    if config.scheme.kind == "constant_coupling":
        lines.append(f"kappa = {_fmt(config.scheme.kappa)}")
    lines.append("")

    init = config.initial
    lines.append("[initial]")
    lines.append(f"kind = {init.kind}")
    if init.kind in ("constant", "linear", "sinusoidal"):
        lines.append(f"positions = {_fmt_matrix(init.positions)}")
        lines.append(f"velocities = {_fmt_matrix(init.velocities)}")
    if init.kind == "linear":
        lines.append(f"position_rates = {_fmt_matrix(init.position_rates)}")
        lines.append(f"velocity_rates = {_fmt_matrix(init.velocity_rates)}")
    if init.kind == "sinusoidal":
        lines.append(f"position_amplitudes = {_fmt_matrix(init.position_amplitudes)}")
        lines.append(f"velocity_amplitudes = {_fmt_matrix(init.velocity_amplitudes)}")
        lines.append(f"omega = {_fmt(init.omega)}")
        lines.append(f"phases = {_fmt_matrix(init.phases)}")
    if init.kind == "random":
        lines.append(f"box_half = {_fmt(init.box_half)}")
        lines.append(f"vel_radius = {_fmt(init.vel_radius)}")
        if len(init.center):
            lines.append(f"center = {_fmt_matrix(init.center)}")
        if init.perturbation > 0.0:
            lines.append(f"perturbation = {_fmt(init.perturbation)}")
            if init.perturbation_omega > 0.0:
                lines.append(f"perturbation_omega = {_fmt(init.perturbation_omega)}")
    if init.kind == "samples":
        lines.append(f"positions = {_fmt_frames(init.sample_positions)}")
        lines.append(f"velocities = {_fmt_frames(init.sample_velocities)}")
    if config.rng_seed is not None:
        lines.append(f"seed = {config.rng_seed}")
    lines.append("")

    lines.append("[integrator]")
    lines.append(f"tau = {_fmt(config.tau)}")
    lines.append(f"steps_per_delay = {config.steps_per_delay}")
    lines.append(f"horizon = {_fmt(config.horizon)}")
    if config.guard_factor != 1e12:
        lines.append(f"guard_factor = {_fmt(config.guard_factor)}")
    lines.append("")

    lines.append("[output]")
    lines.append(f"record_stride = {config.record_stride}")
    lines.append("")
    return "\n".join(lines)


def write_scenario(config: ScenarioConfig, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(scenario_text(config))
