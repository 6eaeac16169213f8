"""Experiment configuration: a flat INI schema with typed sections.

The format is plain configparser INI with ``#`` comments, chosen because it
diffs cleanly and needs no third-party parser.  ``parse_config`` applies the
schema (types, enums, defaults) and returns a frozen ``ExperimentConfig``;
``write_snapshot`` emits the fully resolved configuration, which parses back
to an equal config, so every run directory records exactly what ran.

Sections and keys:

  [experiment] kind, seed, output_dir
  [model]      truncation, tilt, bottom_gamma, dt, horizon, burn_in,
               sample_every, solver_tolerance, solver_method
  [initial]    kind plus the kind's parameters (rate, a, gaps, scale_*, ...)
  [analysis]   k, epsilon, zero_threshold, t_grid, ensemble_size, group_size,
               thinning, gamma_levels, bounds_points, monitored_k,
               doubling_threshold, target_tilt

Unknown sections or keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from pathlib import Path

from .models import InitialCondition

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "EXPERIMENT_KINDS",
    "parse_config",
    "write_snapshot",
    "build_initial_condition",
]

EXPERIMENT_KINDS = ("stationarity", "coupling", "excursions", "doa", "bounds", "alt-model")
SOLVER_METHODS = ("auto", "fixedpoint", "minorant")
INITIAL_KINDS = (
    "stationary",
    "finite_atlas",
    "finite_alt",
    "dominating",
    "scaled_iid",
    "perturbed",
    "adversarial",
    "explicit",
)


class ConfigError(ValueError):
    """Raised for unparseable or invalid configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class ExperimentConfig:
    # [experiment]
    kind: str
    seed: int
    output_dir: str
    # [model]
    truncation: int
    tilt: float
    bottom_gamma: float
    dt: float
    horizon: float
    burn_in: float
    sample_every: int
    solver_tolerance: float
    solver_method: str
    # [initial]
    initial_kind: str
    initial_a: float
    initial_rate: float
    initial_gaps: tuple
    initial_scale_family: str
    initial_scale_coeff: float
    initial_scale_exponent: float
    initial_scale_value: float
    initial_theta: str
    initial_theta_rate: float
    initial_theta_high: float
    initial_beta_slack: float
    # [analysis]
    k: int
    epsilon: float
    zero_threshold: float
    t_grid: tuple
    ensemble_size: int
    group_size: int
    thinning: float
    gamma_levels: tuple
    bounds_points: str
    monitored_k: int
    doubling_threshold: float
    target_tilt: float


def _parse_float_list(raw: str) -> tuple:
    raw = raw.strip()
    if not raw:
        return ()
    try:
        return tuple(float(tok) for tok in raw.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"cannot parse float list {raw!r}") from exc


# (section, key) -> (type tag, default or None for required)
_SCHEMA = {
    ("experiment", "kind"): ("enum", EXPERIMENT_KINDS, None),
    ("experiment", "seed"): ("int", None, None),
    ("experiment", "output_dir"): ("str", None, ""),
    ("model", "truncation"): ("int", None, None),
    ("model", "tilt"): ("float", None, 0.0),
    ("model", "bottom_gamma"): ("float", None, 1.0),
    ("model", "dt"): ("float", None, None),
    ("model", "horizon"): ("float", None, None),
    ("model", "burn_in"): ("float", None, 0.0),
    ("model", "sample_every"): ("int", None, 1),
    ("model", "solver_tolerance"): ("float", None, 1e-12),
    ("model", "solver_method"): ("enum", SOLVER_METHODS, "auto"),
    ("initial", "kind"): ("enum", INITIAL_KINDS, "stationary"),
    ("initial", "a"): ("float", None, 0.0),
    ("initial", "rate"): ("float", None, 1.0),
    ("initial", "gaps"): ("floats", None, ()),
    ("initial", "scale_family"): ("str", None, "constant"),
    ("initial", "scale_coeff"): ("float", None, 1.0),
    ("initial", "scale_exponent"): ("float", None, 0.0),
    ("initial", "scale_value"): ("float", None, 1.0),
    ("initial", "theta"): ("str", None, "exponential"),
    ("initial", "theta_rate"): ("float", None, 1.0),
    ("initial", "theta_high"): ("float", None, 1.0),
    ("initial", "beta_slack"): ("float", None, 0.9),
    ("analysis", "k"): ("int", None, 1),
    ("analysis", "epsilon"): ("float", None, 0.1),
    ("analysis", "zero_threshold"): ("float", None, 1e-11),
    ("analysis", "t_grid"): ("floats", None, ()),
    ("analysis", "ensemble_size"): ("int", None, 1),
    ("analysis", "group_size"): ("int", None, 32),
    ("analysis", "thinning"): ("float", None, 0.1),
    ("analysis", "gamma_levels"): ("floats", None, ()),
    ("analysis", "bounds_points"): ("str", None, ""),
    ("analysis", "monitored_k"): ("int", None, 0),
    ("analysis", "doubling_threshold"): ("float", None, 1e-3),
    ("analysis", "target_tilt"): ("float", None, -1.0),
}

_FIELD_FOR_KEY = {
    ("experiment", "kind"): "kind",
    ("experiment", "seed"): "seed",
    ("experiment", "output_dir"): "output_dir",
    ("model", "truncation"): "truncation",
    ("model", "tilt"): "tilt",
    ("model", "bottom_gamma"): "bottom_gamma",
    ("model", "dt"): "dt",
    ("model", "horizon"): "horizon",
    ("model", "burn_in"): "burn_in",
    ("model", "sample_every"): "sample_every",
    ("model", "solver_tolerance"): "solver_tolerance",
    ("model", "solver_method"): "solver_method",
    ("initial", "kind"): "initial_kind",
    ("initial", "a"): "initial_a",
    ("initial", "rate"): "initial_rate",
    ("initial", "gaps"): "initial_gaps",
    ("initial", "scale_family"): "initial_scale_family",
    ("initial", "scale_coeff"): "initial_scale_coeff",
    ("initial", "scale_exponent"): "initial_scale_exponent",
    ("initial", "scale_value"): "initial_scale_value",
    ("initial", "theta"): "initial_theta",
    ("initial", "theta_rate"): "initial_theta_rate",
    ("initial", "theta_high"): "initial_theta_high",
    ("initial", "beta_slack"): "initial_beta_slack",
    ("analysis", "k"): "k",
    ("analysis", "epsilon"): "epsilon",
    ("analysis", "zero_threshold"): "zero_threshold",
    ("analysis", "t_grid"): "t_grid",
    ("analysis", "ensemble_size"): "ensemble_size",
    ("analysis", "group_size"): "group_size",
    ("analysis", "thinning"): "thinning",
    ("analysis", "bounds_points"): "bounds_points",
    ("analysis", "gamma_levels"): "gamma_levels",
    ("analysis", "monitored_k"): "monitored_k",
    ("analysis", "doubling_threshold"): "doubling_threshold",
    ("analysis", "target_tilt"): "target_tilt",
}


def _convert(section: str, key: str, raw: str):
    tag, enum, _default = _SCHEMA[(section, key)]
    raw = raw.strip()
    try:
        if tag == "int":
            return int(raw)
        if tag == "float":
            return float(raw)
        if tag == "floats":
            return _parse_float_list(raw)
        if tag == "enum":
            if raw not in enum:
                raise ConfigError(f"[{section}] {key} must be one of {enum}, got {raw!r}")
            return raw
        return raw
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {tag}") from exc


def parse_config(path) -> ExperimentConfig:
    """Parse and validate an experiment config file."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    values = {}
    known_sections = {s for s, _ in _SCHEMA}
    for section in parser.sections():
        if section not in known_sections:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser[section]:
            if (section, key) not in _SCHEMA:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            values[(section, key)] = _convert(section, key, parser[section][key])

    kwargs = {}
    for (section, key), (tag, enum, default) in _SCHEMA.items():
        if (section, key) in values:
            kwargs[_FIELD_FOR_KEY[(section, key)]] = values[(section, key)]
        elif default is None:
            raise ConfigError(f"missing required key {key!r} in section [{section}]")
        else:
            kwargs[_FIELD_FOR_KEY[(section, key)]] = default

    cfg = ExperimentConfig(**kwargs)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.seed < 0:
        raise ConfigError("seed must be >= 0")
    if cfg.truncation < 1:
        raise ConfigError("truncation (number of gaps) must be >= 1")
    if cfg.tilt < 0:
        raise ConfigError("tilt must be >= 0")
    if cfg.dt <= 0:
        raise ConfigError("dt must be > 0")
    if cfg.horizon <= 0:
        raise ConfigError("horizon must be > 0")
    if cfg.burn_in < 0:
        raise ConfigError("burn_in must be >= 0")
    if cfg.sample_every < 1:
        raise ConfigError("sample_every must be >= 1")
    if cfg.solver_tolerance <= 0:
        raise ConfigError("solver_tolerance must be > 0")
    if cfg.k < 1:
        raise ConfigError("analysis k must be >= 1")
    if cfg.k > cfg.truncation:
        raise ConfigError("analysis k cannot exceed the truncation")
    if cfg.ensemble_size < 1:
        raise ConfigError("ensemble_size must be >= 1")
    if cfg.group_size < 1:
        raise ConfigError("group_size must be >= 1")
    if cfg.epsilon <= 0:
        raise ConfigError("epsilon must be > 0")
    if cfg.zero_threshold <= 0:
        raise ConfigError("zero_threshold must be > 0")
    if cfg.epsilon <= cfg.zero_threshold:
        raise ConfigError("epsilon must exceed zero_threshold")
    if cfg.thinning <= 0:
        raise ConfigError("thinning must be > 0")
    if any(t <= 0 for t in cfg.t_grid):
        raise ConfigError("t_grid entries must be > 0")
    if list(cfg.t_grid) != sorted(set(cfg.t_grid)):
        raise ConfigError("t_grid must be strictly increasing")
    if cfg.t_grid and cfg.t_grid[-1] > cfg.horizon + 1e-9:
        raise ConfigError("t_grid extends beyond the horizon")
    if cfg.kind == "alt-model" and cfg.tilt <= 0:
        raise ConfigError("alt-model requires tilt > 0")
    if cfg.kind == "bounds" and not cfg.bounds_points.strip():
        raise ConfigError("bounds experiment requires analysis.bounds_points")
    if cfg.initial_kind == "explicit" and len(cfg.initial_gaps) != cfg.truncation:
        raise ConfigError("explicit initial gaps must match the truncation length")
    # construct once so bad parameter combinations fail at validation time
    build_initial_condition(cfg)


def build_initial_condition(cfg: ExperimentConfig) -> InitialCondition:
    """Materialize the [initial] section as an InitialCondition."""
    kind = cfg.initial_kind
    if kind == "stationary":
        return InitialCondition.stationary(cfg.initial_a)
    if kind == "finite_atlas":
        return InitialCondition.finite_atlas()
    if kind == "finite_alt":
        return InitialCondition.finite_alt(cfg.initial_a)
    if kind == "dominating":
        return InitialCondition.dominating(cfg.initial_rate)
    if kind == "scaled_iid":
        return InitialCondition.scaled_iid(
            cfg.initial_scale_family,
            theta=cfg.initial_theta,
            scale_params=_scale_params(cfg),
            theta_params=_theta_params(cfg),
        )
    if kind == "perturbed":
        return InitialCondition.perturbed(
            cfg.initial_a,
            cfg.initial_scale_family,
            scale_params=_scale_params(cfg),
            beta_slack=cfg.initial_beta_slack,
        )
    if kind == "adversarial":
        return InitialCondition.adversarial()
    if kind == "explicit":
        return InitialCondition.explicit(cfg.initial_gaps)
    raise ConfigError(f"unknown initial kind {kind!r}")


def _scale_params(cfg: ExperimentConfig) -> dict:
    family = cfg.initial_scale_family
    if family == "constant":
        return {"value": cfg.initial_scale_value}
    if family == "power":
        return {"coeff": cfg.initial_scale_coeff, "exponent": cfg.initial_scale_exponent}
    if family == "linear_over_loglog":
        return {"coeff": cfg.initial_scale_coeff}
    return {}


def _theta_params(cfg: ExperimentConfig) -> dict:
    if cfg.initial_theta == "exponential":
        return {"rate": cfg.initial_theta_rate}
    if cfg.initial_theta == "uniform":
        return {"high": cfg.initial_theta_high}
    return {}


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(format(v, ".17g") for v in value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_snapshot(cfg: ExperimentConfig, path) -> None:
    """Write the fully resolved config; parsing it back yields ``cfg``."""
    lines = ["# resolved atlas-lab experiment configuration"]
    current = None
    for (section, key), _spec in _SCHEMA.items():
        if section != current:
            lines.append(f"\n[{section}]")
            current = section
        value = getattr(cfg, _FIELD_FOR_KEY[(section, key)])
        lines.append(f"{key} = {_format_value(value)}")
    Path(path).write_text("\n".join(lines) + "\n")


def config_as_dict(cfg: ExperimentConfig) -> dict:
    """Flat field dict, mainly for summaries."""
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}
