"""Experiment configuration: defaults, YAML loading and validation."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from ..datagen import PSI_DEFAULTS, PSI_KINDS
from ..solver import DEFAULT_MAX_ITER, DEFAULT_MIN_RATIO, DEFAULT_N_LAMBDA, DEFAULT_TOL

SCENARIOS = ("illustrative", "simulate", "sequential", "bound")
DEFAULT_P_GRID = (5, 10, 20, 50, 200, 500, 1000, 2000, 5000, 10000)


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


def default_s_grid(points: int = 51) -> tuple[float, ...]:
    # rounded so that grid values such as 0.5 or 0.75 are exact
    return tuple(round(float(s), 12) for s in np.linspace(0.0, 1.0, points))


def fine_s_grid() -> tuple[float, ...]:
    return default_s_grid(101)


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "simulate"
    master_seed: int = 0
    reps: int = 100
    n: int = 100
    p_grid: tuple[int, ...] = DEFAULT_P_GRID
    include_interpolation_point: bool = False
    psi_kinds: tuple[str, ...] = PSI_KINDS
    psi_params: dict[str, dict[str, Any]] = field(default_factory=dict)
    m: int = 3
    beta: tuple[float, ...] = (1.0, 1.0, 1.0)
    loading_density: float = 0.2
    sigma2: float = 1.0
    s_grid: tuple[float, ...] = field(default_factory=default_s_grid)
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    n_lambda: int = DEFAULT_N_LAMBDA
    min_ratio: float = DEFAULT_MIN_RATIO
    output_dir: str = "results"
    threads: int = 1
    debug_paths: bool = False
    dump_psi: bool = False
    record_timings: bool = False
    # illustrative
    enet_lambda2: float = 1.0
    illustrative_s_grid: tuple[float, ...] = field(default_factory=fine_s_grid)
    test_points: int = 1
    # sequential removal
    steps: int = 5
    folds: int = 10
    splits: int = 100
    train_fraction: float = 2.0 / 3.0
    seq_p: int = 10000
    seq_psi_kind: str = "identity"
    seq_lambda2: float = 0.0
    data_path: str | None = None
    response_column: str | None = None
    standardize: bool = False
    # bound
    bound_C: float = 1.0
    bound_t: float = 2.0
    bound_c0: float | None = None
    bound_reps: int = 20

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if self.reps < 1:
            raise ConfigError("reps must be at least 1")
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if self.folds < 2:
            raise ConfigError("folds must be at least 2")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.steps < 1 or self.splits < 1:
            raise ConfigError("steps and splits must be at least 1")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if not self.p_grid or any(p < 1 for p in self.p_grid):
            raise ConfigError("p_grid must be a nonempty list of positive integers")
        if list(self.p_grid) != sorted(set(self.p_grid)):
            raise ConfigError("p_grid must be strictly increasing")
        if self.n in self.p_grid and not self.include_interpolation_point:
            raise ConfigError(
                f"p = n = {self.n} is excluded by default; set include_interpolation_point to run it")
        for kind in (*self.psi_kinds, self.seq_psi_kind):
            if kind not in PSI_KINDS:
                raise ConfigError(f"unknown psi kind {kind!r}")
        for kind, params in self.psi_params.items():
            if kind not in PSI_KINDS:
                raise ConfigError(f"psi_params given for unknown kind {kind!r}")
            unknown = set(params) - set(PSI_DEFAULTS[kind])
            if unknown:
                raise ConfigError(f"unknown parameters for {kind}: {sorted(unknown)}")
        if len(self.beta) != self.m:
            raise ConfigError(f"beta has length {len(self.beta)} but m = {self.m}")
        if not 0 < self.loading_density <= 1:
            raise ConfigError("loading_density must lie in (0, 1]")
        if not self.sigma2 > 0 or not self.tol > 0:
            raise ConfigError("sigma2 and tol must be positive")
        for grid in (self.s_grid, self.illustrative_s_grid):
            if not grid or any(not 0 <= s <= 1 for s in grid):
                raise ConfigError("s grid values must lie in [0, 1]")
        if self.enet_lambda2 < 0 or self.seq_lambda2 < 0:
            raise ConfigError("lambda2 values must be nonnegative")
        if self.test_points < 1:
            raise ConfigError("test_points must be at least 1")

    @property
    def cells_p(self) -> tuple[int, ...]:
        """The p grid, with p = n added when the interpolation point is requested."""
        if self.include_interpolation_point and self.n not in self.p_grid:
            return tuple(sorted((*self.p_grid, self.n)))
        return self.p_grid

    def psi_params_for(self, kind: str) -> dict[str, Any]:
        return dict(self.psi_params.get(kind, {}))

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


_TUPLE_FIELDS = {"p_grid": int, "psi_kinds": str, "beta": float, "s_grid": float,
                 "illustrative_s_grid": float}


def config_from_dict(data: dict[str, Any], **overrides) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping of field names to values")
    data = {**data, **{k: v for k, v in overrides.items() if v is not None}}
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    kwargs = {}
    try:
        for key, value in data.items():
            if key in _TUPLE_FIELDS:
                if isinstance(value, (str, bytes)) or not hasattr(value, "__iter__"):
                    raise ConfigError(f"{key} must be a list")
                value = tuple(_TUPLE_FIELDS[key](v) for v in value)
            elif key == "psi_params":
                value = {k: {pk: tuple(pv) if isinstance(pv, list) else pv for pk, pv in v.items()}
                         for k, v in (value or {}).items()}
            kwargs[key] = value
        return ExperimentConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None, **overrides) -> ExperimentConfig:
    """Read a YAML config; ``overrides`` that are not None win over the file."""
    data: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path) as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
    return config_from_dict(data, **overrides)
