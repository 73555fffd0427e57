"""Experiment configuration: one YAML document, validated on load.

CLI flags override config keys; validation errors name the offending field.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import yaml

from .distributions import FrechetParams
from .errors import ConfigError
from .optimize import ALGORITHMS
from .pool import TailModel

DEFAULT_XI_LEVELS = (0.1, 0.3, 0.5, 0.7)
DEFAULT_WINDOW = ((1978, 1), (2023, 12))


@dataclass(frozen=True)
class ModelSpec:
    """Pool model: concrete Frechet laws, or bare tail parameters.

    Simulation commands need ``frechet``; the asymptotic command runs with
    either form.
    """

    frechet: Optional[Tuple[FrechetParams, ...]] = None
    alphas: Optional[Tuple[float, ...]] = None
    thetas: Optional[Tuple[float, ...]] = None

    @property
    def alpha1(self) -> float:
        if self.frechet is not None:
            return min(p.alpha for p in self.frechet)
        return min(self.alphas)

    @property
    def n(self) -> int:
        return len(self.frechet) if self.frechet is not None else len(self.alphas)

    def tail_model(self, xi: float) -> TailModel:
        if self.frechet is not None:
            return TailModel.from_frechet(self.frechet, xi)
        return TailModel.normalized(self.alphas, self.thetas, xi)

    def require_frechet(self) -> Tuple[FrechetParams, ...]:
        if self.frechet is None:
            raise ConfigError(
                "model.frechet: simulation commands need concrete Frechet "
                "parameters")
        return self.frechet


@dataclass(frozen=True)
class EmpiricalOptions:
    """Settings of the observed-data pipeline."""

    states: Tuple[str, ...] = ()
    k: Optional[int] = None          # defaults to 10% of the sample size
    h: Optional[int] = None
    k_sweep_max: Optional[int] = None
    rv_significance: float = 0.01


@dataclass(frozen=True)
class IngestOptions:
    """Settings of the claim-export aggregation."""

    states: Tuple[str, ...] = ("NY", "CA", "FL")
    window: Tuple[Tuple[int, int], Tuple[int, int]] = DEFAULT_WINDOW
    schema: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment settings shared by the CLI commands."""

    model: Optional[ModelSpec] = None
    xi_levels: Optional[Tuple[float, ...]] = None
    xi_grid: Optional[Tuple[float, ...]] = None
    p_grid: Tuple[float, ...] = ()
    lambda_policy: str = "box_lower"
    lambdas: Optional[Tuple[float, ...]] = None
    m: int = 1_000_000
    seeds: Tuple[int, ...] = (1,)
    output_dir: Path = Path("out")
    algorithms: Tuple[str, ...] = ("gsa",)
    threads: int = 1
    search_cap: float = 1e4
    stall_limit: int = 500
    max_iterations: int = 10_000
    plots: bool = True
    empirical: EmpiricalOptions = field(default_factory=EmpiricalOptions)
    ingest: IngestOptions = field(default_factory=IngestOptions)

    def resolve_xi(self, alpha1: float) -> Tuple[float, ...]:
        """Attachment multipliers: explicit values, or levels**(1/alpha1)."""
        if self.xi_grid:
            return self.xi_grid
        levels = self.xi_levels or DEFAULT_XI_LEVELS
        return tuple(level ** (1.0 / alpha1) for level in levels)


def _parse_month(text) -> Tuple[int, int]:
    if isinstance(text, (list, tuple)) and len(text) == 2:
        return int(text[0]), int(text[1])
    year, _, month = str(text).partition("-")
    try:
        return int(year), int(month)
    except ValueError as exc:
        raise ConfigError(f"window: expected YYYY-MM, got {text!r}") from exc


def _parse_model(raw) -> ModelSpec:
    if not isinstance(raw, dict):
        raise ConfigError("model: expected a mapping")
    if "frechet" in raw:
        try:
            params = tuple(FrechetParams(float(e["alpha"]), float(e["scale"]))
                           for e in raw["frechet"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"model.frechet: {exc}") from exc
        if not params:
            raise ConfigError("model.frechet: needs at least one participant")
        return ModelSpec(frechet=params)
    if "alphas" in raw:
        alphas = tuple(float(a) for a in raw["alphas"])
        thetas = raw.get("thetas")
        if thetas is None:
            raise ConfigError("model.thetas: required alongside model.alphas")
        thetas = tuple(float(t) for t in thetas)
        if len(thetas) != len(alphas):
            raise ConfigError("model.thetas: length must match model.alphas")
        return ModelSpec(alphas=alphas, thetas=thetas)
    raise ConfigError("model: needs either 'frechet' or 'alphas'+'thetas'")


def _resolve_p_grid(raw) -> Tuple[float, ...]:
    if raw is None:
        return tuple(np.round(np.arange(0.800, 0.9751, 0.001), 6))
    if isinstance(raw, dict):
        try:
            start, stop = float(raw["start"]), float(raw["stop"])
            step = float(raw.get("step", 0.001))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"p_grid: {exc}") from exc
        return tuple(np.round(np.arange(start, stop + step / 2, step), 9))
    return tuple(float(p) for p in raw)


def load_config(path=None, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Build a validated config from an optional YAML file plus overrides.

    Override keys (from CLI flags) win over file keys; file keys win over
    defaults.
    """
    raw = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as handle:
                raw = yaml.safe_load(handle) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})

    model = _parse_model(raw["model"]) if "model" in raw else None

    config = ExperimentConfig(
        model=model,
        xi_levels=tuple(float(x) for x in raw["xi_levels"])
        if raw.get("xi_levels") is not None else None,
        xi_grid=tuple(float(x) for x in raw["xi_grid"])
        if raw.get("xi_grid") is not None else None,
        p_grid=_resolve_p_grid(raw.get("p_grid")),
        lambda_policy=raw.get("lambda_policy", "box_lower"),
        lambdas=tuple(float(v) for v in raw["lambdas"])
        if raw.get("lambdas") is not None else None,
        m=int(raw.get("m", 1_000_000)),
        seeds=tuple(int(s) for s in raw.get("seeds", (1,))),
        output_dir=Path(raw.get("output_dir", "out")),
        algorithms=tuple(str(a).lower() for a in raw.get("algorithms", ("gsa",))),
        threads=int(raw.get("threads", 1)),
        search_cap=float(raw.get("search_cap", 1e4)),
        stall_limit=int(raw.get("stall_limit", 500)),
        max_iterations=int(raw.get("max_iterations", 10_000)),
        plots=bool(raw.get("plots", True)),
        empirical=_parse_empirical(raw.get("empirical", {})),
        ingest=_parse_ingest(raw.get("ingest", {})),
    )
    validate_config(config)
    return config


def _parse_empirical(raw) -> EmpiricalOptions:
    if not isinstance(raw, dict):
        raise ConfigError("empirical: expected a mapping")
    return EmpiricalOptions(
        states=tuple(str(s).upper() for s in raw.get("states", ())),
        k=int(raw["k"]) if raw.get("k") is not None else None,
        h=int(raw["h"]) if raw.get("h") is not None else None,
        k_sweep_max=int(raw["k_sweep_max"])
        if raw.get("k_sweep_max") is not None else None,
        rv_significance=float(raw.get("rv_significance", 0.01)),
    )


def _parse_ingest(raw) -> IngestOptions:
    if not isinstance(raw, dict):
        raise ConfigError("ingest: expected a mapping")
    window = raw.get("window")
    if window is None:
        parsed_window = DEFAULT_WINDOW
    elif isinstance(window, dict):
        parsed_window = (_parse_month(window.get("start")),
                         _parse_month(window.get("end")))
    else:
        start, _, end = str(window).partition(":")
        parsed_window = (_parse_month(start), _parse_month(end))
    return IngestOptions(
        states=tuple(str(s).upper()
                     for s in raw.get("states", ("NY", "CA", "FL"))),
        window=parsed_window,
        schema=dict(raw.get("schema", {})),
    )


def validate_config(config: ExperimentConfig) -> None:
    for p in config.p_grid:
        if not 0 < p < 1:
            raise ConfigError(f"p_grid: levels must lie in (0, 1), got {p}")
    for xi in config.xi_grid or ():
        if not xi > 0:
            raise ConfigError(f"xi_grid: values must be positive, got {xi}")
    for level in config.xi_levels or ():
        if not level > 0:
            raise ConfigError(
                f"xi_levels: values must be positive, got {level}")
    if config.m < 10:
        raise ConfigError(f"m: sample size must be >= 10, got {config.m}")
    if not config.seeds:
        raise ConfigError("seeds: need at least one seed")
    if config.lambda_policy not in ("box_lower", "explicit", "optimize"):
        raise ConfigError(
            f"lambda_policy: unknown policy {config.lambda_policy!r}")
    if config.lambda_policy == "explicit":
        if config.lambdas is None:
            raise ConfigError("lambdas: required when lambda_policy=explicit")
        if config.model is not None and len(config.lambdas) != config.model.n:
            raise ConfigError(
                f"lambdas: expected {config.model.n} entries, "
                f"got {len(config.lambdas)}")
        if any(v <= 1 for v in config.lambdas):
            raise ConfigError("lambdas: every multiplier must exceed 1")
    for algorithm in config.algorithms:
        if algorithm not in ALGORITHMS:
            raise ConfigError(
                f"algorithms: unknown algorithm {algorithm!r}; "
                f"choose from {ALGORITHMS}")
    if config.threads < 1:
        raise ConfigError(f"threads: must be >= 1, got {config.threads}")
    if not config.stall_limit < config.max_iterations:
        raise ConfigError(
            "stall_limit: must be smaller than max_iterations")
