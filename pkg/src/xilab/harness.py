"""Experiment orchestration: power curves, null diagnostics, bias/variance and
projection checks, with deterministic seeding and CSV emission.

Seeding contract: replication j at flat grid point k (row-major over
n_grid x param_grid) draws from numpy PCG64 seeded with
SeedSequence((master_seed, k, j)).  Theory-side Monte Carlo (xi fallbacks,
the mixture base xi(g)) uses SeedSequence((master_seed, 2**32, ...)).
Results are therefore identical for serial and parallel runs; the
XI_LAB_THREADS environment variable caps the worker count and affects speed
only.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Optional

import numpy as np

from .core import xi_n
from .diagnostics import StatSample, normal_quantile, wasserstein1_to_std_normal
from .errors import ConfigError, NumericError, XiLabError
from .models import make_model
from .oracle import CdfFn, xi_star
from .theory import asymptotic_power, xi_mixture_exact, xi_population_mc

SCHEMA_VERSION = "1"
THREADS_ENV_VAR = "XI_LAB_THREADS"
_THEORY_STREAM = 2 ** 32   # seed-tuple tag separating theory MC from replications
_REP_CHUNK = 200

PARAM_KEYS = {"gaussian": "rho", "mixture": "r", "regression": "sigma", "rotation": "delta"}


class ExperimentKind(Enum):
    POWER = "power"
    NULLDIST = "nulldist"
    BIASVAR = "biasvar"
    PROJECT = "project"


@dataclass(frozen=True)
class ModelSpec:
    """JSON model sub-schema: {"family": ..., "params": {...}}."""

    family: str
    params: dict = field(default_factory=dict)

    def build(self, param: Optional[float] = None):
        merged = dict(self.params)
        if param is not None:
            merged[PARAM_KEYS[self.family]] = param
        return make_model(self.family, merged)

    def __post_init__(self):
        if self.family not in PARAM_KEYS:
            raise ConfigError(f"unknown model family {self.family!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: ExperimentKind
    model: ModelSpec
    n_grid: list
    param_grid: list
    replications: int
    alpha: float
    master_seed: int
    output_path: Optional[str] = None

    def __post_init__(self):
        if not self.n_grid or not self.param_grid:
            raise ConfigError("n_grid and param_grid must be nonempty")
        if any(int(n) < 2 for n in self.n_grid):
            raise ConfigError("every n in n_grid must be >= 2")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        min_reps = 100 if self.kind in (ExperimentKind.POWER, ExperimentKind.NULLDIST) else 2
        if self.replications < min_reps:
            raise ConfigError(
                f"{self.kind.value} requires replications >= {min_reps}, got {self.replications}"
            )

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        required = {"kind", "model", "n_grid", "param_grid",
                    "replications", "alpha", "master_seed"}
        unknown = set(data) - required - {"output_path"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = required - set(data)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        try:
            kind = ExperimentKind(str(data["kind"]).lower())
        except ValueError as exc:
            raise ConfigError(f"unknown experiment kind {data['kind']!r}") from exc
        model = data["model"]
        if not isinstance(model, dict) or "family" not in model:
            raise ConfigError("model must be an object with a 'family' key")
        spec = ModelSpec(model["family"], dict(model.get("params", {})))
        return cls(
            kind=kind,
            model=spec,
            n_grid=[int(n) for n in data["n_grid"]],
            param_grid=[float(p) for p in data["param_grid"]],
            replications=int(data["replications"]),
            alpha=float(data["alpha"]),
            master_seed=int(data["master_seed"]),
            output_path=data.get("output_path"),
        )

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


@dataclass(frozen=True)
class PowerCurveRow:
    n: int
    param: float
    xi_theory: float
    xi_method: str
    empirical_power: float
    mc_se: float
    asymptotic_power: float
    warnings: str = ""


@dataclass(frozen=True)
class NullDistReport:
    n: int
    param: float
    replications: int
    mean_scaled: float
    var_scaled: float
    w1_to_normal: float
    bias_check: float
    warnings: str = ""


@dataclass(frozen=True)
class BiasVarianceRow:
    n: int
    param: float
    replications: int
    xi_theory: float
    xi_method: str
    bias_check: float
    var_scaled: float
    warnings: str = ""


@dataclass(frozen=True)
class ProjectionRow:
    n: int
    param: float
    replications: int
    n_var_diff: float
    warnings: str = ""


# ---------------------------------------------------------------------------
# replication engine
# ---------------------------------------------------------------------------

def _worker_count() -> int:
    limit = os.cpu_count() or 1
    env = os.environ.get(THREADS_ENV_VAR)
    if env is not None:
        try:
            cap = int(env)
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV_VAR} must be an integer, got {env!r}") from exc
        if cap < 1:
            raise ConfigError(f"{THREADS_ENV_VAR} must be >= 1, got {cap}")
        limit = min(limit, cap)
    return min(limit, 8)


def _rep_chunk(family: str, params: dict, n: int, master_seed: int,
               grid_index: int, j0: int, j1: int, with_star: bool):
    """Compute xi_n (and optionally xi_star) for replications j0..j1-1."""
    model = make_model(family, params)
    cdf = None
    if with_star:
        cdf = CdfFn(model.marg_y_cdf_many, name=f"{family} marginal")
    xis = np.empty(j1 - j0)
    stars = np.empty(j1 - j0) if with_star else None
    for j in range(j0, j1):
        try:
            sample = model.sample(n, np.random.SeedSequence((master_seed, grid_index, j)))
            xis[j - j0] = xi_n(sample)
            if with_star:
                stars[j - j0] = xi_star(sample, cdf)
        except XiLabError as exc:
            raise NumericError(
                f"replication {j} failed at grid point {grid_index} (n={n}): {exc}"
            ) from exc
    return j0, xis, stars


def _replicate(config: ExperimentConfig, grid_index: int, n: int, param: float,
               with_star: bool = False):
    """All replications for one grid point, deterministically merged."""
    params = dict(config.model.params)
    params[PARAM_KEYS[config.model.family]] = param
    reps = config.replications
    tasks = [(config.model.family, params, n, config.master_seed, grid_index,
              j0, min(j0 + _REP_CHUNK, reps), with_star)
             for j0 in range(0, reps, _REP_CHUNK)]
    xis = np.empty(reps)
    stars = np.empty(reps) if with_star else None
    workers = _worker_count()
    if workers == 1 or len(tasks) == 1:
        results = (_rep_chunk(*t) for t in tasks)
        for j0, chunk_xi, chunk_star in results:
            xis[j0:j0 + chunk_xi.size] = chunk_xi
            if with_star:
                stars[j0:j0 + chunk_star.size] = chunk_star
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for j0, chunk_xi, chunk_star in pool.map(_rep_chunk, *zip(*tasks)):
                xis[j0:j0 + chunk_xi.size] = chunk_xi
                if with_star:
                    stars[j0:j0 + chunk_star.size] = chunk_star
    return (xis, stars) if with_star else xis


def _grid(config: ExperimentConfig):
    return enumerate(product(config.n_grid, config.param_grid))


def _resolve_xi_theory(config: ExperimentConfig, model, grid_index: int,
                       mixture_xi_g: Optional[float]) -> tuple[float, str]:
    """Per-row xi(f): family closed form / asymptotic when valid, MC fallback."""
    if config.model.family == "mixture":
        est = xi_mixture_exact(model.r, mixture_xi_g)
        return est.value, est.method.value
    est = model.theoretical_xi()
    if est is None:
        seed = np.random.SeedSequence((config.master_seed, _THEORY_STREAM, grid_index))
        est = xi_population_mc(model, seed=seed)
    return est.value, est.method.value


def _mixture_base_xi(config: ExperimentConfig) -> Optional[float]:
    """Measured xi(g) of the mixture's dependent component, one MC run per experiment."""
    if config.model.family != "mixture":
        return None
    base = config.model.build(1.0).dependent_component()
    seed = np.random.SeedSequence((config.master_seed, _THEORY_STREAM))
    est = xi_population_mc(base, seed=seed)
    return min(max(est.value, 0.0), 1.0)


def run_power_experiment(config: ExperimentConfig) -> list[PowerCurveRow]:
    """Rejection rate of the level-alpha test against theory, per (n, param)."""
    if config.kind is not ExperimentKind.POWER:
        raise ConfigError(f"expected kind=power, got {config.kind.value}")
    z_alpha = normal_quantile(1.0 - config.alpha)
    xi_g = _mixture_base_xi(config)
    rows = []
    for k, (n, param) in _grid(config):
        model = config.model.build(param)
        xis = _replicate(config, k, n, param)
        z = np.sqrt(n) * xis / np.sqrt(0.4)
        p_hat = float(np.mean(z >= z_alpha))
        mc_se = math.sqrt(p_hat * (1.0 - p_hat) / config.replications)
        xi_th, method = _resolve_xi_theory(config, model, k, xi_g)
        rows.append(PowerCurveRow(
            n=n, param=param, xi_theory=xi_th, xi_method=method,
            empirical_power=p_hat, mc_se=mc_se,
            asymptotic_power=asymptotic_power(n, max(xi_th, 0.0), config.alpha),
        ))
    return rows


def run_null_experiment(config: ExperimentConfig) -> list[NullDistReport]:
    """Null-distribution diagnostics; requires an independence-point model."""
    if config.kind is not ExperimentKind.NULLDIST:
        raise ConfigError(f"expected kind=nulldist, got {config.kind.value}")
    for param in config.param_grid:
        if not config.model.build(param).is_effectively_null():
            raise ConfigError(
                f"nulldist requires an independent model; "
                f"{config.model.family} at param {param} is dependent"
            )
    rows = []
    for k, (n, param) in _grid(config):
        xis = _replicate(config, k, n, param)
        scaled = math.sqrt(n) * xis
        w1 = wasserstein1_to_std_normal(
            StatSample(scaled / math.sqrt(0.4), n_underlying=n))
        rows.append(NullDistReport(
            n=n, param=param, replications=config.replications,
            mean_scaled=float(scaled.mean()),
            var_scaled=float(scaled.var(ddof=1)),
            w1_to_normal=w1,
            bias_check=math.sqrt(n) * abs(float(xis.mean())),
        ))
    return rows


def run_bias_variance_experiment(config: ExperimentConfig) -> list[BiasVarianceRow]:
    """sqrt(n) |E xi_n - xi(f)| and n Var(xi_n) per grid point (model may be dependent)."""
    if config.kind is not ExperimentKind.BIASVAR:
        raise ConfigError(f"expected kind=biasvar, got {config.kind.value}")
    xi_g = _mixture_base_xi(config)
    rows = []
    for k, (n, param) in _grid(config):
        model = config.model.build(param)
        xis = _replicate(config, k, n, param)
        xi_th, method = _resolve_xi_theory(config, model, k, xi_g)
        rows.append(BiasVarianceRow(
            n=n, param=param, replications=config.replications,
            xi_theory=xi_th, xi_method=method,
            bias_check=math.sqrt(n) * abs(float(xis.mean()) - xi_th),
            var_scaled=float(n * xis.var(ddof=1)),
        ))
    return rows


def run_projection_experiment(config: ExperimentConfig) -> list[ProjectionRow]:
    """n Var(xi_n - xi_n_star) on identical samples, per grid point."""
    if config.kind is not ExperimentKind.PROJECT:
        raise ConfigError(f"expected kind=project, got {config.kind.value}")
    rows = []
    for k, (n, param) in _grid(config):
        xis, stars = _replicate(config, k, n, param, with_star=True)
        diff = xis - stars
        rows.append(ProjectionRow(
            n=n, param=param, replications=config.replications,
            n_var_diff=float(n * diff.var(ddof=1)),
        ))
    return rows


_RUNNERS = {
    ExperimentKind.POWER: run_power_experiment,
    ExperimentKind.NULLDIST: run_null_experiment,
    ExperimentKind.BIASVAR: run_bias_variance_experiment,
    ExperimentKind.PROJECT: run_projection_experiment,
}

_CSV_COLUMNS = {
    ExperimentKind.POWER: ["schema_version", "n", "param", "xi_theory", "xi_method",
                           "empirical_power", "mc_se", "asymptotic_power", "warnings"],
    ExperimentKind.NULLDIST: ["schema_version", "n", "param", "replications",
                              "mean_scaled", "var_scaled", "w1_to_normal",
                              "bias_check", "warnings"],
    ExperimentKind.BIASVAR: ["schema_version", "n", "param", "replications",
                             "xi_theory", "xi_method", "bias_check", "var_scaled",
                             "warnings"],
    ExperimentKind.PROJECT: ["schema_version", "n", "param", "replications",
                             "n_var_diff", "warnings"],
}


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows_csv(path: str, kind: ExperimentKind, rows) -> None:
    """Emit rows with a stable, versioned schema; float cells use repr (round-trip exact)."""
    columns = _CSV_COLUMNS[kind]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            record = {"schema_version": SCHEMA_VERSION, **row.__dict__}
            writer.writerow([_format_cell(record[c]) for c in columns])


def run_experiment(config: ExperimentConfig):
    """Dispatch on config.kind; write CSV when output_path is set; return the rows."""
    rows = _RUNNERS[config.kind](config)
    if config.output_path:
        write_rows_csv(config.output_path, config.kind, rows)
    return rows
