"""Benchmark scenarios, run configuration and CSV output.

Every scenario returns a :class:`BenchTable`: a fixed column list and rows
sorted by their key columns, so identical configurations give identical CSV
bytes. Wall-clock columns are only emitted when ``timing`` is enabled.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Callable

import numpy as np

from . import rng
from .dynamic import (
    combined_step,
    default_recorders,
    euler_step,
    ideal_moment_changes,
    individual_residuals,
    individual_step,
    integrate,
)
from .errors import ConfigError
from .models import (
    CUBIC_WEIGHT,
    INITIAL_STD_STEADY,
    IRREGULAR_WEIGHT,
    OuParams,
    constant_drift,
    cubic_drift,
    irregular_drift,
    laser,
    laser_nss,
    laser_observables,
    ornstein_uhlenbeck,
    ou_exact_moments,
    steady_state_expectation,
)
from .observables import power_observables
from .planner import effective_order, optimal_split
from .static import OptimizerConfig, optimize_initial
from .stats import (
    SPECIAL_SCALINGS,
    cost_metric,
    cumulants_from_moments,
    normal_moments,
    normalized_special_error,
    normalized_static_error,
    raw_moments,
    special_targets,
)

SCHEMA_VERSION = 1
SCENARIOS = (
    "static",
    "onestep-combined",
    "onestep-individual",
    "sde-ou",
    "sde-cubic",
    "sde-irregular",
    "sde-laser",
    "plan",
)
SDE_SCENARIOS = ("sde-ou", "sde-cubic", "sde-irregular", "sde-laser")
N_REPORTED = 8


@dataclass(frozen=True)
class RunConfig:
    """Flat benchmark configuration.

    ``n_samples``, ``dt``, ``noise_levels`` and ``budget`` are tuples so that
    one run can sweep them. SDE scenarios take ``n_steps`` together with
    exactly one of ``dt`` (a single value) or ``horizon``.
    """

    scenario: str
    n_samples: tuple[int, ...] = (1000,)
    n_steps: int | None = None
    dt: tuple[float, ...] | None = None
    horizon: float | None = None
    attempts: int = 100
    runs: int = 8
    max_moment: int = 6
    laser_order: int = 4
    method: str | None = None
    seed: int = 0
    out: str | None = None
    sigma: float = 1.0
    drift: float = 0.5
    noise: float = 0.5
    init_mean: float = 1.0
    init_std: float = 0.1
    noise_levels: tuple[float, ...] = (0.01, 0.32, 10.24)
    order: float = 1.0
    trunc_const: float = 1.0
    sample_sigma: float = 1.0
    budget: tuple[int, ...] = (10**6,)
    special_scaling: str = "as_written"
    precondition: bool = True
    workers: int = 1
    timing: bool = False

    def __post_init__(self):
        validate(self)

    @property
    def step_size(self) -> float:
        """Uniform step of an SDE scenario."""
        if self.dt is not None:
            return self.dt[0]
        return self.horizon / self.n_steps

    @property
    def total_time(self) -> float:
        if self.horizon is not None:
            return self.horizon
        return self.dt[0] * self.n_steps

    @property
    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(divergence_policy="backtrack-resample", precondition=self.precondition)


_TUPLE_FIELDS = {"n_samples": int, "dt": float, "noise_levels": float, "budget": int}

# desk-scale defaults per scenario
PRESETS: dict[str, dict[str, Any]] = {
    "static": {"n_samples": (1000,), "attempts": 100},
    "onestep-combined": {"n_samples": (1000,), "dt": (1e-4,), "attempts": 100},
    "onestep-individual": {"n_samples": (1000,), "dt": (0.1,), "attempts": 100},
    "sde-ou": {"n_samples": (1000, 10000), "n_steps": 1000, "horizon": 1.0, "runs": 8, "method": "individual"},
    "sde-cubic": {"n_samples": (4096,), "n_steps": 12500, "horizon": 25.0, "runs": 8, "method": "combined"},
    "sde-irregular": {"n_samples": (4096,), "n_steps": 12500, "horizon": 25.0, "runs": 8, "method": "combined"},
    "sde-laser": {"n_samples": (2**14,), "n_steps": 1000, "horizon": 10.0, "runs": 8, "method": "combined"},
    "plan": {},
}

# large-scale settings; far beyond a desktop budget
FULL_PRESETS: dict[str, dict[str, Any]] = {
    "static": {"n_samples": (1000,), "attempts": 10000},
    "onestep-combined": {"n_samples": (1000,), "dt": (1e-4,), "attempts": 10000},
    "onestep-individual": {"n_samples": (1000,), "dt": (0.1,), "attempts": 10000},
    "sde-ou": {"n_samples": (1000, 10000, 100000, 1000000), "n_steps": 80000, "horizon": 1.0, "runs": 120},
    "sde-cubic": {"n_samples": (1000, 10000, 100000), "n_steps": 12500, "horizon": 25.0, "runs": 120},
    "sde-irregular": {"n_samples": (1000, 10000, 100000), "n_steps": 12500, "horizon": 25.0, "runs": 120},
    "sde-laser": {
        "n_samples": (131072,),
        "n_steps": 12500,
        "horizon": 25.0,
        "runs": 120,
        "noise_levels": tuple(0.01 * 2.0**k for k in range(11)),
    },
    "plan": {},
}


def validate(cfg: RunConfig) -> None:
    """Raise :class:`ConfigError` for an inconsistent configuration."""
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {cfg.scenario!r}; expected one of {SCENARIOS}")
    for name in ("attempts", "runs", "max_moment", "laser_order", "workers"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name} must be >= 1")
    if not cfg.n_samples or any(n < 1 for n in cfg.n_samples):
        raise ConfigError("n_samples must be a non-empty list of counts >= 1")
    if cfg.max_moment > N_REPORTED:
        raise ConfigError(f"max_moment must be <= {N_REPORTED}")
    if cfg.special_scaling not in SPECIAL_SCALINGS:
        raise ConfigError(f"special_scaling must be one of {SPECIAL_SCALINGS}")
    for name in ("sigma", "noise", "init_std", "order", "trunc_const", "sample_sigma"):
        v = getattr(cfg, name)
        if not (math.isfinite(v) and v > 0):
            raise ConfigError(f"{name} must be finite and positive")
    if cfg.dt is not None and (not cfg.dt or any(not (math.isfinite(h) and h > 0) for h in cfg.dt)):
        raise ConfigError("dt values must be finite and positive")
    if cfg.scenario.startswith("onestep") and cfg.dt is None:
        raise ConfigError("one-step scenarios need dt")
    if cfg.scenario in SDE_SCENARIOS:
        if cfg.n_steps is None or cfg.n_steps < 1:
            raise ConfigError("SDE scenarios need n_steps >= 1")
        if (cfg.dt is None) == (cfg.horizon is None):
            raise ConfigError("give exactly one of dt or horizon together with n_steps")
        if cfg.dt is not None and len(cfg.dt) != 1:
            raise ConfigError("SDE scenarios take a single dt")
        if cfg.horizon is not None and not (math.isfinite(cfg.horizon) and cfg.horizon > 0):
            raise ConfigError("horizon must be finite and positive")
        if cfg.method not in ("euler", "combined", "individual"):
            raise ConfigError("method must be euler, combined or individual")
        if cfg.scenario == "sde-laser" and (
            not cfg.noise_levels or any(not (math.isfinite(b) and b > 0) for b in cfg.noise_levels)
        ):
            raise ConfigError("noise_levels must be positive")
    if cfg.scenario == "plan" and (not cfg.budget or any(n < 1 for n in cfg.budget)):
        raise ConfigError("budget must be a non-empty list of integers >= 1")


def _coerce(name: str, value: Any) -> Any:
    ftypes = {f.name: f.type for f in fields(RunConfig)}
    if name not in ftypes:
        raise ConfigError(f"unknown configuration key {name!r}")
    if value is None:
        return None
    try:
        if name in _TUPLE_FIELDS:
            kind = _TUPLE_FIELDS[name]
            items = value if isinstance(value, (list, tuple)) else [value]
            return tuple(_scalar(kind, v, name) for v in items)
        if name in ("n_steps", "attempts", "runs", "max_moment", "laser_order", "seed", "workers"):
            return _scalar(int, value, name)
        if name in ("precondition", "timing"):
            if not isinstance(value, bool):
                raise ConfigError(f"{name} must be true or false")
            return value
        if name in ("scenario", "method", "out", "special_scaling"):
            if not isinstance(value, str):
                raise ConfigError(f"{name} must be a string")
            return value
        return _scalar(float, value, name)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value for {name}: {value!r}") from None


def _scalar(kind, value, name):
    if isinstance(value, bool):
        raise ConfigError(f"{name} must be numeric")
    if kind is int:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{name} must be an integer")
        if isinstance(value, str):
            value = float(value)
            if not value.is_integer():
                raise ConfigError(f"{name} must be an integer")
        return int(value)
    return float(value)


def make_config(
    scenario: str,
    file_values: dict[str, Any] | None = None,
    overrides: dict[str, Any] | None = None,
    preset: str = "desk",
) -> RunConfig:
    """Merge preset, config-file values and overrides (later wins).

    For SDE scenarios a ``dt`` given at one level clears a ``horizon`` from
    an earlier level, and vice versa.
    """
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    table = {"desk": PRESETS, "full": FULL_PRESETS}.get(preset)
    if table is None:
        raise ConfigError("preset must be 'desk' or 'full'")
    merged: dict[str, Any] = dict(PRESETS[scenario])
    merged.update(table[scenario])
    for layer in (file_values or {}, overrides or {}):
        layer = {k: v for k, v in layer.items() if v is not None}
        if "scenario" in layer and layer["scenario"] != scenario:
            raise ConfigError(f"config is for scenario {layer['scenario']!r}, not {scenario!r}")
        coerced = {k: _coerce(k, v) for k, v in layer.items()}
        if scenario in SDE_SCENARIOS:
            if "dt" in coerced and "horizon" not in coerced:
                merged.pop("horizon", None)
            if "horizon" in coerced and "dt" not in coerced:
                merged.pop("dt", None)
        merged.update(coerced)
    merged["scenario"] = scenario
    return RunConfig(**merged)


def load_config_file(path: str) -> dict[str, Any]:
    """Read a flat JSON object of configuration keys."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    for k, v in data.items():
        if isinstance(v, dict):
            raise ConfigError(f"{path}: key {k!r} must not be nested")
    return data


# -- tables -------------------------------------------------------------------


@dataclass
class BenchTable:
    columns: list[str]
    rows: list[dict[str, Any]] = field(default_factory=list)

    def column(self, name: str, **where) -> np.ndarray:
        """Values of ``name`` over rows matching all ``where`` items."""
        out = [r[name] for r in self.rows if all(r.get(k) == v for k, v in where.items())]
        return np.asarray(out)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([format_value(row[c]) for c in self.columns])
        return buf.getvalue()

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def format_value(v: Any) -> str:
    """Shortest round-trip text for floats, plain text otherwise."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _table(columns: list[str], timing_columns: list[str], cfg: RunConfig, rows, key: tuple[str, ...]):
    cols = columns + (timing_columns if cfg.timing else [])
    rows = sorted(rows, key=lambda r: tuple(r[k] for k in key))
    return BenchTable(cols, [{c: r[c] for c in cols} for r in rows])


def _map(fn: Callable, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


MOMENT_LABELS = [f"m{m}" for m in range(1, N_REPORTED + 1)]
CUMULANT_LABELS = [f"k{m}" for m in range(1, N_REPORTED + 1)]


# -- static -------------------------------------------------------------------

STATIC_COLUMNS = [
    "schema_version", "scenario", "seed", "n_samples", "attempt", "observable",
    "r_unoptimized", "r_optimized", "iterations", "distance", "restarts", "svd_fallbacks",
]
STATIC_TIMING = ["wall_seconds", "reference_wall_seconds", "cost_optimized", "cost_reference"]


def _static_attempt(task):
    cfg, n, attempt = task
    obs = power_observables(cfg.max_moment, normal_moments(cfg.max_moment, cfg.sigma))
    t0 = time.perf_counter()
    X0 = cfg.sigma * rng.normals(cfg.seed, attempt, 0, (n, 1), rng.INITIAL)
    t_ref = time.perf_counter() - t0

    def resample(k):
        return cfg.sigma * rng.normals(cfg.seed, attempt, k, (n, 1), rng.RETRY)

    X, rep = optimize_initial(X0, obs, cfg.optimizer, resample=resample)
    wall = time.perf_counter() - t0
    targets = normal_moments(N_REPORTED, cfg.sigma)
    r0 = normalized_static_error(X0, targets, cfg.sigma)
    r1 = normalized_static_error(X, targets, cfg.sigma)
    abs0 = np.abs(raw_moments(X0, N_REPORTED) - targets)
    abs1 = np.abs(raw_moments(X, N_REPORTED) - targets)
    s0 = normalized_special_error(X0, cfg.sigma, cfg.special_scaling)
    s1 = normalized_special_error(X, cfg.sigma, cfg.special_scaling)
    mu = dict(zip(("exp", "abs"), special_targets(cfg.sigma)))
    x0, x1 = X0[:, 0], X[:, 0]
    raw_special = {
        "exp": (abs(np.exp(x0).mean() - mu["exp"]), abs(np.exp(x1).mean() - mu["exp"])),
        "abs": (abs(np.abs(x0).mean() - mu["abs"]), abs(np.abs(x1).mean() - mu["abs"])),
    }
    common = {
        "schema_version": SCHEMA_VERSION, "scenario": cfg.scenario, "seed": cfg.seed, "n_samples": n,
        "attempt": attempt, "iterations": rep.iterations, "distance": rep.distance,
        "restarts": rep.restarts, "svd_fallbacks": rep.svd_fallbacks,
        "wall_seconds": wall, "reference_wall_seconds": t_ref,
    }
    rows = []
    for i, label in enumerate(MOMENT_LABELS):
        rows.append({**common, "observable": label, "r_unoptimized": float(r0[i]), "r_optimized": float(r1[i]),
                     "cost_optimized": cost_metric(wall, float(abs1[i])),
                     "cost_reference": cost_metric(t_ref, float(abs0[i]))})
    for label in ("exp", "abs"):
        rows.append({**common, "observable": label, "r_unoptimized": s0[label], "r_optimized": s1[label],
                     "cost_optimized": cost_metric(wall, float(raw_special[label][1])),
                     "cost_reference": cost_metric(t_ref, float(raw_special[label][0]))})
    return rows


def _observable_rank(label: str) -> tuple[int, str]:
    order = MOMENT_LABELS + CUMULANT_LABELS + ["exp", "abs", "n"]
    return (order.index(label) if label in order else len(order), label)


def run_static_bench(cfg: RunConfig) -> BenchTable:
    """Optimize ``attempts`` independent normal ensembles per ensemble size.

    One row per (ensemble size, attempt, observable) with the normalized
    error before and after optimization.
    """
    if cfg.scenario != "static":
        raise ConfigError("run_static_bench needs scenario 'static'")
    tasks = [(cfg, n, a) for n in cfg.n_samples for a in range(cfg.attempts)]
    rows = [r for chunk in _map(_static_attempt, tasks, cfg.workers) for r in chunk]
    for r in rows:
        r["_rank"] = _observable_rank(r["observable"])
    return _table(STATIC_COLUMNS, STATIC_TIMING, cfg, rows, ("n_samples", "attempt", "_rank"))


# -- one step -----------------------------------------------------------------

ONESTEP_COLUMNS = [
    "schema_version", "scenario", "method", "seed", "n_samples", "dt", "attempt", "observable",
    "r_unoptimized", "r_optimized", "iterations", "distance",
]
ONESTEP_TIMING = ["wall_seconds"]


def _onestep_attempt(task):
    cfg, n, dt, attempt = task
    method = cfg.scenario.split("-", 1)[1]
    model = constant_drift(cfg.drift, cfg.noise)
    obs = power_observables(cfg.max_moment)
    obs8 = power_observables(N_REPORTED)
    X = cfg.init_mean + cfg.init_std * rng.normals(cfg.seed, attempt, 0, (n, 1), rng.INITIAL)
    dW = math.sqrt(dt) * rng.normals(cfg.seed, attempt, 0, (n, 1))
    scale = math.sqrt(dt / n)
    if method == "combined":
        Xn, rep = combined_step(X, model, obs, dt, dW, cfg.optimizer)
        c = ideal_moment_changes(X, model, obs8, dt)
        r0 = np.abs(raw_moments(euler_step(X, model, dt, dW), N_REPORTED) - c) / scale
        r1 = np.abs(raw_moments(Xn, N_REPORTED) - c) / scale
    else:
        Xn, rep = individual_step(X, model, obs, dt, dW, cfg.optimizer)
        Ddt = np.full((n, 1, 1), cfg.noise**2 * dt)
        dV_opt = Xn - X - model.drift(X) * dt
        e1, e2 = individual_residuals(X, cfg.noise * dW, obs8, Ddt)
        r0 = (np.abs(e1) + np.abs(e2)) / scale
        e1, e2 = individual_residuals(X, dV_opt, obs8, Ddt)
        r1 = (np.abs(e1) + np.abs(e2)) / scale
    common = {
        "schema_version": SCHEMA_VERSION, "scenario": cfg.scenario, "method": method, "seed": cfg.seed,
        "n_samples": n, "dt": dt, "attempt": attempt, "iterations": rep.iterations,
        "distance": rep.distance, "wall_seconds": rep.wall_seconds,
    }
    return [
        {**common, "observable": label, "r_unoptimized": float(r0[i]), "r_optimized": float(r1[i])}
        for i, label in enumerate(MOMENT_LABELS)
    ]


def run_onestep_bench(cfg: RunConfig) -> BenchTable:
    """One optimized step of the constant-drift model from ``attempts`` ensembles.

    Combined rows report ``|<x^m> - c_m| / sqrt(dt/N_S)``; individual rows
    report ``(|e1_m| + |e2_m|) / sqrt(dt/N_S)``. The unoptimized column uses
    the plain Euler step with the same noise.
    """
    if cfg.scenario not in ("onestep-combined", "onestep-individual"):
        raise ConfigError("run_onestep_bench needs a one-step scenario")
    tasks = [(cfg, n, dt, a) for n in cfg.n_samples for dt in cfg.dt for a in range(cfg.attempts)]
    rows = [r for chunk in _map(_onestep_attempt, tasks, cfg.workers) for r in chunk]
    for r in rows:
        r["_rank"] = _observable_rank(r["observable"])
    return _table(ONESTEP_COLUMNS, ONESTEP_TIMING, cfg, rows, ("n_samples", "dt", "attempt", "_rank"))


# -- SDE integrations -----------------------------------------------------------

SDE_COLUMNS = [
    "schema_version", "scenario", "method", "seed", "n_samples", "n_steps", "dt", "noise", "run",
    "observable", "exact", "reference_value", "pos_value", "reference_error", "pos_error",
    "newton_iterations", "retried_steps",
]
SDE_TIMING = ["wall_seconds", "reference_wall_seconds"]


def _steady_exact(weight) -> dict[str, float]:
    moments = np.array([steady_state_expectation(weight, lambda x, m=m: x**m) for m in range(1, N_REPORTED + 1)])
    exact = dict(zip(MOMENT_LABELS, moments))
    exact.update(zip(CUMULANT_LABELS, cumulants_from_moments(moments)))
    exact["exp"] = steady_state_expectation(weight, np.exp)
    exact["abs"] = steady_state_expectation(weight, np.abs)
    return exact


def sde_setup(cfg: RunConfig, noise: float | None = None):
    """Model, initial (mean, std), POS observables and exact values of a scenario."""
    if cfg.scenario == "sde-ou":
        p = OuParams()
        raw, kappa = ou_exact_moments(p, cfg.total_time, N_REPORTED)
        exact = dict(zip(MOMENT_LABELS, raw))
        exact.update(zip(CUMULANT_LABELS, kappa))
        init = (p.init_mean, p.init_std)
        obs = power_observables(cfg.max_moment, normal_moments(cfg.max_moment, p.init_std, p.init_mean))
        return ornstein_uhlenbeck(p), init, obs, exact
    if cfg.scenario in ("sde-cubic", "sde-irregular"):
        model, weight = (cubic_drift(), CUBIC_WEIGHT) if cfg.scenario == "sde-cubic" else (irregular_drift(), IRREGULAR_WEIGHT)
        obs = power_observables(cfg.max_moment, normal_moments(cfg.max_moment, INITIAL_STD_STEADY))
        return model, (0.0, INITIAL_STD_STEADY), obs, _steady_exact(weight)
    if cfg.scenario == "sde-laser":
        return laser(noise), (0.0, INITIAL_STD_STEADY), laser_observables(cfg.laser_order), {"n": laser_nss(noise)}
    raise ConfigError(f"{cfg.scenario} is not an SDE scenario")


def _snapshot_values(result, exact: dict[str, float]) -> dict[str, float]:
    vals = dict(result.snapshots[-1].values)
    if "m1" in vals:
        moments = np.array([vals[k] for k in MOMENT_LABELS])
        vals.update(zip(CUMULANT_LABELS, cumulants_from_moments(moments)))
    return {k: float(vals[k]) for k in exact}


def _sde_run(task):
    cfg, n, noise, run = task
    model, (mean, std), obs, exact = sde_setup(cfg, noise)
    T, n_steps = cfg.total_time, cfg.n_steps
    X0 = mean + std * rng.normals(cfg.seed, run, 0, (n, model.dim), rng.INITIAL)
    recorders = default_recorders(model.dim, N_REPORTED)

    t0 = time.perf_counter()
    ref = integrate(model, X0, T, n_steps, "euler", seed=cfg.seed, stream=run, recorders=recorders)
    t_ref = time.perf_counter() - t0

    def resample(k):
        return mean + std * rng.normals(cfg.seed, run, k, (n, model.dim), rng.RETRY)

    t0 = time.perf_counter()
    if cfg.method == "euler":
        Xs = X0
    else:
        Xs, _ = optimize_initial(X0, obs, cfg.optimizer, resample=resample)
    pos = integrate(model, Xs, T, n_steps, cfg.method, obs, cfg.optimizer,
                    seed=cfg.seed, stream=run, recorders=recorders)
    wall = time.perf_counter() - t0

    rv, pv = _snapshot_values(ref, exact), _snapshot_values(pos, exact)
    common = {
        "schema_version": SCHEMA_VERSION, "scenario": cfg.scenario, "method": cfg.method, "seed": cfg.seed,
        "n_samples": n, "n_steps": n_steps, "dt": cfg.step_size, "noise": "" if noise is None else noise,
        "run": run, "newton_iterations": pos.newton_iterations, "retried_steps": len(pos.retried_steps),
        "wall_seconds": wall, "reference_wall_seconds": t_ref,
    }
    return [
        {**common, "observable": k, "exact": float(exact[k]), "reference_value": rv[k], "pos_value": pv[k],
         "reference_error": abs(rv[k] - exact[k]), "pos_error": abs(pv[k] - exact[k])}
        for k in exact
    ]


def run_sde_bench(cfg: RunConfig) -> BenchTable:
    """Paired reference (Euler) and POS integrations against exact values.

    Both integrations of a run draw their noise from the same counter stream.
    POS runs start from a statically optimized copy of the reference's
    initial ensemble.
    """
    if cfg.scenario not in SDE_SCENARIOS:
        raise ConfigError("run_sde_bench needs an SDE scenario")
    noises = cfg.noise_levels if cfg.scenario == "sde-laser" else (None,)
    tasks = [(cfg, n, b, r) for n in cfg.n_samples for b in noises for r in range(cfg.runs)]
    rows = [r for chunk in _map(_sde_run, tasks, cfg.workers) for r in chunk]
    for r in rows:
        r["_rank"] = _observable_rank(r["observable"])
        r["_noise"] = -1.0 if r["noise"] == "" else r["noise"]
    return _table(SDE_COLUMNS, SDE_TIMING, cfg, rows, ("n_samples", "_noise", "run", "_rank"))


# -- planning -------------------------------------------------------------------

PLAN_COLUMNS = [
    "schema_version", "scenario", "order", "trunc_const", "sample_sigma", "budget", "n_samples", "n_steps",
    "n_samples_real", "n_steps_real", "trunc_error", "sampling_error", "error_ratio", "predicted_error",
    "rounded_error", "effective_order",
]


def run_plan(cfg: RunConfig) -> BenchTable:
    """Optimal sample/step split for each budget."""
    if cfg.scenario != "plan":
        raise ConfigError("run_plan needs scenario 'plan'")
    rows = []
    for N in cfg.budget:
        plan = optimal_split(cfg.order, cfg.trunc_const, cfg.sample_sigma, N)
        row = asdict(plan)
        row.update(schema_version=SCHEMA_VERSION, scenario="plan", error_ratio=plan.error_ratio,
                   effective_order=effective_order(cfg.order))
        rows.append(row)
    return _table(PLAN_COLUMNS, [], cfg, rows, ("budget",))


RUNNERS: dict[str, Callable[[RunConfig], BenchTable]] = {
    "static": run_static_bench,
    "onestep-combined": run_onestep_bench,
    "onestep-individual": run_onestep_bench,
    "sde-ou": run_sde_bench,
    "sde-cubic": run_sde_bench,
    "sde-irregular": run_sde_bench,
    "sde-laser": run_sde_bench,
    "plan": run_plan,
}


def run(cfg: RunConfig) -> BenchTable:
    table = RUNNERS[cfg.scenario](cfg)
    if cfg.out:
        table.write(cfg.out)
    return table


def with_overrides(cfg: RunConfig, **changes) -> RunConfig:
    return replace(cfg, **{k: _coerce(k, v) for k, v in changes.items()})


__all__ = [
    "BenchTable",
    "RunConfig",
    "SCENARIOS",
    "SCHEMA_VERSION",
    "make_config",
    "load_config_file",
    "run",
    "run_onestep_bench",
    "run_plan",
    "run_sde_bench",
    "run_static_bench",
    "with_overrides",
]
