"""Experiment orchestration: tuning, N-sweeps over trials, and slope fits.

A sweep runs many independent train/test trials per training-set size,
averages the measured excess risk, and fits a log10-log10 line whose
negative slope is the empirical convergence rate.  Reproducibility is
strict: every trial seeds its own generator from
``(base_seed, N, trial_index)`` and results are reduced in task order, so
the emitted CSV is byte-identical for any worker count.

The standard method re-tunes nothing per N: k is anchored at the tuning
size and grown as ``k(N) = round(k_anchor * (N / N_anchor)**e)`` with the
exponent ``e`` given by the training-size schedule for the world's tail;
the adaptive method keeps its (scale, growth, radius) fixed and lets the
ball count do the adapting.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .estimators import (
    AdaptiveK,
    FixedK,
    KNNClassifier,
    KNNRegressor,
    _adaptive_k_vec,
    schedule_exponent,
    standard_k_schedule,
)
from .index import EUCLIDEAN, MAX_NORM, NORMS, SpatialIndex
from .lowerbound import CubeFamily
from .theory import EXPERIMENT_MARGIN, feature_tail_exponent, optimal_growth
from .validation import check_positive_int
from .worlds import (
    RiskEstimate,
    WorldSpec,
    excess_risk_classification,
    excess_risk_regression,
    sign_plus,
)

__all__ = [
    "ConfigError",
    "TuningSpec",
    "ExperimentConfig",
    "SweepResult",
    "CsvRow",
    "tune",
    "sweep",
    "fit_rate",
    "emit_csv",
    "read_csv",
    "group_rows",
    "CSV_HEADER",
    "DEFAULT_N_GRID",
]

CSV_HEADER = ("N", "mean_excess", "stderr", "trials", "method", "world")
DEFAULT_N_GRID = (500, 1000, 2000, 4000, 8000, 16000)
DEFAULT_K_GRID = tuple(range(1, 61))
DEFAULT_SCALE_GRID = tuple(0.25 * i for i in range(1, 17))
METHODS = ("standard", "adaptive")

_TUNE_STREAM = 1  # appended to the seed tuple so tuning never shares trial streams


class ConfigError(ValueError):
    """Malformed experiment configuration."""


@dataclass(frozen=True)
class TuningSpec:
    """Parameter tuning: disabled, or grid search at one anchor size."""

    mode: str = "none"
    n_anchor: int = 500
    grid: tuple | None = None
    trials: int = 50

    def __post_init__(self):
        if self.mode not in ("none", "at_N"):
            raise ConfigError(f"tuning mode must be 'none' or 'at_N', got {self.mode!r}")
        check_positive_int(self.n_anchor, "n_anchor")
        check_positive_int(self.trials, "trials")
        if self.grid is not None:
            object.__setattr__(self, "grid", tuple(self.grid))
            if len(self.grid) == 0:
                raise ConfigError("empty tuning grid")

    @classmethod
    def none(cls) -> "TuningSpec":
        return cls(mode="none")

    @classmethod
    def at_n(cls, n_anchor: int = 500, grid=None, trials: int = 50) -> "TuningSpec":
        return cls(mode="at_N", n_anchor=n_anchor, grid=grid, trials=trials)

    @classmethod
    def from_value(cls, value) -> "TuningSpec":
        if value is None or value == "none":
            return cls.none()
        if isinstance(value, dict):
            allowed = {"mode", "n_anchor", "grid", "trials"}
            unknown = set(value) - allowed
            if unknown:
                raise ConfigError(f"unknown tuning key: {sorted(unknown)[0]!r}")
            return cls(
                mode=value.get("mode", "at_N"),
                n_anchor=int(value.get("n_anchor", 500)),
                grid=tuple(value["grid"]) if "grid" in value else None,
                trials=int(value.get("trials", 50)),
            )
        raise ConfigError(f"tuning must be 'none' or an object, got {value!r}")


def _parse_world(value) -> WorldSpec | CubeFamily:
    if not isinstance(value, dict):
        raise ConfigError(f"world must be an object, got {value!r}")
    if "kind" not in value:
        raise ConfigError("world config is missing 'kind'")
    if value["kind"] == "cube_family":
        return CubeFamily.from_dict(value)
    return WorldSpec.from_dict(value)


def _parse_selector(value, method: str, dim: int):
    if value is None:
        if method == "adaptive":
            return AdaptiveK(scale=1.0, growth=optimal_growth(dim), radius=1.0)
        return None  # standard: resolved by tuning, or rejected below
    if not isinstance(value, dict):
        raise ConfigError(f"selector must be an object, got {value!r}")
    unknown = set(value) - {"k", "K", "q", "A"}
    if unknown:
        raise ConfigError(f"unknown selector key: {sorted(unknown)[0]!r}")
    if "k" in value:
        if len(value) > 1:
            raise ConfigError("selector mixes fixed 'k' with adaptive parameters")
        return FixedK(int(value["k"]))
    return AdaptiveK(
        scale=float(value.get("K", 1.0)),
        growth=float(value.get("q", optimal_growth(dim))),
        radius=float(value.get("A", 1.0)),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep: a world, a method with its selector, sizes, and budgets."""

    world: object
    method: str
    selector: object = None
    N_grid: tuple = DEFAULT_N_GRID
    trials: int = 200
    n_test: int = 1000
    base_seed: int = 0
    tuning: TuningSpec = TuningSpec.none()
    norm: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if getattr(self.world, "task", None) not in ("classification", "regression"):
            raise ConfigError("world does not define a task")
        grid = tuple(int(n) for n in self.N_grid)
        if not grid or any(n < 1 for n in grid) or any(
            b <= a for a, b in zip(grid, grid[1:])
        ):
            raise ConfigError("N_grid must be strictly increasing positive integers")
        object.__setattr__(self, "N_grid", grid)
        try:
            check_positive_int(self.trials, "trials")
            check_positive_int(self.n_test, "n_test")
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not isinstance(self.base_seed, int) or not 0 <= self.base_seed < 2**64:
            raise ConfigError("base_seed must be an integer in [0, 2**64)")
        if self.norm is None:
            default = MAX_NORM if isinstance(self.world, CubeFamily) else EUCLIDEAN
            object.__setattr__(self, "norm", default)
        if self.norm not in NORMS:
            raise ConfigError(f"norm must be one of {NORMS}, got {self.norm!r}")
        if self.selector is None and self.method == "adaptive":
            object.__setattr__(
                self,
                "selector",
                AdaptiveK(scale=1.0, growth=optimal_growth(self.world_dim), radius=1.0),
            )
        if self.method == "standard":
            if self.selector is None and self.tuning.mode == "none":
                raise ConfigError("standard method needs 'k' when tuning is disabled")
            if self.selector is not None and not isinstance(self.selector, FixedK):
                raise ConfigError("standard method takes a fixed-k selector")
        if self.method == "adaptive" and not isinstance(self.selector, AdaptiveK):
            raise ConfigError("adaptive method takes an adaptive selector")

    @property
    def world_dim(self) -> int:
        return self.world.dim

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        allowed = {
            "world",
            "method",
            "selector",
            "N_grid",
            "trials",
            "n_test",
            "base_seed",
            "tuning",
            "norm",
        }
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown config key: {sorted(unknown)[0]!r}")
        for key in ("world", "method"):
            if key not in d:
                raise ConfigError(f"config is missing {key!r}")
        try:
            world = _parse_world(d["world"])
        except ValueError as exc:
            raise ConfigError(f"bad world config: {exc}") from exc
        method = d["method"]
        if method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {method!r}")
        selector = _parse_selector(d.get("selector"), method, world.dim)
        try:
            return cls(
                world=world,
                method=method,
                selector=selector,
                N_grid=tuple(d.get("N_grid", DEFAULT_N_GRID)),
                trials=int(d.get("trials", 200)),
                n_test=int(d.get("n_test", 1000)),
                base_seed=int(d.get("base_seed", 0)),
                tuning=TuningSpec.from_value(d.get("tuning")),
                norm=d.get("norm"),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# the k schedule for the standard method


def _schedule_inputs(world) -> tuple[str, float] | None:
    """(problem, tail exponent) for the k schedule, or None when unknown.

    Cube families (and heavy tails too weak for the unbounded theory)
    provide no usable exponent; the standard method then keeps k fixed
    across N, which is exactly the regime the cube construction targets.
    """
    if not isinstance(world, WorldSpec):
        return None
    if world.task == "classification":
        problem = "classification"
    elif world.eta.bounded:
        problem = "regression"
    else:
        problem = "regression_unbounded"
    tail = feature_tail_exponent(
        world.features.kind,
        nu=world.features.nu,
        strong=problem == "regression_unbounded",
    )
    if tail is None:
        return None
    return problem, tail


def _standard_k_for_n(world, k_anchor: int, n_anchor: int, N: int) -> int:
    inputs = _schedule_inputs(world)
    if inputs is None:
        return max(1, min(k_anchor, N))
    problem, tail = inputs
    e = schedule_exponent(problem, tail, world.dim, margin=EXPERIMENT_MARGIN)
    constant = k_anchor / n_anchor**e
    return standard_k_schedule(
        N, problem, tail, world.dim, margin=EXPERIMENT_MARGIN, constant=constant
    )


# ---------------------------------------------------------------------------
# tuning


def _excess_of_values(pred_values: np.ndarray, eta_values: np.ndarray, task: str) -> float:
    if task == "classification":
        wrong = sign_plus(pred_values) != sign_plus(eta_values)
        return float((wrong * np.abs(eta_values)).mean())
    return float(((pred_values - eta_values) ** 2).mean())


def tune(config: ExperimentConfig, candidate_grid=None):
    """Grid-search the selector parameter at the tuning anchor size.

    Returns the candidate (k for standard, the scale K for adaptive) with
    the lowest mean excess risk over the tuning trials; every candidate is
    scored on the same datasets, so ties break to the smaller value.
    """
    if config.tuning.mode != "at_N":
        raise ConfigError("tuning is not enabled in this config")
    if candidate_grid is None:
        candidate_grid = config.tuning.grid
    if candidate_grid is None:
        candidate_grid = (
            DEFAULT_K_GRID if config.method == "standard" else DEFAULT_SCALE_GRID
        )
    grid = sorted(candidate_grid)
    if not grid:
        raise ConfigError("empty tuning grid")

    world = config.world
    n0 = config.tuning.n_anchor
    task = world.task
    totals = np.zeros(len(grid))

    if config.method == "standard":
        grid = [int(k) for k in grid]
        if grid[0] < 1:
            raise ConfigError(f"k candidates must be >= 1, got {grid[0]}")
    else:
        grid = [float(K) for K in grid]
        if grid[0] <= 0:
            raise ConfigError(f"K candidates must be > 0, got {grid[0]}")
        growth = config.selector.growth
        radius = config.selector.radius

    for t in range(config.tuning.trials):
        rng = np.random.default_rng(
            np.random.SeedSequence((config.base_seed, n0, t, _TUNE_STREAM))
        )
        X, y = world.sample(n0, rng)
        Xq = world.sample_features(config.n_test, rng)
        eta_q = world.eta_values(Xq)
        index = SpatialIndex(X, norm=config.norm)

        if config.method == "standard":
            k_max = min(max(grid), n0)
            _, nbrs = index.knn_batch(Xq, k_max)
            sums = np.cumsum(y[nbrs], axis=1)
            for gi, k in enumerate(grid):
                k_eff = min(k, n0)
                pred = sums[:, k_eff - 1] / k_eff
                totals[gi] += _excess_of_values(pred, eta_q, task)
        else:
            n_ball = index.count_within_batch(Xq, radius)
            k_cap = min(int(_adaptive_k_vec(n_ball, max(grid), growth).max()), n0)
            _, nbrs = index.knn_batch(Xq, k_cap)
            sums = np.cumsum(y[nbrs], axis=1)
            for gi, K in enumerate(grid):
                ks = np.minimum(_adaptive_k_vec(n_ball, K, growth), k_cap)
                pred = np.take_along_axis(sums, ks[:, None] - 1, axis=1)[:, 0] / ks
                totals[gi] += _excess_of_values(pred, eta_q, task)

    return grid[int(np.argmin(totals))]


# ---------------------------------------------------------------------------
# sweeping


@dataclass(frozen=True)
class SweepResult:
    """Per-N excess-risk estimates plus the fitted log-log line."""

    method: str
    world_name: str
    N_grid: tuple
    estimates: tuple
    tuned_param: float | None = None
    slope: float | None = None
    slope_stderr: float | None = None
    intercept: float | None = None

    @property
    def rate(self) -> float | None:
        """Empirical convergence rate: the negative fitted slope."""
        return None if self.slope is None else -self.slope

    def points(self) -> list:
        return [(N, est.mean) for N, est in zip(self.N_grid, self.estimates)]


def _run_trial(args) -> float:
    world, norm, selector, N, n_test, base_seed, trial = args
    seed_tuple = (base_seed, N, trial)
    try:
        rng = np.random.default_rng(np.random.SeedSequence(seed_tuple))
        X, y = world.sample(N, rng)
        if world.task == "classification":
            model = KNNClassifier(selector=selector, norm=norm).fit(X, y)
            est = excess_risk_classification(model.predict, world, n_test, rng)
        else:
            model = KNNRegressor(selector=selector, norm=norm).fit(X, y)
            est = excess_risk_regression(model.predict, world, n_test, rng)
        return est.mean
    except Exception as exc:
        raise RuntimeError(
            f"trial failed (N={N}, trial={trial}, seed={seed_tuple}): {exc}"
        ) from exc


def sweep(config: ExperimentConfig, workers: int = 1) -> SweepResult:
    """Run the configured sweep and fit its empirical rate.

    Trials execute independently (in processes when ``workers > 1``) and are
    reduced in (N, trial) order, so output is identical for any worker
    count.  The rate fit uses only grid points with positive mean excess
    risk and is skipped (fields left None) when fewer than 3 qualify.
    """
    check_positive_int(workers, "workers")
    tuned = None
    selector = config.selector
    n_anchor = config.tuning.n_anchor
    if config.tuning.mode == "at_N":
        tuned = tune(config)
        if config.method == "standard":
            selector = FixedK(tuned)
        else:
            selector = replace(selector, scale=tuned)
    if config.method == "standard":
        per_n = [
            FixedK(_standard_k_for_n(config.world, selector.k, n_anchor, N))
            for N in config.N_grid
        ]
    else:
        per_n = [selector] * len(config.N_grid)

    tasks = [
        (config.world, config.norm, per_n[i], N, config.n_test, config.base_seed, t)
        for i, N in enumerate(config.N_grid)
        for t in range(config.trials)
    ]
    if workers == 1:
        trial_means = [_run_trial(a) for a in tasks]
    else:
        chunk = max(1, len(tasks) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trial_means = list(pool.map(_run_trial, tasks, chunksize=chunk))

    estimates = []
    for i in range(len(config.N_grid)):
        vals = np.array(trial_means[i * config.trials : (i + 1) * config.trials])
        stderr = (
            float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
        )
        estimates.append(
            RiskEstimate(float(vals.mean()), stderr, config.n_test, config.trials)
        )

    slope = slope_stderr = intercept = None
    positive = [
        (N, est.mean) for N, est in zip(config.N_grid, estimates) if est.mean > 0
    ]
    if len(positive) >= 3:
        slope, slope_stderr, intercept = fit_rate(positive)

    return SweepResult(
        method=config.method,
        world_name=config.world.name,
        N_grid=config.N_grid,
        estimates=tuple(estimates),
        tuned_param=tuned,
        slope=slope,
        slope_stderr=slope_stderr,
        intercept=intercept,
    )


# ---------------------------------------------------------------------------
# rate fitting


def fit_rate(points) -> tuple[float, float, float]:
    """OLS of log10(excess risk) on log10(N): (slope, slope stderr, intercept).

    The empirical convergence rate reported elsewhere is the negative slope.
    """
    pts = [(int(n), float(m)) for n, m in points]
    if len(pts) < 3:
        raise ValueError("need >=3 grid points for a rate fit")
    if any(m <= 0 for _, m in pts):
        raise ValueError("cannot log a nonpositive excess risk")
    x = np.log10([n for n, _ in pts])
    y = np.log10([m for _, m in pts])
    xc = x - x.mean()
    sxx = float(np.dot(xc, xc))
    if sxx == 0.0:
        raise ValueError("rate fit needs at least two distinct N values")
    slope = float(np.dot(xc, y) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    s2 = float(np.dot(resid, resid)) / (len(pts) - 2)
    return slope, math.sqrt(max(s2, 0.0) / sxx), intercept


# ---------------------------------------------------------------------------
# CSV emission


@dataclass(frozen=True)
class CsvRow:
    N: int
    mean_excess: float
    stderr: float
    trials: int
    method: str
    world: str


def emit_csv(result, path: str) -> None:
    """Write sweep results (one or a list) as CSV with the fixed header."""
    results = [result] if isinstance(result, SweepResult) else list(result)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for res in results:
            for N, est in zip(res.N_grid, res.estimates):
                writer.writerow(
                    [
                        N,
                        repr(float(est.mean)),
                        repr(float(est.stderr)),
                        est.n_trials,
                        res.method,
                        res.world_name,
                    ]
                )


def read_csv(path: str) -> list[CsvRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header in {path}: {header}")
        rows = []
        for raw in reader:
            if len(raw) != len(CSV_HEADER):
                raise ValueError(f"malformed CSV row in {path}: {raw}")
            rows.append(
                CsvRow(
                    N=int(raw[0]),
                    mean_excess=float(raw[1]),
                    stderr=float(raw[2]),
                    trials=int(raw[3]),
                    method=raw[4],
                    world=raw[5],
                )
            )
    return rows


def group_rows(rows) -> dict:
    """Group CSV rows into series keyed by (method, world), keeping order."""
    groups: dict = {}
    for row in rows:
        groups.setdefault((row.method, row.world), []).append(row)
    return groups
