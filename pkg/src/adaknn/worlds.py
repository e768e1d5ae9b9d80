"""Synthetic worlds: feature laws, target functions, labels, and risk oracles.

A world couples an i.i.d.-coordinate feature law with a target function
``eta`` and a task.  For classification, labels are ±1 with
``P(Y = +1 | x) = (1 + eta(x)) / 2``; for regression, ``Y = eta(X) + noise``
with centered Gaussian noise.  The interesting feature laws here are heavy
tailed (Laplace, Student t, Cauchy), which is exactly where fixed-k nearest
neighbors loses its cube-support guarantees.

Risk oracles:

* ``bayes_risk`` for classification is ``E[(1 - |eta(X)|) / 2]``, computed
  by kink-aligned Gauss-Legendre quadrature in one dimension and by Monte
  Carlo above it;
* ``excess_risk_classification`` defaults to the plug-in estimate
  ``mean(1{g(X) != sign(eta(X))} * |eta(X)|)`` over a fresh test sample,
  which has the same expectation as (error rate - Bayes risk) but far less
  variance; the error-rate form is available as ``estimator="error_minus_bayes"``;
* ``excess_risk_regression`` is ``mean((g(X) - eta(X))**2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import stats

from .validation import check_positive_int

__all__ = [
    "FeatureDist",
    "EtaFunc",
    "WorldSpec",
    "BayesRisk",
    "RiskEstimate",
    "sign_plus",
    "labels_from_eta",
    "bayes_risk_classification",
    "excess_risk_classification",
    "excess_risk_regression",
]

FEATURE_KINDS = ("uniform", "gaussian", "laplace", "student_t", "cauchy")
ETA_KINDS = (
    "cos5x",
    "piecewise_periodic",
    "cos2sum",
    "cos2first",
    "sinx",
    "identity",
    "constant",
)
TASKS = ("classification", "regression")


def sign_plus(values: np.ndarray) -> np.ndarray:
    """Sign with the tie convention used throughout: sign(0) = +1."""
    return np.where(np.asarray(values) >= 0.0, 1.0, -1.0)


# ---------------------------------------------------------------------------
# feature laws


@dataclass(frozen=True)
class FeatureDist:
    """A feature law with i.i.d. coordinates.

    ``kind`` is one of uniform, gaussian, laplace, student_t, cauchy;
    uniform takes ``low``/``high`` bounds and student_t the degrees of
    freedom ``nu``.
    """

    kind: str
    dim: int = 1
    low: float = -1.0
    high: float = 1.0
    nu: float | None = None

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        check_positive_int(self.dim, "dim")
        if self.kind == "uniform" and not self.low < self.high:
            raise ValueError(f"need low < high, got [{self.low}, {self.high}]")
        if self.kind == "student_t":
            if self.nu is None or not self.nu > 0:
                raise ValueError("student_t needs a positive nu")

    # constructors ---------------------------------------------------------

    @classmethod
    def uniform(cls, low: float, high: float, dim: int = 1) -> "FeatureDist":
        return cls(kind="uniform", dim=dim, low=float(low), high=float(high))

    @classmethod
    def gaussian(cls, dim: int = 1) -> "FeatureDist":
        return cls(kind="gaussian", dim=dim)

    @classmethod
    def laplace(cls, dim: int = 1) -> "FeatureDist":
        return cls(kind="laplace", dim=dim)

    @classmethod
    def student_t(cls, nu: float, dim: int = 1) -> "FeatureDist":
        return cls(kind="student_t", dim=dim, nu=float(nu))

    @classmethod
    def cauchy(cls, dim: int = 1) -> "FeatureDist":
        return cls(kind="cauchy", dim=dim)

    # sampling and densities -------------------------------------------------

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``n`` feature vectors, shape (n, dim)."""
        shape = (n, self.dim)
        if self.kind == "uniform":
            return rng.uniform(self.low, self.high, shape)
        if self.kind == "gaussian":
            return rng.standard_normal(shape)
        if self.kind == "laplace":
            return rng.laplace(0.0, 1.0, shape)
        # Student t via the normal / chi-square representation; Cauchy is t
        # with one degree of freedom.
        nu = 1.0 if self.kind == "cauchy" else float(self.nu)
        z = rng.standard_normal(shape)
        v = rng.chisquare(nu, shape)
        return z / np.sqrt(v / nu)

    def pdf1(self, x: np.ndarray) -> np.ndarray:
        """Density of a single coordinate."""
        x = np.asarray(x, dtype=float)
        if self.kind == "uniform":
            inside = (x >= self.low) & (x <= self.high)
            return np.where(inside, 1.0 / (self.high - self.low), 0.0)
        if self.kind == "gaussian":
            return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        if self.kind == "laplace":
            return 0.5 * np.exp(-np.abs(x))
        if self.kind == "cauchy":
            return 1.0 / (math.pi * (1.0 + x * x))
        nu = float(self.nu)
        c = math.gamma((nu + 1.0) / 2.0) / (
            math.sqrt(nu * math.pi) * math.gamma(nu / 2.0)
        )
        return c * (1.0 + x * x / nu) ** (-(nu + 1.0) / 2.0)

    def pdf(self, X: np.ndarray) -> np.ndarray:
        """Joint density at each row of ``X`` (coordinates are independent)."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        return np.prod(self.pdf1(X), axis=1)

    def support1(self) -> tuple[float, float]:
        if self.kind == "uniform":
            return (self.low, self.high)
        return (-math.inf, math.inf)

    def density_kinks(self) -> tuple[float, ...]:
        """Points where the coordinate density is not smooth."""
        if self.kind == "laplace":
            return (0.0,)
        if self.kind == "uniform":
            return (self.low, self.high)
        return ()

    def tail_mass(self, t: float) -> float:
        """P(|X_1| > t) for the symmetric laws (0 for uniform supports)."""
        if self.kind == "uniform":
            return 0.0
        if self.kind == "gaussian":
            return 2.0 * stats.norm.sf(t)
        if self.kind == "laplace":
            return 2.0 * stats.laplace.sf(t)
        if self.kind == "cauchy":
            return 2.0 * stats.cauchy.sf(t)
        return 2.0 * stats.t.sf(t, df=float(self.nu))

    @property
    def name(self) -> str:
        if self.kind == "student_t":
            return f"t{self.nu:g}"
        return self.kind


# ---------------------------------------------------------------------------
# target functions


_PIECEWISE_BRANCH_POINTS = (0.0, 0.5, 1.5)  # on one period [0, 2)


def _piecewise_periodic(x: np.ndarray) -> np.ndarray:
    """Period-2 zig-zag: 2u on [0, 1/2), 2(1-u) on [1/2, 3/2), 2(u-2) on [3/2, 2)."""
    u = np.mod(x, 2.0)
    return np.where(u < 0.5, 2.0 * u, np.where(u < 1.5, 2.0 * (1.0 - u), 2.0 * (u - 2.0)))


@dataclass(frozen=True)
class EtaFunc:
    """A named target function evaluated on the leading feature coordinates."""

    kind: str
    value: float = 0.0  # only used by kind="constant"

    def __post_init__(self):
        if self.kind not in ETA_KINDS:
            raise ValueError(f"unknown eta kind {self.kind!r}")
        if self.kind == "constant" and not np.isfinite(self.value):
            raise ValueError("constant eta needs a finite value")

    @property
    def min_dim(self) -> int:
        return 2 if self.kind == "cos2sum" else 1

    @property
    def bounded(self) -> bool:
        return self.kind != "identity"

    @property
    def max_abs(self) -> float:
        if self.kind == "identity":
            return math.inf
        if self.kind == "constant":
            return abs(self.value)
        return 1.0

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-d, got ndim={X.ndim}")
        if X.shape[1] < self.min_dim:
            raise ValueError(
                f"eta kind {self.kind!r} requires at least {self.min_dim} "
                f"feature dimensions, got {X.shape[1]}"
            )
        x1 = X[:, 0]
        if self.kind == "cos5x":
            return np.cos(5.0 * x1)
        if self.kind == "piecewise_periodic":
            return _piecewise_periodic(x1)
        if self.kind == "cos2sum":
            return np.cos(2.0 * x1 + 2.0 * X[:, 1])
        if self.kind == "cos2first":
            return np.cos(2.0 * x1)
        if self.kind == "sinx":
            return np.sin(x1)
        if self.kind == "identity":
            return x1.copy()
        return np.full(X.shape[0], float(self.value))

    # quadrature support (one-dimensional evaluation) ------------------------

    @property
    def abs_period(self) -> float | None:
        """Period of ``|eta|`` along the first coordinate, when periodic."""
        return {
            "cos5x": math.pi / 5.0,
            "sinx": math.pi,
            "piecewise_periodic": 1.0,
            "cos2first": math.pi / 2.0,
        }.get(self.kind)

    def abs_kinks(self, lo: float, hi: float) -> np.ndarray:
        """Points in [lo, hi] where ``|eta|`` is not smooth (zeros and corners)."""
        if self.kind in ("constant", "cos2sum"):
            return np.empty(0)
        if self.kind == "identity":
            return np.array([0.0]) if lo <= 0.0 <= hi else np.empty(0)
        if self.kind in ("cos5x", "cos2first"):
            freq = 5.0 if self.kind == "cos5x" else 2.0
            step, offset = math.pi / freq, math.pi / (2.0 * freq)
        elif self.kind == "sinx":
            step, offset = math.pi, 0.0
        else:  # piecewise_periodic: zeros at integers, corners at half-integers
            step, offset = 0.5, 0.0
        j_lo = math.ceil((lo - offset) / step)
        j_hi = math.floor((hi - offset) / step)
        if j_hi < j_lo:
            return np.empty(0)
        return offset + step * np.arange(j_lo, j_hi + 1)

    @property
    def name(self) -> str:
        if self.kind == "constant":
            return f"const{self.value:g}"
        return self.kind


# ---------------------------------------------------------------------------
# labels


def labels_from_eta(eta_values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """±1 labels with P(Y = +1 | x) = (1 + eta(x)) / 2."""
    eta_values = np.asarray(eta_values, dtype=float)
    if np.any(np.abs(eta_values) > 1.0):
        raise ValueError("eta out of range for classification")
    u = rng.random(eta_values.shape[0])
    return np.where(u < 0.5 * (1.0 + eta_values), 1.0, -1.0)


# ---------------------------------------------------------------------------
# world specification


@dataclass(frozen=True)
class WorldSpec:
    """A feature law plus target function plus task."""

    features: FeatureDist
    eta: EtaFunc
    task: str
    noise_sigma: float = 0.5

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.features.dim < self.eta.min_dim:
            raise ValueError(
                f"eta kind {self.eta.kind!r} requires at least {self.eta.min_dim} "
                f"feature dimensions, got {self.features.dim}"
            )
        if self.task == "classification" and self.eta.max_abs > 1.0:
            raise ValueError("eta out of range for classification")
        if not (np.isfinite(self.noise_sigma) and self.noise_sigma >= 0.0):
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")

    @property
    def dim(self) -> int:
        return self.features.dim

    @property
    def name(self) -> str:
        task = "cls" if self.task == "classification" else "reg"
        base = self.features.name
        # "t2" + dim 1 would read as "t21"; keep the pieces separable
        sep = "_" if base[-1].isdigit() or base[-1] == "." else ""
        return f"{base}{sep}{self.features.dim}-{self.eta.name}-{task}"

    def sample_features(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.features.sample(n, rng)

    def eta_values(self, X: np.ndarray) -> np.ndarray:
        return self.eta(X)

    def sample_labels(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Labels given features: Bernoulli ±1 votes or noisy function values."""
        e = self.eta_values(X)
        if self.task == "classification":
            return labels_from_eta(e, rng)
        return e + self.noise_sigma * rng.standard_normal(X.shape[0])

    def sample(self, n: int, rng: np.random.Generator):
        X = self.sample_features(n, rng)
        return X, self.sample_labels(X, rng)

    def bayes_predict(self, X: np.ndarray) -> np.ndarray:
        """The optimal prediction: sign(eta) for classification, eta itself otherwise."""
        e = self.eta_values(X)
        return sign_plus(e) if self.task == "classification" else e

    def bayes_risk(self, **kwargs) -> "BayesRisk":
        """Classification Bayes risk E[(1 - |eta|) / 2]; see :func:`bayes_risk_classification`."""
        if self.task != "classification":
            raise ValueError("bayes_risk is defined here for classification worlds")
        return bayes_risk_classification(self.features, self.eta, **kwargs)

    # JSON round trip ---------------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "kind": self.features.kind,
            "dim": self.features.dim,
            "eta": self.eta.kind,
            "task": self.task,
        }
        if self.features.kind == "uniform":
            d["low"] = self.features.low
            d["high"] = self.features.high
        if self.features.kind == "student_t":
            d["nu"] = self.features.nu
        if self.eta.kind == "constant":
            d["eta_value"] = self.eta.value
        if self.task == "regression":
            d["noise_sigma"] = self.noise_sigma
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "WorldSpec":
        allowed = {"kind", "dim", "eta", "task", "low", "high", "nu", "eta_value", "noise_sigma"}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown world key: {sorted(unknown)[0]!r}")
        for key in ("kind", "eta", "task"):
            if key not in d:
                raise ValueError(f"world config is missing {key!r}")
        features = FeatureDist(
            kind=d["kind"],
            dim=int(d.get("dim", 1)),
            low=float(d.get("low", -1.0)),
            high=float(d.get("high", 1.0)),
            nu=float(d["nu"]) if "nu" in d else None,
        )
        eta = EtaFunc(kind=d["eta"], value=float(d.get("eta_value", 0.0)))
        return cls(
            features=features,
            eta=eta,
            task=d["task"],
            noise_sigma=float(d.get("noise_sigma", 0.5)),
        )


# ---------------------------------------------------------------------------
# Bayes risk


@dataclass(frozen=True)
class BayesRisk:
    """Bayes risk value with the numeric error of the method that produced it."""

    value: float
    error: float
    method: str


def _integrate_pieces(fn, edges: np.ndarray, max_width: float = 0.25) -> float:
    """Gauss-Legendre integral of ``fn`` over [edges[0], edges[-1]].

    ``edges`` must include every non-smooth point of ``fn``; pieces wider
    than ``max_width`` are subdivided so the 24-point rule stays accurate.
    """
    refined = [np.array([edges[0]])]
    for a, b in zip(edges[:-1], edges[1:]):
        parts = max(1, int(math.ceil((b - a) / max_width)))
        refined.append(np.linspace(a, b, parts + 1)[1:])
    grid = np.concatenate(refined)
    nodes, weights = leggauss(24)
    a = grid[:-1]
    half = 0.5 * np.diff(grid)
    centers = a + half
    x = (centers[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return float(np.dot(w, fn(x)))


def _bayes_quadrature(features: FeatureDist, eta: EtaFunc, tol: float) -> BayesRisk:
    def integrand(x):
        vals = eta(x.reshape(-1, 1))
        return 0.5 * (1.0 - np.abs(vals)) * features.pdf1(x)

    if eta.kind == "constant":
        return BayesRisk(0.5 * (1.0 - abs(eta.value)), 0.0, "quadrature")

    lo, hi = features.support1()
    tail = 0.0
    if math.isinf(hi):
        period = eta.abs_period
        if period is None:
            raise ValueError(
                f"no quadrature rule for eta kind {eta.kind!r} on unbounded support"
            )
        # Truncate where one period of density oscillation is negligible:
        # the remainder beyond ±T is tail_mass * (periodic mean) up to an
        # error below period * pdf(T), which the loop drives under tol/4.
        t_edge = 8.0
        while period * features.pdf1(np.array([t_edge]))[0] > tol / 4.0:
            t_edge *= 2.0
            if t_edge > 1e9:
                raise ValueError("quadrature truncation failed to converge")
        lo, hi = -t_edge, t_edge
        def shape(x):
            return 0.5 * (1.0 - np.abs(eta(x.reshape(-1, 1))))
        period_edges = np.unique(
            np.concatenate([[0.0, period], eta.abs_kinks(0.0, period)])
        )
        tail_mean = _integrate_pieces(shape, period_edges, max_width=0.1) / period
        tail = features.tail_mass(t_edge) * tail_mean

    inner = np.concatenate(
        [
            [lo, hi],
            eta.abs_kinks(lo, hi),
            [k for k in features.density_kinks() if lo < k < hi],
        ]
    )
    edges = np.unique(inner)
    core = _integrate_pieces(integrand, edges)
    return BayesRisk(core + tail, tol, "quadrature")


def _bayes_monte_carlo(
    features: FeatureDist, eta: EtaFunc, draws: int, seed
) -> BayesRisk:
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    left = draws
    while left > 0:
        chunk = min(left, 1_000_000)
        vals = 0.5 * (1.0 - np.abs(eta(features.sample(chunk, rng))))
        total += float(vals.sum())
        total_sq += float(np.dot(vals, vals))
        left -= chunk
    mean = total / draws
    var = max(total_sq / draws - mean * mean, 0.0)
    return BayesRisk(mean, math.sqrt(var / draws), "monte_carlo")


def bayes_risk_classification(
    features: FeatureDist,
    eta: EtaFunc,
    *,
    tol: float = 1e-6,
    mc_draws: int = 10_000_000,
    seed=0,
    method: str | None = None,
) -> BayesRisk:
    """Bayes risk ``E[(1 - |eta(X)|) / 2]`` of a classification world.

    One-dimensional worlds integrate the density against ``(1 - |eta|) / 2``
    exactly up to ``tol``; higher dimensions use ``mc_draws`` Monte Carlo
    draws and report the standard error.
    """
    if eta.max_abs > 1.0:
        raise ValueError("eta out of range for classification")
    if method is None:
        method = "quadrature" if features.dim == 1 else "monte_carlo"
    if method == "quadrature":
        if features.dim != 1:
            raise ValueError("quadrature Bayes risk requires dim == 1")
        return _bayes_quadrature(features, eta, tol)
    if method == "monte_carlo":
        return _bayes_monte_carlo(features, eta, mc_draws, seed)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# excess-risk estimation


@dataclass(frozen=True)
class RiskEstimate:
    """Monte-Carlo risk estimate with its standard error."""

    mean: float
    stderr: float
    n_test: int
    n_trials: int = 1

    def __post_init__(self):
        if not np.isfinite(self.mean):
            raise ValueError("risk mean must be finite")
        if not (np.isfinite(self.stderr) and self.stderr >= 0.0):
            raise ValueError("stderr must be a nonnegative number")


def _stderr(values: np.ndarray) -> float:
    if values.shape[0] < 2:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(values.shape[0]))


def excess_risk_classification(
    predict_fn,
    world,
    n_test: int,
    seed,
    estimator: str = "plugin",
    bayes_risk_value: float | None = None,
) -> RiskEstimate:
    """Excess classification risk of ``predict_fn`` on a fresh test sample.

    The default plug-in form weights each disagreement with the Bayes
    classifier by ``|eta|``, so points where eta vanishes contribute nothing
    no matter the prediction.  ``estimator="error_minus_bayes"`` instead
    samples labels and subtracts the Bayes risk from the empirical error
    rate (supply ``bayes_risk_value`` to skip recomputing it).
    """
    check_positive_int(n_test, "n_test")
    rng = np.random.default_rng(seed)
    X = world.sample_features(n_test, rng)
    e = world.eta_values(X)
    g = np.asarray(predict_fn(X), dtype=float)
    if g.shape != (n_test,):
        raise ValueError(f"predictions must have shape ({n_test},), got {g.shape}")
    if estimator == "plugin":
        values = (g != sign_plus(e)).astype(float) * np.abs(e)
        return RiskEstimate(float(values.mean()), _stderr(values), n_test)
    if estimator == "error_minus_bayes":
        y = labels_from_eta(e, rng)
        if bayes_risk_value is None:
            bayes_risk_value = world.bayes_risk().value
        values = (g != y).astype(float)
        return RiskEstimate(
            float(values.mean()) - float(bayes_risk_value), _stderr(values), n_test
        )
    raise ValueError(f"unknown estimator {estimator!r}")


def excess_risk_regression(predict_fn, world, n_test: int, seed) -> RiskEstimate:
    """Excess regression risk: mean squared distance to eta on a test sample."""
    check_positive_int(n_test, "n_test")
    rng = np.random.default_rng(seed)
    X = world.sample_features(n_test, rng)
    e = world.eta_values(X)
    g = np.asarray(predict_fn(X), dtype=float)
    if g.shape != (n_test,):
        raise ValueError(f"predictions must have shape ({n_test},), got {g.shape}")
    values = (g - e) ** 2
    return RiskEstimate(float(values.mean()), _stderr(values), n_test)
