"""k-nearest-neighbor prediction with a fixed or locally adaptive neighbor count.

Two prediction rules share all machinery:

* fixed ``k``: the classical rule, averaging the labels of the ``k`` nearest
  training points;
* adaptive ``k``: the neighbor count at a query ``x`` is
  ``floor(scale * n(x)**growth) + 1`` where ``n(x)`` counts training points
  inside the closed ball of a fixed ``radius`` around ``x``.  Dense regions
  get many neighbors, sparse regions few, which is what rescues the rule on
  heavy-tailed feature laws.

Classification averages ±1 labels and takes the sign (an exact zero vote
maps to +1); regression returns the average itself.  ``KNNClassifier`` and
``KNNRegressor`` wrap the rules in scikit-learn estimator conventions, and
``predict_classification`` / ``predict_regression`` expose a transparent
single-point path used as the reference in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.exceptions import NotFittedError

from . import validation
from .index import EUCLIDEAN, NORMS, SpatialIndex

__all__ = [
    "FixedK",
    "AdaptiveK",
    "Prediction",
    "adaptive_k",
    "predict_classification",
    "predict_regression",
    "schedule_exponent",
    "standard_k_schedule",
    "KNNClassifier",
    "KNNRegressor",
]


@dataclass(frozen=True)
class FixedK:
    """Use the same neighbor count ``k`` at every query."""

    k: int

    def __post_init__(self):
        validation.check_positive_int(self.k, "k")


@dataclass(frozen=True)
class AdaptiveK:
    """Pick ``k = floor(scale * n**growth) + 1`` from the local ball count ``n``.

    ``n`` is the number of training points within ``radius`` of the query
    (closed ball, same norm as the neighbor search).
    """

    scale: float = 1.0
    growth: float = 0.8
    radius: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"scale must be positive, got {self.scale}")
        if not (0.0 < self.growth < 1.0):
            raise ValueError(f"growth must lie in (0, 1), got {self.growth}")
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"radius must be positive, got {self.radius}")


def adaptive_k(n_in_ball: int, scale: float, growth: float) -> int:
    """Neighbor count ``floor(scale * n**growth) + 1`` for ball count ``n``.

    Always at least 1 (an empty ball still yields one neighbor), and
    nondecreasing in ``n_in_ball``.
    """
    if n_in_ball < 0:
        raise ValueError(f"n_in_ball must be >= 0, got {n_in_ball}")
    return int(math.floor(scale * float(n_in_ball) ** growth)) + 1


def _adaptive_k_vec(n_in_ball: np.ndarray, scale: float, growth: float) -> np.ndarray:
    return np.floor(scale * n_in_ball.astype(float) ** growth).astype(np.intp) + 1


@dataclass(frozen=True)
class Prediction:
    """One prediction with its bookkeeping.

    ``value`` is the neighbor-label average; ``label`` is its sign for
    classification (+1 on a tied vote) and None for regression;
    ``n_in_ball`` is None for the fixed rule.
    """

    value: float
    label: int | None
    k_used: int
    n_in_ball: int | None


def _resolve_k(index: SpatialIndex, selector, x) -> tuple[int, int | None]:
    if isinstance(selector, FixedK):
        k, n_ball = selector.k, None
    elif isinstance(selector, AdaptiveK):
        n_ball = index.count_within(x, selector.radius)
        k = adaptive_k(n_ball, selector.scale, selector.growth)
    else:
        raise TypeError(f"selector must be FixedK or AdaptiveK, got {selector!r}")
    return min(k, len(index)), n_ball


def predict_regression(index: SpatialIndex, labels, selector, x) -> Prediction:
    """Average of the selected neighbors' labels at a single query point."""
    labels = validation.as_label_vector(labels, len(index))
    k_used, n_ball = _resolve_k(index, selector, x)
    neighbors = index.knn(x, k_used)
    value = float(labels[neighbors.indices].mean())
    return Prediction(value=value, label=None, k_used=k_used, n_in_ball=n_ball)


def predict_classification(index: SpatialIndex, labels, selector, x) -> Prediction:
    """Majority vote (±1 labels) at a single query point; ties go to +1."""
    labels = validation.as_classification_labels(labels, len(index))
    k_used, n_ball = _resolve_k(index, selector, x)
    neighbors = index.knn(x, k_used)
    value = float(labels[neighbors.indices].mean())
    label = 1 if value >= 0.0 else -1
    return Prediction(value=value, label=label, k_used=k_used, n_in_ball=n_ball)


# -- theoretically optimal growth of k with the sample size --------------------

_PROBLEMS = ("classification", "regression", "regression_unbounded")


def schedule_exponent(
    problem: str, tail: float, dim: int, margin: float | None = None
) -> float:
    """Exponent ``e`` of the risk-optimal neighbor-count schedule ``k ~ N**e``.

    ``tail`` is the small-density exponent of the feature law (use the
    second-moment variant for unbounded regression functions), ``margin``
    the classification margin exponent.
    """
    dim = validation.check_positive_int(dim, "dim")
    if not tail > 0:
        raise ValueError(f"tail must be positive, got {tail}")
    if problem == "classification":
        if margin is None or not (np.isfinite(margin) and margin >= 0):
            raise ValueError("classification schedule needs a margin exponent >= 0")
        if math.isinf(tail):
            return 4.0 / (dim + 4.0)
        if tail <= 2.0 / dim:
            return 2.0 * tail / (2.0 * tail + margin + 1.0)
        return 4.0 * tail / (2.0 * margin + tail * (dim + 4.0))
    if problem in ("regression", "regression_unbounded"):
        if math.isinf(tail) or tail > 4.0 / dim:
            return 4.0 / (dim + 4.0)
        return tail / (tail + 1.0)
    raise ValueError(f"problem must be one of {_PROBLEMS}, got {problem!r}")


def standard_k_schedule(
    n_train: int,
    problem: str,
    tail: float,
    dim: int,
    margin: float | None = None,
    constant: float = 1.0,
) -> int:
    """Neighbor count ``round(constant * N**e)`` clamped to [1, N].

    ``e`` comes from :func:`schedule_exponent`; rounding is half-up so the
    schedule is reproducible across platforms.
    """
    n_train = validation.check_positive_int(n_train, "n_train")
    if not (np.isfinite(constant) and constant > 0):
        raise ValueError(f"constant must be positive, got {constant}")
    e = schedule_exponent(problem, tail, dim, margin)
    k = int(math.floor(constant * n_train**e + 0.5))
    return min(max(k, 1), n_train)


# -- scikit-learn style wrappers ----------------------------------------------


class _KNNBase(BaseEstimator):
    def __init__(self, selector=FixedK(5), norm=EUCLIDEAN):
        self.selector = selector
        self.norm = norm

    def fit(self, X, y):
        """Store the training set behind a spatial index.

        ``X`` is (n_samples, n_features); ``y`` holds one label per row.
        Returns self.
        """
        X = validation.as_sample_matrix(X)
        if self.norm not in NORMS:
            raise ValueError(f"unknown norm {self.norm!r}; expected one of {NORMS}")
        if not isinstance(self.selector, (FixedK, AdaptiveK)):
            raise TypeError(
                f"selector must be FixedK or AdaptiveK, got {self.selector!r}"
            )
        self.y_ = self._check_labels(y, X.shape[0])
        self.index_ = SpatialIndex(X, self.norm)
        self.n_features_in_ = X.shape[1]
        return self

    def _check_labels(self, y, n):  # pragma: no cover - overridden
        raise NotImplementedError

    def _check_ready(self, X):
        if not hasattr(self, "index_"):
            raise NotFittedError(
                f"this {type(self).__name__} instance is not fitted yet; call fit first"
            )
        Q = validation.as_sample_matrix(X, name="X", allow_empty=True)
        if Q.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {Q.shape[1]} features, but the estimator was fitted with "
                f"{self.n_features_in_}"
            )
        return Q

    def _neighbor_means(self, Q: np.ndarray) -> np.ndarray:
        """Vectorized neighbor-label averages at each query row."""
        n = len(self.index_)
        if Q.shape[0] == 0:
            return np.empty(0)
        if isinstance(self.selector, FixedK):
            _, I = self.index_.knn_batch(Q, min(self.selector.k, n))
            return self.y_[I].mean(axis=1)
        counts = self.index_.count_within_batch(Q, self.selector.radius)
        ks = _adaptive_k_vec(counts, self.selector.scale, self.selector.growth)
        _, I, k_eff = self.index_.knn_batch_var(Q, np.minimum(ks, n))
        sums = np.cumsum(self.y_[I], axis=1)
        picked = np.take_along_axis(sums, (k_eff - 1).reshape(-1, 1), axis=1)[:, 0]
        return picked / k_eff


class KNNRegressor(RegressorMixin, _KNNBase):
    """Nearest-neighbor regression: predictions average neighbor labels."""

    def _check_labels(self, y, n):
        return validation.as_label_vector(y, n)

    def predict(self, X):
        Q = self._check_ready(X)
        return self._neighbor_means(Q)


class KNNClassifier(ClassifierMixin, _KNNBase):
    """Nearest-neighbor plug-in classifier for ±1 labels."""

    def _check_labels(self, y, n):
        y = validation.as_classification_labels(y, n)
        self.classes_ = np.array([-1.0, 1.0])
        return y

    def decision_function(self, X):
        """Neighbor-label average in [-1, 1]; the predicted label is its sign."""
        Q = self._check_ready(X)
        return self._neighbor_means(Q)

    def predict(self, X):
        votes = self.decision_function(X)
        return np.where(votes >= 0.0, 1.0, -1.0)
