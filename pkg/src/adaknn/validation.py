"""Shared input checks for estimators, indexes, and the experiment harness."""

from __future__ import annotations

import numpy as np


def as_sample_matrix(X, *, name: str = "X", allow_empty: bool = False) -> np.ndarray:
    """Coerce ``X`` to a 2-d float array of shape (n_samples, n_features).

    1-d input is treated as n samples in one dimension.  Non-finite entries
    are rejected.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError(f"{name} must be a 1-d or 2-d array, got ndim={X.ndim}")
    if X.shape[0] == 0 and not allow_empty:
        raise ValueError("empty training set")
    if not np.all(np.isfinite(X)):
        raise ValueError("invalid coordinate")
    return np.ascontiguousarray(X)


def as_query_vector(x, dim: int) -> np.ndarray:
    """Coerce a single query point to a 1-d float array of length ``dim``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.ndim != 1 or x.shape[0] != dim:
        raise ValueError(f"query must be a vector of length {dim}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("invalid coordinate")
    return x


def as_label_vector(y, n_samples: int) -> np.ndarray:
    """Coerce labels to a 1-d float array matching the training set length."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError(f"labels must be 1-d, got ndim={y.ndim}")
    if y.shape[0] != n_samples:
        raise ValueError(f"expected {n_samples} labels, got {y.shape[0]}")
    if not np.all(np.isfinite(y)):
        raise ValueError("labels must be finite")
    return y


def as_classification_labels(y, n_samples: int) -> np.ndarray:
    """Validate that every label is -1 or +1."""
    y = as_label_vector(y, n_samples)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("classification labels must be -1 or +1")
    return y


def check_positive_int(value, name: str) -> int:
    if not (isinstance(value, (int, np.integer)) and not isinstance(value, bool)):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < 1:
        raise ValueError(f"{name} must be >= 1, got {value}")
    return int(value)
