import numpy as np
import pytest


def brute_distances(points, query, norm):
    """Reference distances, computed independently of the index internals."""
    diff = np.asarray(points, dtype=float) - np.asarray(query, dtype=float)
    if norm == "euclidean":
        return np.sqrt((diff * diff).sum(axis=1))
    return np.abs(diff).max(axis=1)


def brute_knn(points, query, k, norm):
    """k nearest by linear scan, ties broken by ascending index."""
    d = brute_distances(points, query, norm)
    k = min(k, len(points))
    order = np.lexsort((np.arange(len(points)), d))[:k]
    return order, d[order]


def brute_count_within(points, query, radius, norm):
    return int((brute_distances(points, query, norm) <= radius).sum())


@pytest.fixture
def rng():
    return np.random.default_rng(20260819)
