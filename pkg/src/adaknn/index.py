"""Exact nearest-neighbor queries under the Euclidean or max norm.

The index wraps a k-d tree and fixes the parts the tree leaves unspecified:
distance ties are broken by ascending training index, balls are closed
(points at distance exactly ``radius`` count), and results are exact — the
tree only accelerates candidate collection, the final ranking is recomputed
with plain vectorized arithmetic so that a brute-force linear scan gives
bit-identical answers.

Training data is copied on construction and never mutated afterwards;
queries have no side effects on the index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .validation import as_query_vector, as_sample_matrix, check_positive_int

EUCLIDEAN = "euclidean"
MAX_NORM = "max"
NORMS = (EUCLIDEAN, MAX_NORM)

# Extra neighbors fetched in batch queries so that distance ties crossing the
# k-th position can be re-ranked without a second tree pass.
_TIE_PAD = 8
# Relative slack when collecting boundary candidates; covers any last-ulp
# disagreement between the tree's arithmetic and ours.
_TIE_SLACK = 1e-9


def _norm_p(norm: str) -> float:
    if norm == EUCLIDEAN:
        return 2.0
    if norm == MAX_NORM:
        return np.inf
    raise ValueError(f"unknown norm {norm!r}; expected one of {NORMS}")


def distances_to(points: np.ndarray, query: np.ndarray, norm: str) -> np.ndarray:
    """Distances from ``query`` to each row of ``points``."""
    diff = points - query
    if norm == EUCLIDEAN:
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    if norm == MAX_NORM:
        return np.abs(diff).max(axis=1)
    raise ValueError(f"unknown norm {norm!r}; expected one of {NORMS}")


@dataclass(frozen=True)
class NeighborSet:
    """Result of a k-nearest-neighbor query.

    ``indices`` are training-row indices ordered by (distance, index);
    ``distances`` are the matching distances, nondecreasing.
    """

    indices: np.ndarray
    distances: np.ndarray

    @property
    def radius(self) -> float:
        """Distance to the farthest returned neighbor."""
        return float(self.distances[-1])

    def __len__(self) -> int:
        return len(self.indices)


class SpatialIndex:
    """Immutable exact-neighbor index over a fixed training set.

    Parameters
    ----------
    points : array-like of shape (n, d)
        Training points.  Copied; later mutation of the input does not
        affect the index.
    norm : {"euclidean", "max"}
        Distance used by every query.
    """

    def __init__(self, points, norm: str = EUCLIDEAN):
        pts = as_sample_matrix(points, name="points").copy()
        pts.flags.writeable = False
        self._p = _norm_p(norm)
        self.norm = norm
        self._points = pts
        self._tree = cKDTree(pts, copy_data=False)

    @property
    def points(self) -> np.ndarray:
        """Read-only view of the training points."""
        return self._points

    @property
    def dim(self) -> int:
        return self._points.shape[1]

    def __len__(self) -> int:
        return self._points.shape[0]

    # -- single-query API ---------------------------------------------------

    def knn(self, query, k: int) -> NeighborSet:
        """The ``k`` nearest training points to ``query``.

        ``k`` larger than the training size is clamped to it.  Ties are
        broken by ascending training index.
        """
        q = as_query_vector(query, self.dim)
        k = check_positive_int(k, "k")
        n = len(self)
        k_eff = min(k, n)
        dist, _ = self._tree.query(q, k=k_eff, p=self._p)
        rho = float(np.max(dist))
        cand = self._tree.query_ball_point(q, rho * (1.0 + _TIE_SLACK), p=self._p)
        cand = np.asarray(cand, dtype=np.intp)
        d_cand = distances_to(self._points[cand], q, self.norm)
        order = np.lexsort((cand, d_cand))[:k_eff]
        idx = cand[order]
        return NeighborSet(indices=idx, distances=d_cand[order])

    def kth_distance(self, query, k: int) -> float:
        """Distance from ``query`` to its k-th nearest training point."""
        return self.knn(query, k).radius

    def count_within(self, query, radius: float) -> int:
        """Number of training points with distance <= ``radius`` (closed ball)."""
        q = as_query_vector(query, self.dim)
        radius = float(radius)
        if not radius >= 0.0:
            raise ValueError(f"radius must be nonnegative, got {radius}")
        if np.isinf(radius):
            return len(self)
        cand = self._tree.query_ball_point(q, radius * (1.0 + _TIE_SLACK), p=self._p)
        if not cand:
            return 0
        cand = np.asarray(cand, dtype=np.intp)
        d_cand = distances_to(self._points[cand], q, self.norm)
        return int(np.count_nonzero(d_cand <= radius))

    # -- batch API ------------------------------------------------------------

    def knn_batch(self, queries, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized :meth:`knn` over the rows of ``queries``.

        Returns ``(distances, indices)`` of shape (n_queries, min(k, n)),
        each row ordered by (distance, training index) exactly as the
        single-query method orders it.
        """
        Q = as_sample_matrix(queries, name="queries", allow_empty=True)
        if Q.shape[1] != self.dim:
            raise ValueError(f"queries must have {self.dim} columns, got {Q.shape[1]}")
        k = check_positive_int(k, "k")
        k_eff = min(k, len(self))
        if Q.shape[0] == 0:
            return np.empty((0, k_eff)), np.empty((0, k_eff), dtype=np.intp)
        D, I = self._window_query(Q, np.full(Q.shape[0], k_eff, dtype=np.intp), k_eff)
        return D[:, :k_eff], I[:, :k_eff]

    def knn_batch_var(self, queries, ks) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Batch neighbor query with a per-row neighbor count.

        Returns ``(distances, indices, k_eff)`` where the arrays hold at
        least ``max(k_eff)`` columns and row ``i`` is valid through column
        ``k_eff[i] - 1``.  ``ks`` is clamped to the training size.
        """
        Q = as_sample_matrix(queries, name="queries", allow_empty=True)
        if Q.shape[1] != self.dim:
            raise ValueError(f"queries must have {self.dim} columns, got {Q.shape[1]}")
        ks = np.asarray(ks, dtype=np.intp)
        if ks.shape != (Q.shape[0],):
            raise ValueError("ks must have one entry per query row")
        if Q.shape[0] == 0:
            return (np.empty((0, 0)), np.empty((0, 0), dtype=np.intp), ks)
        if np.any(ks < 1):
            raise ValueError("every k must be >= 1")
        k_eff = np.minimum(ks, len(self))
        k_max = int(k_eff.max())
        D, I = self._window_query(Q, k_eff, k_max)
        return D, I, k_eff

    def _window_query(self, Q, k_eff, k_max):
        """Tree query over a padded window with deterministic tie order.

        Fetches ``k_max + _TIE_PAD`` neighbors, re-sorts each row by
        (distance, index), and falls back to the exact single-query path for
        the rare rows whose boundary tie group may extend past the window.
        """
        n = len(self)
        pad = min(k_max + _TIE_PAD, n)
        D, I = self._tree.query(Q, k=pad, p=self._p)
        if pad == 1:
            D = D.reshape(-1, 1)
            I = I.reshape(-1, 1)
        # re-derive distances from coordinates: the tree's own values can
        # differ from distances_to in the last ulp, and ties must sort on
        # the same numbers the single-query path uses
        diff = self._points[I] - Q[:, None, :]
        if self.norm == EUCLIDEAN:
            D = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        else:
            D = np.abs(diff).max(axis=2)
        order = np.lexsort((I, D))
        D = np.take_along_axis(D, order, axis=1)
        I = np.take_along_axis(I, order, axis=1)
        if pad < n:
            # A row is only ambiguous when its boundary tie group may extend
            # past the fetched window, i.e. the window's last distance still
            # equals the row's k-th distance.
            boundary = np.take_along_axis(D, (k_eff - 1).reshape(-1, 1), axis=1)[:, 0]
            unresolved = np.flatnonzero(D[:, pad - 1] <= boundary)
        else:
            unresolved = ()
        for row in unresolved:
            nb = self.knn(Q[row], int(k_eff[row]))
            D[row, : len(nb)] = nb.distances
            I[row, : len(nb)] = nb.indices
        return D, I

    def count_within_batch(self, queries, radius: float) -> np.ndarray:
        """Vectorized :meth:`count_within` over the rows of ``queries``."""
        Q = as_sample_matrix(queries, name="queries", allow_empty=True)
        if Q.shape[1] != self.dim:
            raise ValueError(f"queries must have {self.dim} columns, got {Q.shape[1]}")
        radius = float(radius)
        if not radius >= 0.0:
            raise ValueError(f"radius must be nonnegative, got {radius}")
        if np.isinf(radius):
            return np.full(Q.shape[0], len(self), dtype=np.intp)
        counts = self._tree.query_ball_point(
            Q, radius * (1.0 + _TIE_SLACK), p=self._p, return_length=True
        )
        counts = np.asarray(counts, dtype=np.intp)
        # The slack can only pull in points just beyond the radius; recount
        # exactly for rows where the inflated and nominal balls could differ.
        exact = self._tree.query_ball_point(Q, radius, p=self._p, return_length=True)
        exact = np.asarray(exact, dtype=np.intp)
        differs = np.flatnonzero(counts != exact)
        for row in differs:
            counts[row] = self.count_within(Q[row], radius)
        return counts
