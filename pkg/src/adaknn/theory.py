"""Convergence-rate exponents for fixed-k and adaptive-k nearest neighbors.

Every function returns the exponent ``mu`` such that the excess risk of the
method decays like ``N**-mu`` on feature laws whose small-density tail obeys
``P(f(X) <= t) <= C * t**tail`` and (for classification) whose regression
function obeys a margin condition with exponent ``margin``.  Boundary
parameter combinations where the optimal bound picks up an extra ``log N``
factor are reported through :class:`Rate.log_factor` rather than folded into
the exponent.

For regression with an unbounded regression function the same formulas apply
with the second-moment tail exponent (``P`` weighted by ``eta**2``) passed
as ``tail``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "Rate",
    "optimal_growth",
    "adaptive_tradeoff",
    "classification_rate_standard",
    "classification_rate_adaptive",
    "classification_rate_minimax",
    "regression_rate_standard",
    "regression_rate_adaptive",
    "regression_rate_minimax",
    "feature_tail_exponent",
    "EXPERIMENT_MARGIN",
]

#: Margin exponent shared by all the bundled experiment worlds: their
#: regression functions cross zero linearly under feature laws with bounded
#: density, so P(0 < |eta(X)| <= t) grows like t.
EXPERIMENT_MARGIN = 1.0


@dataclass(frozen=True)
class Rate:
    """A risk exponent, plus whether the bound carries a log N factor."""

    exponent: float
    log_factor: bool = False

    def __float__(self) -> float:
        return self.exponent


def _check_dim(dim) -> int:
    if not (isinstance(dim, int) and dim >= 1):
        raise ValueError(f"dim must be an integer >= 1, got {dim!r}")
    return dim


def _check_margin(margin) -> float:
    margin = float(margin)
    if not (math.isfinite(margin) and margin >= 0):
        raise ValueError(f"margin must be a finite number >= 0, got {margin}")
    return margin


def _check_tail(tail) -> float:
    tail = float(tail)
    if not tail > 0:
        raise ValueError(f"tail must be positive, got {tail}")
    return tail


def _at_boundary(a: float, b: float) -> bool:
    # rate formulas switch branch here; tolerate float representation error
    # so e.g. tail=0.8 still matches a boundary computed as 2*(0.4 - 1 ulp)
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=0.0)


def optimal_growth(dim: int) -> float:
    """Ball-count exponent ``4 / (dim + 4)`` maximizing the adaptive rate."""
    return 4.0 / (_check_dim(dim) + 4.0)


def adaptive_tradeoff(growth: float, dim: int) -> float:
    """Estimation exponent ``min(growth/2, 2*(1-growth)/dim)`` of the adaptive rule.

    The first branch is the vote-concentration cost of using
    ``k ~ n**growth`` neighbors, the second the bias cost of the ball the
    neighbors span; the best ``growth`` balances them.
    """
    _check_dim(dim)
    growth = float(growth)
    if not (0.0 < growth < 1.0):
        raise ValueError(f"growth must lie in (0, 1), got {growth}")
    return min(growth / 2.0, 2.0 * (1.0 - growth) / dim)


def classification_rate_standard(margin: float, tail: float, dim: int) -> Rate:
    """Excess-risk exponent of fixed-k classification at its best k schedule."""
    margin = _check_margin(margin)
    tail = _check_tail(tail)
    dim = _check_dim(dim)
    if math.isinf(tail):
        return Rate(min((margin + 1.0) / 2.0, 2.0 * (margin + 1.0) / (dim + 4.0)))
    light = tail * (margin + 1.0) / (2.0 * tail + margin + 1.0)
    heavy = 2.0 * tail * (margin + 1.0) / (tail * dim + 2.0 * (margin + 2.0 * tail))
    return Rate(min(light, heavy), log_factor=_at_boundary(tail, 2.0 / dim))


def classification_rate_adaptive(
    margin: float, tail: float, dim: int, growth: float | None = None
) -> Rate:
    """Excess-risk exponent of adaptive-k classification with ball exponent ``growth``.

    ``growth`` defaults to :func:`optimal_growth`.
    """
    margin = _check_margin(margin)
    tail = _check_tail(tail)
    dim = _check_dim(dim)
    if growth is None:
        growth = optimal_growth(dim)
    lam = adaptive_tradeoff(growth, dim)
    if math.isinf(tail):
        return Rate(lam * (margin + 1.0))
    rate = min(lam * tail * (margin + 1.0) / (lam * margin + tail), tail)
    return Rate(rate, log_factor=_at_boundary(tail, lam))


def classification_rate_minimax(margin: float, tail: float, dim: int) -> Rate:
    """Best exponent any classifier can achieve over the whole (margin, tail) class."""
    margin = _check_margin(margin)
    tail = _check_tail(tail)
    dim = _check_dim(dim)
    infinite_tail = math.isinf(tail)
    condition = (
        2.0 * margin - dim <= 0
        if infinite_tail
        else tail * (2.0 * margin - dim) <= 2.0 * margin
    )
    if not condition:
        raise ValueError(
            "margin/tail combination outside the class: "
            "need tail * (2*margin - dim) <= 2*margin"
        )
    heavy = (
        2.0 * (margin + 1.0) / (dim + 4.0)
        if infinite_tail
        else 2.0 * tail * (margin + 1.0) / (tail * dim + 2.0 * (margin + 2.0 * tail))
    )
    return Rate(min(tail, heavy))


def regression_rate_standard(tail: float, dim: int) -> Rate:
    """Mean-squared-error exponent of fixed-k regression at its best k schedule."""
    tail = _check_tail(tail)
    dim = _check_dim(dim)
    if math.isinf(tail) or tail > 4.0 / dim:
        return Rate(4.0 / (dim + 4.0))
    return Rate(tail / (tail + 1.0), log_factor=_at_boundary(tail, 4.0 / dim))


def regression_rate_adaptive(
    tail: float, dim: int, growth: float | None = None
) -> Rate:
    """Mean-squared-error exponent of adaptive-k regression."""
    tail = _check_tail(tail)
    dim = _check_dim(dim)
    if growth is None:
        growth = optimal_growth(dim)
    lam = adaptive_tradeoff(growth, dim)
    if math.isinf(tail):
        return Rate(2.0 * lam)
    return Rate(min(tail, 2.0 * lam), log_factor=_at_boundary(tail, 2.0 * lam))


def regression_rate_minimax(tail: float, dim: int) -> Rate:
    """Best exponent any regression method can achieve over the tail class."""
    tail = _check_tail(tail)
    dim = _check_dim(dim)
    if math.isinf(tail):
        return Rate(4.0 / (dim + 4.0))
    return Rate(min(4.0 / (dim + 4.0), tail))


# -- small-density tail exponents of the bundled feature laws -------------------

_TAIL = {
    "uniform": math.inf,
    "gaussian": 1.0,
    "laplace": 1.0,
    "cauchy": 0.5,
}


def feature_tail_exponent(kind: str, nu: float | None = None, strong: bool = False):
    """Tail exponent of a bundled feature law, per coordinate-law kind.

    With ``strong=True`` returns the second-moment variant used for
    unbounded regression functions, or None when the law has no finite
    second moment (Student t with nu <= 2, Cauchy).
    """
    if kind == "student_t":
        if nu is None or not nu > 0:
            raise ValueError("student_t needs a positive nu")
        weak = nu / (nu + 1.0)
        if not strong:
            return weak
        return weak if nu > 2 else None
    if kind not in _TAIL:
        raise ValueError(f"unknown feature kind {kind!r}")
    weak = _TAIL[kind]
    if not strong:
        return weak
    return None if kind == "cauchy" else weak
