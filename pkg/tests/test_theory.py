"""Rate formulas pinned against hand-computed values and ordering laws."""

import math

import numpy as np
import pytest

from adaknn.theory import (
    EXPERIMENT_MARGIN,
    Rate,
    adaptive_tradeoff,
    classification_rate_adaptive,
    classification_rate_minimax,
    classification_rate_standard,
    feature_tail_exponent,
    optimal_growth,
    regression_rate_adaptive,
    regression_rate_minimax,
    regression_rate_standard,
)


def test_optimal_growth():
    assert optimal_growth(1) == pytest.approx(0.8)
    assert optimal_growth(2) == pytest.approx(2.0 / 3.0)
    assert optimal_growth(4) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        optimal_growth(0)


def test_adaptive_tradeoff_values_and_peak():
    assert adaptive_tradeoff(0.8, 1) == pytest.approx(0.4)
    assert adaptive_tradeoff(0.5, 2) == pytest.approx(0.25)
    assert adaptive_tradeoff(0.2, 4) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        adaptive_tradeoff(0.0, 1)
    with pytest.raises(ValueError):
        adaptive_tradeoff(1.0, 1)
    # the optimal growth exponent maximizes the tradeoff
    for d in (1, 2, 3, 5, 10):
        best = adaptive_tradeoff(optimal_growth(d), d)
        for q in np.linspace(0.05, 0.95, 37):
            assert adaptive_tradeoff(float(q), d) <= best + 1e-12


def test_classification_standard_pinned():
    # (margin, tail, d) -> exponent
    assert float(classification_rate_standard(1, 1, 1)) == pytest.approx(0.5)
    assert float(classification_rate_standard(1, 5 / 6, 1)) == pytest.approx(5 / 11)
    assert float(classification_rate_standard(1, 2 / 3, 1)) == pytest.approx(0.4)
    assert float(classification_rate_standard(1, 1, 2)) == pytest.approx(0.5)
    assert float(classification_rate_standard(1, 0.5, 1)) == pytest.approx(1 / 3)


def test_classification_adaptive_pinned():
    assert float(classification_rate_adaptive(1, 1, 1)) == pytest.approx(4 / 7)
    assert float(classification_rate_adaptive(1, 5 / 6, 1)) == pytest.approx(20 / 37)
    assert float(classification_rate_adaptive(1, 2 / 3, 1)) == pytest.approx(0.5)
    assert float(classification_rate_adaptive(1, 1, 2)) == pytest.approx(0.5)
    # explicit growth overrides the optimum
    r = classification_rate_adaptive(1, 1, 1, growth=0.5)
    lam = adaptive_tradeoff(0.5, 1)  # 0.25
    assert float(r) == pytest.approx(min(lam * 2 / (lam + 1), 1.0))


def test_classification_adaptive_log_flag_at_boundary():
    # log factor exactly when tail == tradeoff
    lam = adaptive_tradeoff(0.8, 1)  # 0.4
    assert classification_rate_adaptive(1, lam, 1, growth=0.8).log_factor
    assert not classification_rate_adaptive(1, lam + 0.01, 1, growth=0.8).log_factor


def test_classification_standard_log_flag():
    # log factor at tail == 2/d
    assert classification_rate_standard(1, 2.0, 1).log_factor
    assert not classification_rate_standard(1, 1.0, 1).log_factor


def test_classification_minimax():
    assert float(classification_rate_minimax(1, 1, 1)) == pytest.approx(4 / 7)
    # the precondition tail*(2*margin - d) <= 2*margin fails for large tail
    with pytest.raises(ValueError, match="outside the class"):
        classification_rate_minimax(1.0, 3.0, 1)
    # adaptive matches minimax at the optimal growth wherever both exist
    for tail in (0.5, 2 / 3, 5 / 6, 1.0):
        for d in (1, 2, 3):
            if tail * (2 - d) <= 2:
                assert float(classification_rate_adaptive(1, tail, d)) == pytest.approx(
                    float(classification_rate_minimax(1, tail, d))
                )


def test_regression_standard_pinned():
    assert float(regression_rate_standard(1, 1)) == pytest.approx(0.5)
    assert float(regression_rate_standard(2 / 3, 1)) == pytest.approx(0.4)
    assert float(regression_rate_standard(0.5, 1)) == pytest.approx(1 / 3)
    assert float(regression_rate_standard(5.0, 1)) == pytest.approx(0.8)
    assert regression_rate_standard(4.0, 1).log_factor  # boundary tail == 4/d
    assert float(regression_rate_standard(1, 2)) == pytest.approx(0.5)
    assert float(regression_rate_standard(1, 3)) == pytest.approx(0.5)


def test_regression_adaptive_pinned():
    assert float(regression_rate_adaptive(1, 1)) == pytest.approx(0.8)
    assert float(regression_rate_adaptive(2 / 3, 1)) == pytest.approx(2 / 3)
    assert float(regression_rate_adaptive(0.5, 1)) == pytest.approx(0.5)
    assert float(regression_rate_adaptive(1, 2)) == pytest.approx(2 / 3)
    assert float(regression_rate_adaptive(1, 3)) == pytest.approx(4 / 7)
    # log factor exactly at tail == 2 * tradeoff
    assert regression_rate_adaptive(0.8, 1).log_factor
    assert not regression_rate_adaptive(0.81, 1).log_factor


def test_regression_minimax():
    assert float(regression_rate_minimax(1, 1)) == pytest.approx(0.8)
    assert float(regression_rate_minimax(0.5, 1)) == pytest.approx(0.5)
    assert float(regression_rate_minimax(10, 1)) == pytest.approx(0.8)
    # adaptive at the optimal growth achieves the minimax exponent
    for tail in (0.3, 0.5, 1.0, 2.0, 10.0):
        for d in (1, 2, 4):
            assert float(regression_rate_adaptive(tail, d)) == pytest.approx(
                float(regression_rate_minimax(tail, d))
            )


def test_uniform_tail_limits():
    # bounded support with density bounded away from zero: tail -> infinity,
    # and every formula must settle on its algebraic limit rather than nan
    assert float(classification_rate_standard(1, math.inf, 1)) == pytest.approx(0.8)
    assert float(classification_rate_adaptive(1, math.inf, 1)) == pytest.approx(0.8)
    assert float(regression_rate_standard(math.inf, 1)) == pytest.approx(0.8)
    assert float(regression_rate_adaptive(math.inf, 1)) == pytest.approx(0.8)
    assert float(regression_rate_minimax(math.inf, 2)) == pytest.approx(2 / 3)


def test_input_validation():
    with pytest.raises(ValueError):
        classification_rate_standard(-0.5, 1, 1)
    with pytest.raises(ValueError):
        classification_rate_standard(1, 0, 1)
    with pytest.raises(ValueError):
        classification_rate_standard(1, 1, 0)
    with pytest.raises(ValueError):
        classification_rate_adaptive(1, 1, 1, growth=1.5)
    with pytest.raises(ValueError):
        regression_rate_adaptive(1, 1, growth=0.0)


def test_adaptive_never_below_standard():
    rng = np.random.default_rng(0)
    for _ in range(300):
        margin = float(rng.uniform(0, 3))
        tail = float(rng.uniform(0.1, 4))
        d = int(rng.integers(1, 8))
        std = float(classification_rate_standard(margin, tail, d))
        ada = float(classification_rate_adaptive(margin, tail, d))
        assert ada >= std - 1e-12
        std_r = float(regression_rate_standard(tail, d))
        ada_r = float(regression_rate_adaptive(tail, d))
        assert ada_r >= std_r - 1e-12


def test_rate_dataclass():
    r = Rate(0.5, log_factor=True)
    assert float(r) == 0.5
    assert r.log_factor
    assert Rate(0.4) != Rate(0.5)


def test_feature_tail_exponents():
    assert feature_tail_exponent("uniform") == math.inf
    assert feature_tail_exponent("gaussian") == 1.0
    assert feature_tail_exponent("laplace") == 1.0
    assert feature_tail_exponent("cauchy") == 0.5
    assert feature_tail_exponent("student_t", nu=5) == pytest.approx(5 / 6)
    assert feature_tail_exponent("student_t", nu=2) == pytest.approx(2 / 3)
    # second-moment variant: only laws with finite variance keep an exponent
    assert feature_tail_exponent("laplace", strong=True) == 1.0
    assert feature_tail_exponent("gaussian", strong=True) == 1.0
    assert feature_tail_exponent("student_t", nu=5, strong=True) == pytest.approx(5 / 6)
    assert feature_tail_exponent("student_t", nu=2, strong=True) is None
    assert feature_tail_exponent("cauchy", strong=True) is None
    assert feature_tail_exponent("uniform", strong=True) == math.inf
    with pytest.raises(ValueError):
        feature_tail_exponent("poisson")
    with pytest.raises(ValueError):
        feature_tail_exponent("student_t")  # nu required


def test_experiment_margin_constant():
    assert EXPERIMENT_MARGIN == 1.0
