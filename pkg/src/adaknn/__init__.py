"""Adaptive k-nearest neighbors with ball-count-driven k, plus the
experiment harness that measures its convergence rates against the
standard fixed-k rule on heavy-tailed synthetic worlds.
"""

from .estimators import (
    AdaptiveK,
    FixedK,
    KNNClassifier,
    KNNRegressor,
    Prediction,
    adaptive_k,
    predict_classification,
    predict_regression,
    schedule_exponent,
    standard_k_schedule,
)
from .harness import (
    CSV_HEADER,
    ConfigError,
    ExperimentConfig,
    SweepResult,
    TuningSpec,
    emit_csv,
    fit_rate,
    read_csv,
    sweep,
    tune,
)
from .index import EUCLIDEAN, MAX_NORM, NeighborSet, SpatialIndex
from .lowerbound import CubeFamily, demonstrate_gap, make_cube_world
from .plotting import emit_svg
from .theory import (
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
from .worlds import (
    BayesRisk,
    EtaFunc,
    FeatureDist,
    RiskEstimate,
    WorldSpec,
    bayes_risk_classification,
    excess_risk_classification,
    excess_risk_regression,
    labels_from_eta,
    sign_plus,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveK",
    "BayesRisk",
    "CSV_HEADER",
    "ConfigError",
    "CubeFamily",
    "EUCLIDEAN",
    "EXPERIMENT_MARGIN",
    "EtaFunc",
    "ExperimentConfig",
    "FeatureDist",
    "FixedK",
    "KNNClassifier",
    "KNNRegressor",
    "MAX_NORM",
    "NeighborSet",
    "Prediction",
    "Rate",
    "RiskEstimate",
    "SpatialIndex",
    "SweepResult",
    "TuningSpec",
    "WorldSpec",
    "adaptive_k",
    "adaptive_tradeoff",
    "bayes_risk_classification",
    "classification_rate_adaptive",
    "classification_rate_minimax",
    "classification_rate_standard",
    "demonstrate_gap",
    "emit_csv",
    "emit_svg",
    "excess_risk_classification",
    "excess_risk_regression",
    "feature_tail_exponent",
    "fit_rate",
    "labels_from_eta",
    "make_cube_world",
    "optimal_growth",
    "predict_classification",
    "predict_regression",
    "read_csv",
    "regression_rate_adaptive",
    "regression_rate_minimax",
    "regression_rate_standard",
    "schedule_exponent",
    "sign_plus",
    "sweep",
    "standard_k_schedule",
    "tune",
    "__version__",
]
