"""Esports win prediction: hero-draft and sliding-window in-game features,
ridge logistic regression, random forests, feature-subset selection, and an
evaluation CLI."""

from .errors import WinPredError
from .evaluation import (
    Chronological,
    EvalReport,
    QuadrantStats,
    RunConfig,
    TournamentHoldout,
    evaluate,
    quadrant_stats,
    split_matches,
    sweep,
    train_model,
)
from .featurize import (
    HeroVector,
    WindowVector,
    build_hero_dataset,
    build_window_dataset,
    hero_vector,
    window_vector,
)
from .forest import RfConfig, RfModel, predict_rf, train_rf
from .logistic import LrConfig, LrModel, predict_label, predict_proba, train_lr
from .matchdata import (
    MatchDataset,
    MatchOutcome,
    MatchRecord,
    MetricSample,
    SynthConfig,
    duration_histogram,
    load_matches,
    load_metrics,
    sort_chronological,
    synthesize,
)
from .selection import (
    CfsEvaluator,
    FeatureSubset,
    SearchConfig,
    best_first_search,
    cfs_merit,
    feature_class_correlation,
    select_features,
    wrapper_score,
)

__version__ = "0.1.0"

__all__ = [
    "WinPredError",
    "Chronological", "EvalReport", "QuadrantStats", "RunConfig", "TournamentHoldout",
    "evaluate", "quadrant_stats", "split_matches", "sweep", "train_model",
    "HeroVector", "WindowVector", "build_hero_dataset", "build_window_dataset",
    "hero_vector", "window_vector",
    "RfConfig", "RfModel", "predict_rf", "train_rf",
    "LrConfig", "LrModel", "predict_label", "predict_proba", "train_lr",
    "MatchDataset", "MatchOutcome", "MatchRecord", "MetricSample", "SynthConfig",
    "duration_histogram", "load_matches", "load_metrics", "sort_chronological", "synthesize",
    "CfsEvaluator", "FeatureSubset", "SearchConfig", "best_first_search", "cfs_merit",
    "feature_class_correlation", "select_features", "wrapper_score",
    "__version__",
]
