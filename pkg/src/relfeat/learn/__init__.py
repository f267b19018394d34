from relfeat.learn.logreg import LinearModel, predict, predict_proba, train_logreg_ova
from relfeat.learn.selection import (
    C_GRID,
    MajorityClassifier,
    cv_scores,
    grid_search_C,
    majority_baseline,
    micro_accuracy,
    stratified_folds,
)
from relfeat.learn.wvrn import WvrnParams, wvrn_relaxation_labeling

__all__ = [
    "C_GRID",
    "LinearModel",
    "MajorityClassifier",
    "WvrnParams",
    "cv_scores",
    "grid_search_C",
    "majority_baseline",
    "micro_accuracy",
    "predict",
    "predict_proba",
    "stratified_folds",
    "train_logreg_ova",
    "wvrn_relaxation_labeling",
]
