"""Model selection and evaluation helpers."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from relfeat.errors import InputError
from relfeat.learn.logreg import _as_matrix, predict, train_logreg_ova

logger = logging.getLogger(__name__)

C_GRID = (0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)
DEFAULT_FOLDS = 3


def micro_accuracy(pred: Sequence, truth: Sequence) -> float:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise InputError(f"length mismatch: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise InputError("cannot score an empty prediction")
    return float((pred == truth).mean())


@dataclass(frozen=True)
class MajorityClassifier:
    label: object

    def predict(self, n: int) -> np.ndarray:
        return np.full(n, self.label)


def majority_baseline(y_train: Sequence) -> MajorityClassifier:
    """Constant predictor for the most frequent training label (lowest on ties)."""
    values, counts = np.unique(np.asarray(y_train), return_counts=True)
    if values.size == 0:
        raise InputError("no training labels")
    return MajorityClassifier(values[int(np.argmax(counts))].item())


def stratified_folds(y: Sequence, folds: int, seed=None) -> tuple[np.ndarray, int]:
    """Fold id per row, dealing each class's shuffled members round-robin.

    Returns ``(fold_ids, folds)``; ``folds`` shrinks (not below 2) when the
    smallest class cannot populate every fold.
    """
    y = np.asarray(y)
    if folds < 2:
        raise InputError("need at least 2 folds")
    classes, counts = np.unique(y, return_counts=True)
    smallest = int(counts.min())
    if smallest < folds:
        reduced = max(2, smallest)
        if reduced != folds:
            logger.warning("smallest class has %d members; using %d folds instead of %d", smallest, reduced, folds)
        folds = reduced
    rng = np.random.default_rng(seed)
    fold_ids = np.empty(len(y), dtype=np.int64)
    offset = 0
    for cls in classes:
        members = rng.permutation(np.flatnonzero(y == cls))
        fold_ids[members] = (offset + np.arange(len(members))) % folds
        offset += len(members)
    return fold_ids, folds


def cv_scores(X, y: Sequence, grid: Sequence[float] = C_GRID, folds: int = DEFAULT_FOLDS, seed=None) -> list[float]:
    """Pooled (micro) cross-validated accuracy for each C in ``grid``."""
    X = _as_matrix(X)
    y = np.asarray(y)
    fold_ids, folds = stratified_folds(y, folds, seed)
    classes = np.unique(y)
    grid = list(grid)
    correct = dict.fromkeys(grid, 0)
    for f in range(folds):
        test = fold_ids == f
        Xtr, ytr = X[~test], y[~test]
        # ascending C, each fit warm-started from the previous solution
        model = None
        for C in sorted(set(grid)):
            model = train_logreg_ova(Xtr, ytr, C, classes=classes, warm_start=model)
            correct[C] += int((predict(model, X[test]) == y[test]).sum())
    return [correct[C] / len(y) for C in grid]


def grid_search_C(X, y: Sequence, grid: Sequence[float] = C_GRID, folds: int = DEFAULT_FOLDS, seed=None) -> float:
    """Best C by stratified cross-validation; ties go to the smaller C."""
    grid = list(grid)
    if not grid:
        raise InputError("empty C grid")
    if len(grid) == 1:
        return float(grid[0])
    scores = cv_scores(X, y, grid, folds, seed)
    best = max(range(len(grid)), key=lambda k: (scores[k], -grid[k]))
    return float(grid[best])
