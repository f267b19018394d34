from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from relfeat.errors import InputError
from relfeat.graph import UNKNOWN, LabelAssignment

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SplitSpec:
    train: np.ndarray
    test: np.ndarray
    ratio: float
    seed: int


def train_count(n_class: int, ratio: float) -> int:
    """Round-half-up share of a class, kept within [1, n_class - 1] when possible."""
    k = math.floor(ratio * n_class + 0.5)
    if n_class >= 2:
        return min(max(k, 1), n_class - 1)
    return n_class


def class_balanced_split(labels: LabelAssignment, ratio: float, seed: int) -> SplitSpec:
    """Sample ``round(ratio * n_c)`` training nodes from every class.

    Nodes without a label never enter the training side; they are part of
    the test side only if labelled, so they simply drop out of both.
    """
    if not 0.0 < ratio < 1.0:
        raise InputError(f"ratio must lie in (0, 1), got {ratio}")
    rng = np.random.default_rng(seed)
    train = []
    for c in range(labels.n_classes):
        members = np.flatnonzero(labels.y == c)
        if members.size == 0:
            raise InputError(f"class {labels.classes[c]!r} has no members")
        if members.size == 1:
            logger.warning("class %r has a single member; it goes to the training side", labels.classes[c])
        k = train_count(members.size, ratio)
        train.append(rng.permutation(members)[:k])
    train = np.sort(np.concatenate(train))
    known = labels.y != UNKNOWN
    mask = np.zeros(labels.n, dtype=bool)
    mask[train] = True
    test = np.flatnonzero(known & ~mask)
    return SplitSpec(train, test, float(ratio), int(seed))
