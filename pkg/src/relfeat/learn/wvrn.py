"""Weighted-vote relational neighbour classifier with relaxation labeling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from relfeat.errors import InputError
from relfeat.graph import UNKNOWN, LabelAssignment, RelationGraph


@dataclass(frozen=True)
class WvrnParams:
    max_iters: int = 100
    beta0: float = 1.0
    decay: float = 0.99
    threshold: float = 1e-4

    def __post_init__(self):
        if self.max_iters < 1:
            raise InputError("max_iters must be >= 1")
        if not 0 < self.beta0 <= 1:
            raise InputError("beta0 must lie in (0, 1]")


def wvrn_relaxation_labeling(
    graph: RelationGraph,
    labels: LabelAssignment,
    train: np.ndarray,
    params: WvrnParams = WvrnParams(),
    history: list | None = None,
) -> np.ndarray:
    """Class scores per node (rows sum to one).

    Training nodes stay clamped to their one-hot labels. Every other node
    starts at the training class prior and is updated simultaneously to the
    weighted mean of its neighbours' scores, damped by
    ``beta_t = beta0 * decay**t``. Nodes without neighbours keep the prior.
    """
    n, c = graph.n, labels.n_classes
    train = np.asarray(train, dtype=np.int64)
    ys = labels.y[train]
    if (ys == UNKNOWN).any():
        raise InputError("training nodes must carry known labels")
    counts = np.bincount(ys, minlength=c).astype(np.float64)
    if counts.sum() == 0:
        raise InputError("no training labels")
    prior = counts / counts.sum()

    clamp = np.zeros((len(train), c))
    clamp[np.arange(len(train)), ys] = 1.0
    scores = np.tile(prior, (n, 1))
    scores[train] = clamp

    wdeg = graph.weighted_degrees()
    inv = np.divide(1.0, wdeg, out=np.zeros_like(wdeg), where=wdeg > 0)
    W = sp.csr_matrix(sp.diags(inv) @ graph.adj)
    has_nbrs = wdeg > 0

    if history is not None:
        history.append(scores.copy())
    for t in range(params.max_iters):
        update = np.asarray(W @ scores)
        update[~has_nbrs] = scores[~has_nbrs]
        beta = params.beta0 * params.decay ** t
        new = beta * update + (1.0 - beta) * scores
        new[train] = clamp
        change = np.abs(new - scores).max() if n else 0.0
        scores = new
        if history is not None:
            history.append(scores.copy())
        if change <= params.threshold:
            break
    return scores
