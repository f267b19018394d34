"""Random walk with restart similarities.

The walk distribution for source ``i`` is the fixed point of
``p = (1 - r) * W.T @ p + r * e_i`` where ``W`` is the row-stochastic
transition matrix: mass at node ``j`` moves to its neighbours in proportion
to the edge weights, and with probability ``r`` jumps back to ``i``.
Every column of the resulting matrix ``P`` is a probability distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from relfeat.errors import ConvergenceError, InputError
from relfeat.featmat import SparseFeatureMatrix
from relfeat.graph import RelationGraph

DEFAULT_RESTART = 0.9
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 1000
DEFAULT_EPS = 1e-4


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    W: sp.csr_matrix
    dangling: np.ndarray  # indices of zero-degree rows

    @property
    def n(self) -> int:
        return self.W.shape[0]


@dataclass(frozen=True, eq=False)
class SteadyStateMatrix:
    P: np.ndarray  # P[:, i] is the distribution for walks started at i
    restart: float
    residuals: np.ndarray  # per column, infinity norm of the fixed-point residual
    iterations: int

    @property
    def residual(self) -> float:
        return float(self.residuals.max()) if self.residuals.size else 0.0


def transition_matrix(graph: RelationGraph) -> TransitionMatrix:
    totals = graph.weighted_degrees()
    inv = np.divide(1.0, totals, out=np.zeros_like(totals), where=totals > 0)
    W = sp.csr_matrix(sp.diags(inv) @ graph.adj)
    W.sort_indices()
    return TransitionMatrix(W, np.flatnonzero(totals == 0))


def iteration_bound(r: float, tol: float) -> int:
    return math.ceil(math.log(tol) / math.log(1.0 - r)) + 1


def rwr_steady_state(
    W: TransitionMatrix,
    r: float = DEFAULT_RESTART,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    columns: np.ndarray | None = None,
) -> SteadyStateMatrix:
    """Power iteration for all (or the selected) source columns at once.

    Iteration stops once no column changes by more than ``tol`` in the
    infinity norm. Mass that reaches a node without neighbours returns to the
    source, which keeps each column summing to one.
    """
    if not 0.0 < r < 1.0:
        raise InputError(f"restart probability must lie in (0, 1), got {r}")
    if tol <= 0 or max_iter < 1:
        raise InputError("tol must be positive and max_iter >= 1")
    n = W.n
    sources = np.arange(n) if columns is None else np.asarray(columns, dtype=np.int64)
    m = len(sources)
    WT = sp.csr_matrix(W.W.T)
    restart = np.zeros((n, m))
    restart[sources, np.arange(m)] = 1.0
    dangling = W.dangling

    def step(P):
        nxt = (1.0 - r) * (WT @ P)
        if dangling.size:
            lost = P[dangling, :].sum(axis=0)
            nxt[sources, np.arange(m)] += (1.0 - r) * lost
        nxt += r * restart
        return nxt

    P = restart.copy()
    change = np.inf
    it = 0
    while it < max_iter:
        nxt = step(P)
        it += 1
        change = np.abs(nxt - P).max() if nxt.size else 0.0
        P = nxt
        if change <= tol:
            break
    else:
        raise ConvergenceError(
            f"random walk did not converge within {max_iter} iterations (change {change:.3g})",
            residual=float(change),
        )
    residuals = np.abs(P - step(P)).max(axis=0) if P.size else np.zeros(m)
    return SteadyStateMatrix(P, r, residuals, it)


def rwr_features(steady: SteadyStateMatrix, eps: float = DEFAULT_EPS, name: str = "rwr") -> SparseFeatureMatrix:
    """Rows of the column-wise L2-normalised similarity matrix.

    Entries below ``eps`` are dropped; ``eps=0`` keeps everything.
    """
    if eps < 0:
        raise InputError("eps must be non-negative")
    P = steady.P
    norms = np.sqrt((P * P).sum(axis=0))
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    Phat = P * scale[np.newaxis, :]
    if eps > 0:
        Phat = np.where(Phat < eps, 0.0, Phat)
    return SparseFeatureMatrix.single(sp.csr_matrix(Phat), name)
