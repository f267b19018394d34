"""Shortest-path neighborhoods and the features derived from them.

Shells are exact hop-distance classes: ``shell(d)[i, j] == 1`` iff the
shortest path between ``i`` and ``j`` has ``d`` edges. Edge weights are
ignored. All sources are expanded at once as a level-synchronous BFS
expressed with sparse products.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from relfeat.errors import InputError
from relfeat.featmat import Block, SparseFeatureMatrix
from relfeat.graph import RelationGraph

DEFAULT_DMAX = 3


@dataclass(frozen=True, eq=False)
class NeighborhoodShells:
    d_max: int
    matrices: tuple[sp.csr_matrix, ...]  # index d-1 holds distance d

    @property
    def n(self) -> int:
        return self.matrices[0].shape[0]

    def matrix(self, d: int) -> sp.csr_matrix:
        if not 1 <= d <= self.d_max:
            raise InputError(f"distance {d} outside 1..{self.d_max}")
        return self.matrices[d - 1]

    def shell(self, i: int, d: int) -> np.ndarray:
        m = self.matrix(d)
        return m.indices[m.indptr[i]:m.indptr[i + 1]]


def compute_shells(graph: RelationGraph, d_max: int = DEFAULT_DMAX) -> NeighborhoodShells:
    if d_max < 1:
        raise InputError("d_max must be >= 1")
    n = graph.n
    pattern = graph.adj.copy()
    pattern.data = np.ones_like(pattern.data)
    frontier = pattern
    reached = (sp.identity(n, format="csr", dtype=np.float64) + pattern).tocsr()
    shells = [_binary(frontier)]
    for _ in range(2, d_max + 1):
        step = _binary(frontier @ pattern)
        # drop anything already reached at a shorter distance
        fresh = step - step.multiply(reached)
        fresh = _binary(fresh)
        shells.append(fresh)
        reached = _binary(reached + fresh)
        frontier = fresh
    return NeighborhoodShells(d_max, tuple(shells))


def _binary(m: sp.spmatrix) -> sp.csr_matrix:
    m = sp.csr_matrix(m)
    m.eliminate_zeros()
    m.data = np.ones_like(m.data)
    m.sort_indices()
    return m


def _distances(shells: NeighborhoodShells, distances: Iterable[int] | None) -> list[int]:
    ds = list(range(1, shells.d_max + 1)) if distances is None else [int(d) for d in distances]
    if not ds:
        raise InputError("at least one distance is required")
    for d in ds:
        if not 1 <= d <= shells.d_max:
            raise InputError(f"distance {d} outside 1..{shells.d_max}")
    return ds


def neighbor_id_features(
    shells: NeighborhoodShells,
    distances: Iterable[int] | None = None,
    column_mask: Sequence[int] | None = None,
    name: str = "ids",
) -> SparseFeatureMatrix:
    """One indicator column per (distance, node).

    ``column_mask`` optionally restricts the kept node columns (e.g. to
    training-labeled nodes); the matrix keeps its full width so column
    positions do not depend on the mask.
    """
    ds = _distances(shells, distances)
    n = shells.n
    parts, blocks = [], []
    keep = None
    if column_mask is not None:
        keep = sp.diags(np.isin(np.arange(n), np.asarray(column_mask)).astype(np.float64))
    for k, d in enumerate(ds):
        m = shells.matrix(d)
        if keep is not None:
            m = m @ keep
        parts.append(m)
        blocks.append(Block(f"{name}-d{d}", k * n, (k + 1) * n))
    return SparseFeatureMatrix(sp.hstack(parts, format="csr"), tuple(blocks))


def ncc_features(shells: NeighborhoodShells, L: sp.spmatrix, distances: Iterable[int] | None = None) -> SparseFeatureMatrix:
    """Counts of each visible class among the nodes at each distance."""
    ds = _distances(shells, distances)
    L = sp.csr_matrix(L, dtype=np.float64)
    if L.shape[0] != shells.n:
        raise InputError(f"label matrix has {L.shape[0]} rows, graph has {shells.n}")
    c = L.shape[1]
    parts = [shells.matrix(d) @ L for d in ds]
    blocks = tuple(Block(f"ncc-d{d}", k * c, (k + 1) * c) for k, d in enumerate(ds))
    return SparseFeatureMatrix(sp.hstack(parts, format="csr"), blocks)


def ncp_features(shells: NeighborhoodShells, L: sp.spmatrix, distances: Iterable[int] | None = None) -> SparseFeatureMatrix:
    """Row-normalised class counts, per distance block. Empty rows stay zero."""
    counts = ncc_features(shells, L, distances)
    parts, blocks = [], []
    for b in counts.blocks:
        part = counts.X[:, b.start:b.end]
        totals = np.asarray(part.sum(axis=1)).ravel()
        inv = np.divide(1.0, totals, out=np.zeros_like(totals), where=totals > 0)
        parts.append(sp.diags(inv) @ part)
        blocks.append(Block(b.name.replace("ncc", "ncp", 1), b.start, b.end))
    return SparseFeatureMatrix(sp.hstack(parts, format="csr"), tuple(blocks))
