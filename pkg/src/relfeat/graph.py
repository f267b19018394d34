"""Sparse symmetric relation graphs and label bookkeeping."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from relfeat.errors import InputError

logger = logging.getLogger(__name__)

UNKNOWN = -1


@dataclass(frozen=True, eq=False)
class RelationGraph:
    """Undirected weighted graph over ``n`` dense node indices.

    ``adj`` is a symmetric CSR matrix with sorted indices, no explicit
    zeros and an empty diagonal. Treat it as read-only.
    """

    adj: sp.csr_matrix
    dropped_self_loops: int = 0

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    @property
    def n_edges(self) -> int:
        return self.adj.nnz // 2

    @property
    def total_weight(self) -> float:
        return float(self.adj.sum()) / 2.0

    def degrees(self) -> np.ndarray:
        return np.diff(self.adj.indptr)

    def weighted_degrees(self) -> np.ndarray:
        return np.asarray(self.adj.sum(axis=1)).ravel()

    def degree(self, i: int) -> int:
        self._check(i)
        return int(self.adj.indptr[i + 1] - self.adj.indptr[i])

    def neighbors(self, i: int) -> list[tuple[int, float]]:
        self._check(i)
        lo, hi = self.adj.indptr[i], self.adj.indptr[i + 1]
        return [(int(j), float(w)) for j, w in zip(self.adj.indices[lo:hi], self.adj.data[lo:hi])]

    def neighbor_indices(self, i: int) -> np.ndarray:
        lo, hi = self.adj.indptr[i], self.adj.indptr[i + 1]
        return self.adj.indices[lo:hi]

    def edge_list(self) -> list[tuple[int, int, float]]:
        """Each undirected edge once, as ``(i, j, w)`` with ``i < j``."""
        upper = sp.triu(self.adj, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return [(int(upper.row[k]), int(upper.col[k]), float(upper.data[k])) for k in order]

    def average_degree(self) -> float:
        return 2.0 * self.n_edges / self.n if self.n else 0.0

    def subgraph(self, nodes: Sequence[int]) -> "RelationGraph":
        nodes = np.asarray(nodes, dtype=np.int64)
        return RelationGraph(_canonical(self.adj[nodes][:, nodes]))

    def _check(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise InputError(f"node index {i} out of range for graph with {self.n} nodes")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RelationGraph):
            return NotImplemented
        if self.adj.shape != other.adj.shape or self.adj.nnz != other.adj.nnz:
            return False
        return (
            np.array_equal(self.adj.indptr, other.adj.indptr)
            and np.array_equal(self.adj.indices, other.adj.indices)
            and np.array_equal(self.adj.data, other.adj.data)
        )

    __hash__ = None  # type: ignore[assignment]


def _canonical(adj: sp.spmatrix) -> sp.csr_matrix:
    adj = sp.csr_matrix(adj, dtype=np.float64)
    adj.sum_duplicates()
    adj.eliminate_zeros()
    adj.sort_indices()
    return adj


def build_graph(edges: Iterable[tuple[int, int, float]] | Iterable[tuple[int, int]], n: int) -> RelationGraph:
    """Build a symmetric graph from an edge list.

    Entries may be ``(i, j)`` or ``(i, j, weight)``. Repeated pairs, in
    either orientation, accumulate their weights. Self-loops are dropped.
    """
    if n < 0:
        raise InputError("node count must be non-negative")
    rows, cols, vals = [], [], []
    loops = 0
    for k, edge in enumerate(edges):
        if len(edge) == 2:
            i, j = edge
            w = 1.0
        else:
            i, j, w = edge
        i, j, w = int(i), int(j), float(w)
        if not (0 <= i < n and 0 <= j < n):
            raise InputError(f"edge {k} ({i}, {j}) references a node outside [0, {n})")
        if not (w > 0 and np.isfinite(w)):
            raise InputError(f"edge {k} ({i}, {j}) has non-positive or non-finite weight {w}")
        if i == j:
            loops += 1
            continue
        rows.append(i)
        cols.append(j)
        vals.append(w)
    if loops:
        logger.warning("dropped %d self-loop(s)", loops)
    r = np.asarray(rows, dtype=np.int64)
    c = np.asarray(cols, dtype=np.int64)
    v = np.asarray(vals, dtype=np.float64)
    # each directed entry appears once per orientation
    adj = sp.coo_matrix((np.concatenate([v, v]), (np.concatenate([r, c]), np.concatenate([c, r]))), shape=(n, n))
    return RelationGraph(_canonical(adj), dropped_self_loops=loops)


def from_adjacency(adj: sp.spmatrix) -> RelationGraph:
    """Wrap an existing adjacency matrix, checking symmetry and positivity."""
    adj = _canonical(adj)
    if adj.shape[0] != adj.shape[1]:
        raise InputError("adjacency matrix must be square")
    if adj.nnz and adj.data.min() <= 0:
        raise InputError("edge weights must be positive")
    if adj.diagonal().any():
        raise InputError("self-loops are not allowed")
    if adj.nnz and abs(adj - adj.T).max() > 0:
        raise InputError("adjacency matrix is not symmetric")
    return RelationGraph(adj)


@dataclass(frozen=True, eq=False)
class LabelAssignment:
    """Class names plus a per-node class index (``UNKNOWN`` when missing)."""

    classes: tuple[str, ...]
    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.int64)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "classes", tuple(self.classes))
        if y.ndim != 1:
            raise InputError("labels must be one-dimensional")
        bad = (y != UNKNOWN) & ((y < 0) | (y >= len(self.classes)))
        if bad.any():
            raise InputError(f"label index out of range at node {int(np.flatnonzero(bad)[0])}")

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def known(self) -> np.ndarray:
        return np.flatnonzero(self.y != UNKNOWN)

    def class_counts(self) -> np.ndarray:
        known = self.y[self.y != UNKNOWN]
        return np.bincount(known, minlength=self.n_classes)

    def take(self, nodes: Sequence[int]) -> "LabelAssignment":
        return LabelAssignment(self.classes, self.y[np.asarray(nodes, dtype=np.int64)])

    @classmethod
    def from_names(cls, names: Sequence[str | None], classes: Sequence[str] | None = None) -> "LabelAssignment":
        if classes is None:
            classes = sorted({c for c in names if c is not None})
        index = {c: k for k, c in enumerate(classes)}
        try:
            y = [UNKNOWN if c is None else index[c] for c in names]
        except KeyError as e:
            raise InputError(f"unknown class name {e.args[0]!r}") from None
        return cls(tuple(classes), np.asarray(y, dtype=np.int64))


def remove_singletons(graph: RelationGraph, labels: LabelAssignment | None = None):
    """Drop nodes of degree zero.

    Returns ``(graph, labels, index_map)`` where ``index_map`` is an array of
    length ``graph.n`` holding the new index of each old node, or -1 for
    removed nodes.
    """
    if labels is not None and labels.n != graph.n:
        raise InputError(f"labels cover {labels.n} nodes, graph has {graph.n}")
    keep = np.flatnonzero(graph.degrees() > 0)
    index_map = np.full(graph.n, -1, dtype=np.int64)
    index_map[keep] = np.arange(len(keep))
    reduced = RelationGraph(_canonical(graph.adj[keep][:, keep]))
    new_labels = labels.take(keep) if labels is not None else None
    return reduced, new_labels, index_map


def build_label_matrix(labels: LabelAssignment, visible: Iterable[int]) -> sp.csr_matrix:
    """n x c indicator matrix holding only the labels of ``visible`` nodes."""
    visible = np.unique(np.fromiter((int(i) for i in visible), dtype=np.int64))
    if visible.size and (visible[0] < 0 or visible[-1] >= labels.n):
        raise InputError("visible node index out of range")
    ys = labels.y[visible]
    if (ys == UNKNOWN).any():
        bad = int(visible[np.flatnonzero(ys == UNKNOWN)[0]])
        raise InputError(f"node {bad} is marked visible but has no known label")
    data = np.ones(len(visible), dtype=np.float64)
    return sp.csr_matrix((data, (visible, ys)), shape=(labels.n, labels.n_classes))
