"""Multilevel recursive-bisection graph partitioner and cluster features.

Each bisection coarsens the graph by heavy-edge matching down to at most
``COARSEST`` nodes, grows an initial region from a random seed node, and
refines with boundary Fiduccia-Mattheyses passes while projecting back to
the original graph. k-way partitions come from recursive bisection with
side sizes bounded so that every final cluster is non-empty and no larger
than ``floor(1.10 * ceil(n / c))``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from relfeat.errors import InputError
from relfeat.featmat import Block, SparseFeatureMatrix, concat_blocks
from relfeat.graph import RelationGraph

BALANCE = 1.10
COARSEST = 64
N_TRIES = 4
MAX_PASSES = 10
STALL_LIMIT = 50


@dataclass(frozen=True, eq=False)
class Partition:
    c: int
    assignment: np.ndarray
    edge_cut: float
    balance: float

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.c)


@dataclass(frozen=True, eq=False)
class ClusterFeatureSet:
    partitions: tuple[Partition, ...]

    @property
    def cluster_counts(self) -> list[int]:
        return [p.c for p in self.partitions]


def max_cluster_size(n: int, c: int) -> int:
    """Largest cluster allowed at balance 1.10 (exact integer arithmetic)."""
    return (110 * (-(-n // c))) // 100


def edge_cut(graph: RelationGraph, assignment: np.ndarray) -> float:
    coo = sp.triu(graph.adj, k=1).tocoo()
    a = np.asarray(assignment)
    return float(coo.data[a[coo.row] != a[coo.col]].sum())


def make_partition(graph: RelationGraph, assignment: Sequence[int], c: int | None = None) -> Partition:
    a = np.asarray(assignment, dtype=np.int64)
    if a.shape != (graph.n,):
        raise InputError(f"assignment has {a.size} entries, graph has {graph.n} nodes")
    if c is None:
        c = int(a.max()) + 1 if a.size else 0
    if a.size and (a.min() < 0 or a.max() >= c):
        raise InputError(f"cluster ids must lie in [0, {c})")
    sizes = np.bincount(a, minlength=c)
    balance = float(sizes.max()) / -(-graph.n // c) if graph.n and c else 0.0
    return Partition(c, a, edge_cut(graph, a), balance)


# --- coarsening ------------------------------------------------------------


def _match(adj: sp.csr_matrix, vwgt: np.ndarray, rng: np.random.Generator, max_vwgt: float) -> np.ndarray:
    n = adj.shape[0]
    indptr, indices, data = adj.indptr, adj.indices, adj.data
    match = np.full(n, -1, dtype=np.int64)
    for u in rng.permutation(n):
        if match[u] >= 0:
            continue
        best, best_w = -1, 0.0
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            # neighbours are sorted, so strict '>' keeps the lowest index on ties
            if match[v] < 0 and data[k] > best_w and vwgt[u] + vwgt[v] <= max_vwgt:
                best, best_w = v, data[k]
        if best >= 0:
            match[u], match[best] = best, u
        else:
            match[u] = u
    cmap = np.full(n, -1, dtype=np.int64)
    k = 0
    for u in range(n):
        if cmap[u] < 0:
            cmap[u] = cmap[match[u]] = k
            k += 1
    return cmap


def _contract(adj: sp.csr_matrix, vwgt: np.ndarray, cmap: np.ndarray):
    n = adj.shape[0]
    nc = int(cmap.max()) + 1 if n else 0
    proj = sp.csr_matrix((np.ones(n), (np.arange(n), cmap)), shape=(n, nc))
    coarse = sp.csr_matrix(proj.T @ adj @ proj)
    coarse.setdiag(0)
    coarse.eliminate_zeros()
    coarse.sort_indices()
    return coarse, np.bincount(cmap, weights=vwgt, minlength=nc)


def coarsen(graph: RelationGraph, seed=None):
    """One round of heavy-edge matching.

    Returns the contracted graph and the fine-to-coarse node map. Parallel
    edges between super-nodes are merged by summing their weights; edges
    inside a matched pair disappear.
    """
    rng = np.random.default_rng(seed)
    vwgt = np.ones(graph.n)
    cmap = _match(graph.adj, vwgt, rng, max_vwgt=np.inf)
    coarse, _ = _contract(graph.adj, vwgt, cmap)
    return RelationGraph(coarse), cmap


# --- two-way refinement ------------------------------------------------------


def _violation(pw, lo, hi) -> float:
    return sum(max(0.0, pw[s] - hi[s]) + max(0.0, lo[s] - pw[s]) for s in (0, 1))


def _fm_refine(adj: sp.csr_matrix, vwgt: np.ndarray, side: np.ndarray, lo, hi, max_passes: int = MAX_PASSES) -> np.ndarray:
    """Fiduccia-Mattheyses passes on a bisection.

    Sides must end up with weights in ``[lo[s], hi[s]]``. Within a pass a
    move may overshoot the upper bound by one vertex weight; the pass then
    rolls back to its best prefix, ranked by (balance violation, cut).
    Starting from a feasible bisection the cut therefore never increases.
    """
    n = adj.shape[0]
    side = side.astype(np.int8).copy()
    if n == 0:
        return side
    indptr = adj.indptr.tolist()
    indices = adj.indices.tolist()
    data = adj.data.tolist()
    vw = vwgt.tolist()
    slack = max(vw)

    for _ in range(max_passes):
        s_list = side.tolist()
        ext = [0.0] * n
        inn = [0.0] * n
        for u in range(n):
            su = s_list[u]
            for k in range(indptr[u], indptr[u + 1]):
                if s_list[indices[k]] == su:
                    inn[u] += data[k]
                else:
                    ext[u] += data[k]
        pw = [0.0, 0.0]
        for u in range(n):
            pw[s_list[u]] += vw[u]
        cut = sum(ext) / 2.0
        start_score = (_violation(pw, lo, hi), cut)
        best_score, best_len = start_score, 0

        stamp = [0] * n
        heaps: list[list] = [[], []]
        for u in range(n):
            heaps[s_list[u]].append((-(ext[u] - inn[u]), u, 0))
        heapq.heapify(heaps[0])
        heapq.heapify(heaps[1])
        locked = [False] * n
        moves: list[int] = []
        stall = 0

        def top(s):
            h = heaps[s]
            while h:
                g, u, st = h[0]
                if locked[u] or st != stamp[u]:
                    heapq.heappop(h)
                    continue
                return g, u
            return None

        while True:
            if pw[0] > hi[0] or pw[1] < lo[1]:
                sources = (0,)
            elif pw[1] > hi[1] or pw[0] < lo[0]:
                sources = (1,)
            else:
                sources = (0, 1)
            choice = None
            for s in sources:
                t = top(s)
                if t is None:
                    continue
                g, u = t
                if len(sources) == 2 and (pw[1 - s] + vw[u] > hi[1 - s] + slack or pw[s] - vw[u] < lo[s] - slack):
                    continue
                if choice is None or (g, u) < choice[:2]:
                    choice = (g, u, s)
            if choice is None:
                break
            g, u, s = choice
            t = 1 - s
            heapq.heappop(heaps[s])
            locked[u] = True
            s_list[u] = t
            pw[s] -= vw[u]
            pw[t] += vw[u]
            cut += g  # g is the negated gain
            ext[u], inn[u] = inn[u], ext[u]
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                w = data[k]
                if s_list[v] == t:
                    inn[v] += w
                    ext[v] -= w
                else:
                    inn[v] -= w
                    ext[v] += w
                if not locked[v]:
                    stamp[v] += 1
                    heapq.heappush(heaps[s_list[v]], (-(ext[v] - inn[v]), v, stamp[v]))
            moves.append(u)
            score = (_violation(pw, lo, hi), cut)
            if score < best_score:
                best_score, best_len = score, len(moves)
                stall = 0
            else:
                stall += 1
                if stall > STALL_LIMIT:
                    break

        for u in moves[best_len:]:
            s_list[u] = 1 - s_list[u]
        side = np.asarray(s_list, dtype=np.int8)
        if not best_score < start_score:
            break
    return side


# --- initial bisection ----------------------------------------------------------


def _grow(adj: sp.csr_matrix, vwgt: np.ndarray, target0: float, rng: np.random.Generator) -> np.ndarray:
    """Side 0 collects whole components (largest first) while they fit, then
    grows a BFS region inside the next component from a random node."""
    n = adj.shape[0]
    side = np.ones(n, dtype=np.int8)
    ncomp, comp = connected_components(adj, directed=False)
    cw = np.bincount(comp, weights=vwgt, minlength=ncomp)
    order = sorted(range(ncomp), key=lambda k: (-cw[k], k))
    w0 = 0.0
    leftover = []
    for k in order:
        if w0 + cw[k] <= target0:
            side[comp == k] = 0
            w0 += cw[k]
        else:
            leftover.append(k)
    indptr, indices = adj.indptr, adj.indices
    for k in leftover:
        if w0 >= target0:
            break
        members = np.flatnonzero(comp == k)
        start = int(rng.choice(members))
        queue = [start]
        seen = {start}
        head = 0
        while head < len(queue) and w0 < target0:
            u = queue[head]
            head += 1
            # add u only if that brings side 0 closer to the target
            if abs(w0 + vwgt[u] - target0) > abs(w0 - target0):
                break
            side[u] = 0
            w0 += vwgt[u]
            for v in indices[indptr[u]:indptr[u + 1]]:
                if v not in seen:
                    seen.add(int(v))
                    queue.append(int(v))
    return side


def _cut(adj: sp.csr_matrix, side: np.ndarray) -> float:
    coo = adj.tocoo()
    return float(coo.data[side[coo.row] != side[coo.col]].sum()) / 2.0


def _score(adj, vwgt, side, lo, hi):
    pw = [float(vwgt[side == 0].sum()), float(vwgt[side == 1].sum())]
    return (_violation(pw, lo, hi), _cut(adj, side))


def _bisect(adj: sp.csr_matrix, lo, hi, target0: float, rng: np.random.Generator) -> np.ndarray:
    vwgt = np.ones(adj.shape[0])
    levels = []
    cur, cw = adj, vwgt
    max_vwgt = math.ceil(1.5 * adj.shape[0] / COARSEST)
    while cur.shape[0] > COARSEST:
        cmap = _match(cur, cw, rng, max_vwgt)
        nc = int(cmap.max()) + 1
        if nc > 0.95 * cur.shape[0]:
            break
        levels.append((cur, cw, cmap))
        cur, cw = _contract(cur, cw, cmap)

    best, best_score = None, None
    for _ in range(N_TRIES):
        side = _fm_refine(cur, cw, _grow(cur, cw, target0, rng), lo, hi)
        score = _score(cur, cw, side, lo, hi)
        if best is None or score < best_score:
            best, best_score = side, score
    side = best
    for fine, fw, cmap in reversed(levels):
        side = _fm_refine(fine, fw, side[cmap], lo, hi)
    return side


# --- k-way --------------------------------------------------------------------


def _recursive_bisection(adj: sp.csr_matrix, k: int, max_size: Callable[[int], int], rng: np.random.Generator) -> np.ndarray:
    """Leaf id per node; the left side of every split gets the lower ids."""
    n = adj.shape[0]
    leaves = np.zeros(n, dtype=np.int64)
    stack = [(np.arange(n), adj, k, 0)]
    while stack:
        nodes, sub, parts, offset = stack.pop()
        if parts == 1:
            leaves[nodes] = offset
            continue
        m = len(nodes)
        if m == parts:
            leaves[nodes] = offset + np.arange(m)
            continue
        kl = parts // 2
        kr = parts - kl
        lo = (max(kl, m - max_size(kr)), max(kr, m - max_size(kl)))
        hi = (min(max_size(kl), m - kr), min(max_size(kr), m - kl))
        side = _bisect(sub, lo, hi, m * kl / parts, rng)
        left = np.flatnonzero(side == 0)
        right = np.flatnonzero(side == 1)
        # right is pushed first so the left subtree is processed first
        stack.append((nodes[right], sub[right][:, right], kr, offset + kl))
        stack.append((nodes[left], sub[left][:, left], kl, offset))
    return leaves


def partition(graph: RelationGraph, c: int, seed=None) -> Partition:
    n = graph.n
    if c < 2:
        raise InputError("cluster count must be >= 2")
    if c > n:
        raise InputError(f"cannot split {n} nodes into {c} non-empty clusters")
    M = max_cluster_size(n, c)
    rng = np.random.default_rng(seed)
    leaves = _recursive_bisection(graph.adj, c, lambda k: k * M, rng)
    return make_partition(graph, leaves, c)


def refine(graph: RelationGraph, part: Partition, max_passes: int = MAX_PASSES) -> Partition:
    """Improve a partition without breaking the 1.10 balance bound.

    Bisections use Fiduccia-Mattheyses passes; larger ``c`` falls back to
    greedy boundary moves with strictly positive gain.
    """
    n, c = graph.n, part.c
    M = max_cluster_size(n, c)
    if c == 2:
        side = _fm_refine(graph.adj, np.ones(n), part.assignment.astype(np.int8), (1, 1), (M, M), max_passes)
        return make_partition(graph, side.astype(np.int64), 2)
    a = part.assignment.copy()
    sizes = np.bincount(a, minlength=c)
    adj = graph.adj
    for _ in range(max_passes):
        moved = False
        for u in range(n):
            lo, hi = adj.indptr[u], adj.indptr[u + 1]
            if lo == hi:
                continue
            conn = np.bincount(a[adj.indices[lo:hi]], weights=adj.data[lo:hi], minlength=c)
            own = a[u]
            gains = conn - conn[own]
            gains[own] = 0.0
            gains[sizes + 1 > M] = 0.0
            best = int(np.argmax(gains))
            if gains[best] > 0 and sizes[own] > 1:
                a[u] = best
                sizes[own] -= 1
                sizes[best] += 1
                moved = True
        if not moved:
            break
    return make_partition(graph, a, c)


def n_resolutions(n: int) -> int:
    return n.bit_length() - 1 if n > 0 else 0


def cluster_partitions(graph: RelationGraph, seed=None) -> ClusterFeatureSet:
    """Nested partitions for c = 2, 4, ..., 2**floor(log2 n).

    One bisection tree of depth ``D = floor(log2 n)`` serves all
    resolutions: the cluster of a node at ``c = 2**j`` is its leaf id
    shifted right by ``D - j``. Side-size caps are tightened bottom-up so
    every level meets its own balance bound.
    """
    n = graph.n
    if n < 4:
        raise InputError(f"cluster features need at least 4 nodes, got {n}")
    D = n_resolutions(n)
    caps = {1: max_cluster_size(n, 2 ** D)}
    for m in range(1, D):
        k = 2 ** m
        caps[k] = min(max_cluster_size(n, 2 ** (D - m)), 2 * caps[k // 2])
    rng = np.random.default_rng(seed)
    leaves = _recursive_bisection(graph.adj, 2 ** D, lambda k: caps[k], rng)
    parts = tuple(make_partition(graph, leaves >> (D - j), 2 ** j) for j in range(1, D + 1))
    return ClusterFeatureSet(parts)


def membership_features(parts: Sequence[Partition]) -> SparseFeatureMatrix:
    blocks = []
    for p in parts:
        n = len(p.assignment)
        X = sp.csr_matrix((np.ones(n), (np.arange(n), p.assignment)), shape=(n, p.c))
        blocks.append(SparseFeatureMatrix.single(X, f"clusters-c{p.c}"))
    return concat_blocks(blocks)


def cluster_membership_features(graph: RelationGraph, seed=None):
    cfs = cluster_partitions(graph, seed)
    return cfs, membership_features(cfs.partitions)
