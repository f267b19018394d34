"""Sparse feature matrices with named column blocks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from relfeat.errors import InputError


@dataclass(frozen=True)
class Block:
    name: str
    start: int
    end: int  # exclusive

    @property
    def width(self) -> int:
        return self.end - self.start


@dataclass(frozen=True, eq=False)
class SparseFeatureMatrix:
    """Row-major sparse features; ``blocks`` names contiguous column ranges."""

    X: sp.csr_matrix
    blocks: tuple[Block, ...] = field(default=())

    def __post_init__(self):
        X = sp.csr_matrix(self.X, dtype=np.float64)
        X.sum_duplicates()
        X.eliminate_zeros()
        X.sort_indices()
        if X.nnz and not np.isfinite(X.data).all():
            raise InputError("feature values must be finite")
        blocks = tuple(self.blocks)
        for b in blocks:
            if not 0 <= b.start <= b.end <= X.shape[1]:
                raise InputError(f"block {b.name!r} [{b.start}, {b.end}) outside {X.shape[1]} columns")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "blocks", blocks)

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_cols(self) -> int:
        return self.X.shape[1]

    def block(self, name: str) -> sp.csr_matrix:
        for b in self.blocks:
            if b.name == name:
                return self.X[:, b.start:b.end]
        raise KeyError(name)

    def row(self, i: int) -> list[tuple[int, float]]:
        lo, hi = self.X.indptr[i], self.X.indptr[i + 1]
        return [(int(c), float(v)) for c, v in zip(self.X.indices[lo:hi], self.X.data[lo:hi])]

    def take_rows(self, rows: Sequence[int]) -> "SparseFeatureMatrix":
        return SparseFeatureMatrix(self.X[np.asarray(rows, dtype=np.int64)], self.blocks)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseFeatureMatrix):
            return NotImplemented
        a, b = self.X, other.X
        return (
            a.shape == b.shape
            and self.blocks == other.blocks
            and np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.data, b.data)
        )

    __hash__ = None  # type: ignore[assignment]

    @classmethod
    def single(cls, X, name: str) -> "SparseFeatureMatrix":
        X = sp.csr_matrix(X)
        return cls(X, (Block(name, 0, X.shape[1]),))

    @classmethod
    def empty(cls, n_rows: int) -> "SparseFeatureMatrix":
        return cls(sp.csr_matrix((n_rows, 0)))


def concat_blocks(matrices: Sequence[SparseFeatureMatrix]) -> SparseFeatureMatrix:
    """Stack feature matrices side by side, shifting block ranges."""
    if not matrices:
        raise InputError("nothing to concatenate")
    n = matrices[0].n_rows
    for m in matrices:
        if m.n_rows != n:
            raise InputError(f"row count mismatch: {m.n_rows} != {n}")
    if len(matrices) == 1:
        return matrices[0]
    blocks = []
    offset = 0
    for m in matrices:
        blocks.extend(Block(b.name, b.start + offset, b.end + offset) for b in m.blocks)
        offset += m.n_cols
    X = sp.hstack([m.X for m in matrices], format="csr")
    return SparseFeatureMatrix(X, tuple(blocks))
