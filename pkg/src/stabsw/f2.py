"""Linear algebra over GF(2) on int-bitset rows.

Each row of a :class:`BitMatrix` is a Python ``int`` with column ``j`` at bit
``j``; row operations are single big-int XORs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = ["BitMatrix", "RankDeficiencyError", "rank", "row_reduce", "nullspace", "smith_normal_form", "inverse"]


class RankDeficiencyError(ValueError):
    def __init__(self, rank: int, needed: int):
        super().__init__(f"matrix has rank {rank}, need {needed}")
        self.rank = rank
        self.needed = needed


@dataclass(frozen=True)
class BitMatrix:
    nrows: int
    ncols: int
    rows: tuple[int, ...]

    def __post_init__(self):
        if len(self.rows) != self.nrows:
            raise ValueError("row count mismatch")
        limit = 1 << self.ncols
        for r in self.rows:
            if not 0 <= r < limit:
                raise ValueError("row wider than ncols")

    @classmethod
    def from_array(cls, arr) -> "BitMatrix":
        arr = np.asarray(arr, dtype=np.uint8) & 1
        if arr.ndim != 2:
            raise ValueError("need a 2-D array")
        nr, nc = arr.shape
        weights = [1 << j for j in range(nc)]
        rows = tuple(sum(w for w, b in zip(weights, row) if b) for row in arr.tolist())
        return cls(nr, nc, rows)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, n, tuple(1 << i for i in range(n)))

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "BitMatrix":
        return cls(nrows, ncols, (0,) * nrows)

    def to_array(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.ncols), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            j = 0
            while r:
                if r & 1:
                    out[i, j] = 1
                r >>= 1
                j += 1
        return out

    def __getitem__(self, ij) -> int:
        i, j = ij
        return (self.rows[i] >> j) & 1

    def transpose(self) -> "BitMatrix":
        cols = [0] * self.ncols
        for i, r in enumerate(self.rows):
            j = 0
            while r:
                if r & 1:
                    cols[j] |= 1 << i
                r >>= 1
                j += 1
        return BitMatrix(self.ncols, self.nrows, tuple(cols))

    @property
    def T(self) -> "BitMatrix":
        return self.transpose()

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.nrows}x{self.ncols} @ {other.nrows}x{other.ncols}")
        out = []
        for r in self.rows:
            acc = 0
            j = 0
            while r:
                if r & 1:
                    acc ^= other.rows[j]
                r >>= 1
                j += 1
            out.append(acc)
        return BitMatrix(self.nrows, other.ncols, tuple(out))

    def hstack(self, other: "BitMatrix") -> "BitMatrix":
        if self.nrows != other.nrows:
            raise ValueError("row count mismatch")
        return BitMatrix(self.nrows, self.ncols + other.ncols, tuple(a | (b << self.ncols) for a, b in zip(self.rows, other.rows)))

    def block(self, r0: int, r1: int, c0: int, c1: int) -> "BitMatrix":
        mask = (1 << (c1 - c0)) - 1
        return BitMatrix(r1 - r0, c1 - c0, tuple((r >> c0) & mask for r in self.rows[r0:r1]))

    def is_identity(self) -> bool:
        return self.nrows == self.ncols and all(r == 1 << i for i, r in enumerate(self.rows))


def row_reduce(rows: Sequence[int], ncols: int) -> tuple[list[int], list[int], list[int]]:
    """Reduced row echelon form.

    Returns ``(reduced, pivots, ops)`` where ``ops[i]`` is the bitset of input
    rows whose XOR gives ``reduced[i]``.  Pivots are chosen as the first
    nonzero column scanning left to right.
    """
    work = list(rows)
    ops = [1 << i for i in range(len(work))]
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        bit = 1 << col
        piv = next((k for k in range(r, len(work)) if work[k] & bit), None)
        if piv is None:
            continue
        work[r], work[piv] = work[piv], work[r]
        ops[r], ops[piv] = ops[piv], ops[r]
        for k in range(len(work)):
            if k != r and work[k] & bit:
                work[k] ^= work[r]
                ops[k] ^= ops[r]
        pivots.append(col)
        r += 1
        if r == len(work):
            break
    return work, pivots, ops


def rank(m: BitMatrix) -> int:
    return len(row_reduce(m.rows, m.ncols)[1])


def nullspace(m: BitMatrix) -> BitMatrix:
    """Basis (as rows) of ``{v : M v^T = 0}``; size ``ncols - rank``."""
    reduced, pivots, _ = row_reduce(m.rows, m.ncols)
    pivset = set(pivots)
    basis = []
    for free in range(m.ncols):
        if free in pivset:
            continue
        v = 1 << free
        for i, p in enumerate(pivots):
            if (reduced[i] >> free) & 1:
                v |= 1 << p
        basis.append(v)
    return BitMatrix(len(basis), m.ncols, tuple(basis))


def inverse(m: BitMatrix) -> BitMatrix:
    if m.nrows != m.ncols:
        raise ValueError("inverse of a non-square matrix")
    reduced, pivots, ops = row_reduce(m.rows, m.ncols)
    if len(pivots) < m.nrows:
        raise RankDeficiencyError(len(pivots), m.nrows)
    return BitMatrix(m.nrows, m.nrows, tuple(ops))


def smith_normal_form(m: BitMatrix) -> tuple[BitMatrix, BitMatrix]:
    """Return ``(P, Q)`` with ``P M Q = [I | 0]`` for a full-row-rank ``M``.

    ``P`` collects the row operations of the reduction to RREF.  ``Q`` is
    built from column operations (stored through its transpose so that each
    column operation is a single row XOR): first clear the non-pivot entries
    of every pivot row, then permute pivot columns to the front.
    """
    r, c = m.nrows, m.ncols
    if c < r:
        raise RankDeficiencyError(min(r, c), r)
    reduced, pivots, ops = row_reduce(m.rows, c)
    if len(pivots) < r:
        raise RankDeficiencyError(len(pivots), r)
    p = BitMatrix(r, r, tuple(ops))

    qt = [1 << j for j in range(c)]  # rows of Q^T == columns of Q
    pivset = set(pivots)
    for i, pcol in enumerate(pivots):
        row = reduced[i]
        for col in range(c):
            if col not in pivset and (row >> col) & 1:
                qt[col] ^= qt[pcol]
    order = list(pivots) + [j for j in range(c) if j not in pivset]
    qt = [qt[j] for j in order]
    q = BitMatrix(c, c, tuple(qt)).transpose()
    return p, q
