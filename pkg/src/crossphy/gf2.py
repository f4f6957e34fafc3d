"""Dense GF(2) linear algebra on 64-bit packed words.

Rows are stored little-endian: bit j of word w holds column 64*w + j.
The eliminator processes constraint rows in a caller-chosen priority order
and keeps a growing row-echelon basis; a row that reduces to 0 = 1 is
inconsistent with the higher-priority rows already accepted and is reported
as violated (greedy maximal consistent subsystem).  XORs touch only each
row's live word span, which keeps banded systems (like a convolutional
code's) near-linear instead of cubic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError

WORD = 64


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """1-D 0/1 array -> packed uint64 words (little-endian bit order)."""
    bits = np.asarray(bits, dtype=np.uint8)
    n_words = (len(bits) + WORD - 1) // WORD
    padded = np.zeros(n_words * WORD, dtype=np.uint8)
    padded[: len(bits)] = bits
    chunks = padded.reshape(n_words, WORD).astype(np.uint64)
    return (chunks << np.arange(WORD, dtype=np.uint64)).sum(axis=1, dtype=np.uint64)


def unpack_bits(words: np.ndarray, n_bits: int) -> np.ndarray:
    words = np.asarray(words, dtype=np.uint64)
    bits = (words[:, None] >> np.arange(WORD, dtype=np.uint64)) & np.uint64(1)
    return bits.reshape(-1)[:n_bits].astype(np.uint8)


@dataclass
class Gf2Matrix:
    """rows x cols bit matrix, each row packed into uint64 words."""

    rows: int
    cols: int
    words: np.ndarray  # (rows, n_words) uint64

    @property
    def n_words(self) -> int:
        return self.words.shape[1]

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "Gf2Matrix":
        n_words = (cols + WORD - 1) // WORD
        return cls(rows, cols, np.zeros((rows, n_words), dtype=np.uint64))

    @classmethod
    def from_dense(cls, dense) -> "Gf2Matrix":
        dense = np.asarray(dense, dtype=np.uint8)
        if dense.ndim != 2:
            raise DimensionError("from_dense expects a 2-D array")
        m = cls.zeros(*dense.shape)
        for r in range(dense.shape[0]):
            m.words[r] = pack_bits(dense[r])
        return m

    def to_dense(self) -> np.ndarray:
        return np.stack([unpack_bits(self.words[r], self.cols) for r in range(self.rows)])

    def matvec(self, x) -> np.ndarray:
        """y = G x over GF(2)."""
        xw = pack_bits(np.asarray(x, dtype=np.uint8))
        if len(x) != self.cols:
            raise DimensionError(f"x has {len(x)} bits, matrix has {self.cols} columns")
        acc = np.bitwise_count(self.words & xw[None, :]).sum(axis=1)
        return (acc & 1).astype(np.uint8)

    def set_column(self, col: int, bits: np.ndarray) -> None:
        w, b = divmod(col, WORD)
        mask = np.uint64(1) << np.uint64(b)
        on = np.asarray(bits, dtype=bool)
        self.words[on, w] |= mask
        self.words[~on, w] &= ~mask


def _leading_col(row: np.ndarray, lo: int, hi: int) -> tuple[int, int]:
    """Lowest set column of a packed row, searching words [lo, hi); returns
    (col, word_index) or (-1, -1) if empty."""
    for w in range(lo, hi):
        v = int(row[w])
        if v:
            return w * WORD + ((v & -v).bit_length() - 1), w
    return -1, -1


@dataclass
class EliminationResult:
    x: np.ndarray  # one solution, free variables zero
    rank: int
    violated: list  # indices (into `order`) of rows inconsistent with earlier ones
    satisfied: int
    pivot_cols: list = field(default_factory=list)


def eliminate(rows_words: np.ndarray, rhs: np.ndarray, n_cols: int,
              order: np.ndarray | None = None) -> EliminationResult:
    """Greedy row-echelon elimination in priority order.

    ``rows_words`` is (n_rows, n_words) packed; ``rhs`` the right-hand bits.
    Rows are inserted in ``order`` (default: given order); each is reduced
    against the basis built so far.  A row reducing to 0 = 1 is recorded as
    violated and skipped, so the satisfied rows always form a consistent
    system solved exactly by the returned x.
    """
    n_rows, n_words = rows_words.shape
    if order is None:
        order = np.arange(n_rows)
    pivot_of_col: dict[int, int] = {}
    basis_rows: list[np.ndarray] = []
    basis_rhs: list[int] = []
    basis_pivot: list[int] = []
    basis_span: list[tuple[int, int]] = []
    violated: list[int] = []

    for ri in order:
        row = rows_words[ri].copy()
        r = int(rhs[ri])
        col, w0 = _leading_col(row, 0, n_words)
        while col >= 0 and col in pivot_of_col:
            bi = pivot_of_col[col]
            blo, bhi = basis_span[bi]
            row[blo:bhi] ^= basis_rows[bi][blo:bhi]
            r ^= basis_rhs[bi]
            col, w0 = _leading_col(row, w0, n_words)
        if col < 0:
            if r:
                violated.append(int(ri))
            continue
        live = np.nonzero(row)[0]
        pivot_of_col[col] = len(basis_rows)
        basis_rows.append(row)
        basis_rhs.append(r)
        basis_pivot.append(col)
        basis_span.append((int(live[0]), int(live[-1]) + 1))

    # every basis row's tail holds only columns greater than its pivot, so
    # back-substitution runs in decreasing pivot-column order
    x_words = np.zeros(n_words, dtype=np.uint64)
    for bi in sorted(range(len(basis_rows)), key=lambda i: -basis_pivot[i]):
        row = basis_rows[bi]
        lo, hi = basis_span[bi]
        parity = int(np.bitwise_count(row[lo:hi] & x_words[lo:hi]).sum()) & 1
        val = parity ^ basis_rhs[bi]
        if val:
            c = basis_pivot[bi]
            x_words[c // WORD] |= np.uint64(1) << np.uint64(c % WORD)

    x = unpack_bits(x_words, n_cols)
    return EliminationResult(
        x=x,
        rank=len(basis_rows),
        violated=violated,
        satisfied=n_rows - len(violated),
        pivot_cols=basis_pivot,
    )


def gf2_rank(dense) -> int:
    """Rank of a dense 0/1 matrix (convenience for tests)."""
    m = Gf2Matrix.from_dense(dense)
    res = eliminate(m.words, np.zeros(m.rows, dtype=np.uint8), m.cols)
    return res.rank
