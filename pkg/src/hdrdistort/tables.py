"""Conditional histograms and their inverse cumulative sampling tables.

Shared by the pixel and row/column noise models. A histogram counts sensor
value ``x`` for each clean value ``y``; storage is sparse (CSR rows indexed by
``y``) with dense semantics over the full ``2**B x 2**B`` grid.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

from .errors import EmptyModel


def count_matrix(y, x, size: int) -> sparse.csr_array:
    """Tally ``(y, x)`` pairs into a ``size x size`` sparse count matrix."""
    y = np.asarray(y, dtype=np.int64).ravel()
    x = np.asarray(x, dtype=np.int64).ravel()
    counts = np.ones(y.shape, dtype=np.int64)
    m = sparse.coo_array((counts, (y, x)), shape=(size, size)).tocsr()
    m.sum_duplicates()
    return m


def empty_counts(size: int) -> sparse.csr_array:
    return sparse.csr_array((size, size), dtype=np.int64)


def counts_equal(a: sparse.csr_array, b: sparse.csr_array) -> bool:
    return a.shape == b.shape and (a != b).nnz == 0


class CumulativeTable:
    """Inverse cumulative distributions for the populated rows of a histogram.

    For each populated clean value ``ys[i]`` the table stores the first
    nonzero sensor value ``x_min[i]`` and the cumulative probabilities over
    ``[x_min[i], x_min[i] + lengths[i])``, flattened into ``cum``. The last
    entry of every row is exactly 1.0.
    """

    def __init__(self, ys, x_min, lengths, cum, bit_depth: int):
        self.ys = np.asarray(ys, dtype=np.uint16)
        self.x_min = np.asarray(x_min, dtype=np.uint16)
        self.lengths = np.asarray(lengths, dtype=np.uint16)
        self.cum = np.asarray(cum, dtype=np.float32)
        self.bit_depth = bit_depth
        self.starts = np.concatenate([[0], np.cumsum(self.lengths, dtype=np.int64)[:-1]])
        if len(self.ys) == 0:
            raise EmptyModel("table has no populated bins")
        if self.lengths.sum(dtype=np.int64) != len(self.cum):
            raise ValueError("table lengths do not match cumulative payload")
        self._lookup = None
        self._keys = None

    @classmethod
    def from_counts(cls, counts: sparse.csr_array, bit_depth: int) -> "CumulativeTable":
        counts = sparse.csr_array(counts)
        counts.eliminate_zeros()
        counts.sort_indices()
        indptr, indices, data = counts.indptr, counts.indices, counts.data
        ys = np.flatnonzero(np.diff(indptr))
        if len(ys) == 0:
            raise EmptyModel("histogram has no observations")
        x_min = np.empty(len(ys), dtype=np.int64)
        lengths = np.empty(len(ys), dtype=np.int64)
        rows = []
        for i, y in enumerate(ys):
            lo, hi = indptr[y], indptr[y + 1]
            xs, cs = indices[lo:hi], data[lo:hi].astype(np.int64)
            first, last = int(xs[0]), int(xs[-1])
            dense = np.zeros(last - first + 1, dtype=np.int64)
            dense[xs - first] = cs
            c = np.cumsum(dense, dtype=np.float64) / float(dense.sum())
            c = c.astype(np.float32)
            c[-1] = 1.0
            x_min[i], lengths[i] = first, len(c)
            rows.append(c)
        if lengths.max() > 0xFFFF:
            raise ValueError("support too wide for the table format")
        return cls(ys, x_min, lengths, np.concatenate(rows), bit_depth)

    @property
    def max_value(self) -> int:
        return (1 << self.bit_depth) - 1

    def row(self, y: int):
        """``(x_min, cumulative)`` for a populated ``y``; KeyError otherwise."""
        i = np.searchsorted(self.ys, y)
        if i == len(self.ys) or self.ys[i] != y:
            raise KeyError(y)
        s = self.starts[i]
        return int(self.x_min[i]), self.cum[s : s + self.lengths[i]]

    def _nearest(self):
        if self._lookup is None:
            y = np.arange(self.max_value + 1)
            ys = self.ys.astype(np.int64)
            hi = np.clip(np.searchsorted(ys, y), 0, len(ys) - 1)
            lo = np.clip(hi - 1, 0, len(ys) - 1)
            # ties go to the lower populated bin
            take_lo = np.abs(y - ys[lo]) <= np.abs(ys[hi] - y)
            row = np.where(take_lo, lo, hi)
            self._lookup = (row, y - ys[row])
            # row index plus cumulative value, so one sorted search covers all rows
            row_of = np.repeat(np.arange(len(ys)), self.lengths.astype(np.int64))
            self._keys = row_of + self.cum.astype(np.float64)
        return self._lookup

    def sample(self, y, xi) -> np.ndarray:
        """Smallest ``x`` with ``cumulative(x) > xi`` for each ``(y, xi)``.

        Unpopulated ``y`` borrow the nearest populated row and shift its result
        by the distance to it. ``xi`` must lie in [0, 1); values on a grid of
        ``2**-32`` keep the search exact.
        """
        y = np.asarray(y, dtype=np.int64)
        xi = np.asarray(xi, dtype=np.float64)
        row_of_y, shift = self._nearest()
        row = row_of_y[y]
        start = self.starts[row]
        end = start + self.lengths[row].astype(np.int64) - 1
        pos = np.clip(np.searchsorted(self._keys, row + xi, side="right"), start, end)
        # off-grid xi can round across one boundary; settle it against the float32 values
        cum = self.cum
        back = (pos > start) & (cum[np.maximum(pos - 1, 0)] > xi)
        pos = pos - back
        fwd = (pos < end) & (cum[pos] <= xi)
        pos = pos + fwd
        x = self.x_min[row].astype(np.int64) + (pos - start) + shift[y]
        return np.clip(x, 0, self.max_value)

    def row_probabilities(self, y: int):
        """``(x_values, probabilities)`` of one populated row."""
        x0, c = self.row(y)
        p = np.diff(np.concatenate([[0.0], c.astype(np.float64)]))
        return np.arange(x0, x0 + len(c)), p

    def __eq__(self, other):
        if not isinstance(other, CumulativeTable):
            return NotImplemented
        return (
            self.bit_depth == other.bit_depth
            and np.array_equal(self.ys, other.ys)
            and np.array_equal(self.x_min, other.x_min)
            and np.array_equal(self.lengths, other.lengths)
            and np.array_equal(self.cum.view(np.uint32), other.cum.view(np.uint32))
        )

    def __repr__(self):
        return f"CumulativeTable(bins={len(self.ys)}, entries={len(self.cum)}, bit_depth={self.bit_depth})"
