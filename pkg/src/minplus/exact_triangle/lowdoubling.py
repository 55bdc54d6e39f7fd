"""Solvers for instances whose entries come from a set with small doubling.

Entries are mapped to indices of the sorted entry set; sums then live in
X + X, so the work is proportional to the number of distinct entries rather
than to the numeric range.
"""
from __future__ import annotations

import numpy as np

from ..core import MaskedMatrix, TriangleFlags, TriangleInstance, as_matrix
from .adjust import THIRD_SLOT


def _pair_counts(A: MaskedMatrix, B: MaskedMatrix):
    """For each A-value a: counts[a][i, j, b] = #{k : A[i,k] = a, B[k,j] = xb[b]}."""
    xa = np.unique(A.values[A.mask])
    xb = np.unique(B.values[B.mask])
    n2, n3 = B.shape
    onehot = np.zeros((n2, n3, xb.size), dtype=np.int64)
    kk, jj = np.nonzero(B.mask)
    onehot[kk, jj, np.searchsorted(xb, B.values[kk, jj])] = 1
    flat = onehot.reshape(n2, n3 * xb.size)
    for a in xa:
        Ma = (A.mask & (A.values == a)).astype(np.int64)
        yield int(a), xb, (Ma @ flat).reshape(A.rows, n3, xb.size)


def _c_flags(I: TriangleInstance) -> np.ndarray:
    n1, n2, n3 = I.dims
    out = np.zeros((n1, n3), dtype=bool)
    if not I.C.nnz:
        return out
    for a, xb, cnt in _pair_counts(I.A, I.B):
        need = I.C.values - a
        idx = np.clip(np.searchsorted(xb, need), 0, max(xb.size - 1, 0))
        ok = I.C.mask & (xb.size > 0)
        if xb.size:
            ok &= xb[idx] == need
            got = np.take_along_axis(cnt, idx[:, :, None], axis=2)[:, :, 0] > 0
            out |= ok & got
    return out


def solve_uniform_low_doubling(inst: TriangleInstance) -> TriangleFlags:
    """Exact Triangle flags from one sumset-indexed product per rotation."""
    c = _c_flags(inst)
    a = _c_flags(THIRD_SLOT["A"].forward(inst))
    b = _c_flags(THIRD_SLOT["B"].forward(inst))
    return TriangleFlags(a, b, c)


def min_plus_low_doubling(A, B) -> MaskedMatrix:
    """Min-plus product via the same sumset-indexed counting."""
    A, B = as_matrix(A), as_matrix(B)
    n1, n3 = A.rows, B.cols
    best = np.zeros((n1, n3), dtype=np.int64)
    have = np.zeros((n1, n3), dtype=bool)
    for a, xb, cnt in _pair_counts(A, B):
        nz = cnt > 0
        hit = nz.any(axis=2)
        cand = a + xb[nz.argmax(axis=2)] if xb.size else np.zeros((n1, n3), np.int64)
        upd = hit & (~have | (cand < best))
        best[upd] = cand[upd]
        have |= hit
    return MaskedMatrix(best, have)
