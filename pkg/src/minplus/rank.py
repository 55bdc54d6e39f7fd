"""Select-plus rank decompositions, regularity and conflict-free covering.

A decomposition (U, V, S) of a matrix A satisfies
A[i,j] = U[i, S[i,j]] + V[S[i,j], j] wherever A is not ⊥, and S is ⊥ exactly
where A is.  Selector indices are 0-based; ⊥ in S is stored as -1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import MaskedMatrix, as_matrix, check_bounds
from .errors import DomainError, ShapeError


@dataclass
class RankDecomposition:
    r: int
    U: np.ndarray  # n × r
    V: np.ndarray  # r × m
    S: np.ndarray  # n × m, -1 for ⊥

    def __post_init__(self):
        self.S = np.asarray(self.S, dtype=np.int64)
        n, m = self.S.shape
        self.U = np.asarray(self.U, dtype=np.int64)
        self.V = np.asarray(self.V, dtype=np.int64)
        if self.U.size == 0:
            self.U = self.U.reshape(n, self.r)
        if self.V.size == 0:
            self.V = self.V.reshape(self.r, m)

    @property
    def shape(self) -> tuple[int, int]:
        return self.S.shape

    def matrix(self) -> MaskedMatrix:
        """The matrix this decomposition represents."""
        mask = self.S >= 0
        n, m = self.S.shape
        sel = np.where(mask, self.S, 0)
        if self.r == 0:
            return MaskedMatrix.empty(n, m)
        vals = self.U[np.arange(n)[:, None], sel] + self.V[sel, np.arange(m)[None, :]]
        return MaskedMatrix(check_bounds(vals), mask)

    def transpose(self) -> "RankDecomposition":
        return RankDecomposition(self.r, self.V.T.copy(), self.U.T.copy(), self.S.T.copy())

    def negate(self) -> "RankDecomposition":
        return RankDecomposition(self.r, -self.U, -self.V, self.S.copy())

    def restrict(self, keep: np.ndarray) -> "RankDecomposition":
        return RankDecomposition(self.r, self.U.copy(), self.V.copy(), np.where(keep, self.S, -1))

    def shift(self, row=None, col=None) -> "RankDecomposition":
        """Decomposition of the matrix plus ``row[i] + col[j]``."""
        U, V = self.U.copy(), self.V.copy()
        if row is not None:
            U += np.asarray(row, dtype=np.int64)[:, None]
        if col is not None:
            V += np.asarray(col, dtype=np.int64)[None, :]
        return RankDecomposition(self.r, check_bounds(U), check_bounds(V), self.S.copy())

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "U": self.U.tolist(),
            "V": self.V.tolist(),
            "S": [[None if s < 0 else s for s in row] for row in self.S.tolist()],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RankDecomposition":
        S = np.array([[-1 if s is None else s for s in row] for row in obj["S"]], dtype=np.int64)
        if S.size == 0:
            S = S.reshape(len(obj["S"]), 0 if not obj["S"] else len(obj["S"][0]))
        return cls(obj["r"], obj["U"], obj["V"], S)


def verify_decomposition(A, d: RankDecomposition) -> bool:
    A = as_matrix(A)
    n, m = A.shape
    if d.S.shape != (n, m) or d.U.shape != (n, d.r) or d.V.shape != (d.r, m):
        return False
    if not np.array_equal(d.S >= 0, A.mask):
        return False
    if (d.S >= d.r).any():
        return False
    return d.matrix() == A


def trivial_decomposition(A, mode: str = "size", u: int | None = None) -> RankDecomposition:
    """Decomposition of rank min(n, m) (``size``) or u (``universe``)."""
    A = as_matrix(A)
    n, m = A.shape
    if mode == "size":
        if A.nnz == 0:
            return RankDecomposition(0, np.zeros((n, 0)), np.zeros((0, m)), np.full((n, m), -1))
        if n <= m:
            S = np.where(A.mask, np.arange(n)[:, None], -1)
            return RankDecomposition(n, np.zeros((n, n)), A.values.copy(), S)
        S = np.where(A.mask, np.arange(m)[None, :], -1)
        return RankDecomposition(m, A.values.copy(), np.zeros((m, m)), S)
    if mode == "universe":
        vals = A.values[A.mask]
        if u is None:
            u = int(vals.max()) if vals.size else 0
        if vals.size and (vals.min() < 1 or vals.max() > u):
            raise DomainError(f"universe mode needs entries in 1..{u}")
        V = np.repeat(np.arange(1, u + 1)[:, None], m, axis=1)
        S = np.where(A.mask, A.values - 1, -1)
        return RankDecomposition(u, np.zeros((n, u)), V, S)
    raise DomainError(f"unknown mode {mode!r}")


def sum_decomposition(d1: RankDecomposition, d2: RankDecomposition) -> RankDecomposition:
    """Decomposition of A1 + A2 indexed by pairs (k1, k2) -> k1 * r2 + k2."""
    if d1.shape != d2.shape:
        raise ShapeError("decompositions have different shapes")
    r1, r2 = d1.r, d2.r
    U = (d1.U[:, :, None] + d2.U[:, None, :]).reshape(d1.U.shape[0], r1 * r2)
    V = (d1.V[:, None, :] + d2.V[None, :, :]).reshape(r1 * r2, d1.V.shape[1])
    both = (d1.S >= 0) & (d2.S >= 0)
    S = np.where(both, d1.S * r2 + d2.S, -1)
    return RankDecomposition(r1 * r2, check_bounds(U), check_bounds(V), S)


def selector_counts(d: RankDecomposition) -> tuple[np.ndarray, np.ndarray]:
    """Row counts (n × r) and column counts (m × r) of each selector value."""
    n, m = d.shape
    rc = np.zeros((n, d.r), dtype=np.int64)
    cc = np.zeros((m, d.r), dtype=np.int64)
    ii, jj = np.nonzero(d.S >= 0)
    np.add.at(rc, (ii, d.S[ii, jj]), 1)
    np.add.at(cc, (jj, d.S[ii, jj]), 1)
    return rc, cc


def is_row_regular(d: RankDecomposition, R: float) -> bool:
    n, m = d.shape
    rc, _ = selector_counts(d)
    return d.r == 0 or bool((rc * d.r <= R * m).all())


def is_col_regular(d: RankDecomposition, R: float) -> bool:
    n, m = d.shape
    _, cc = selector_counts(d)
    return d.r == 0 or bool((cc * d.r <= R * n).all())


def default_regularity(n: int, m: int) -> int:
    return 64 * math.ceil(math.log2(max(n * m, 1)) + 1)


# --------------------------------------------------------------------------
# conflict-free covering


@dataclass
class CoverInstance:
    """Items with a target x[i] in [0, r) and a conflict set C[i] ⊆ [0, r)."""

    x: list[int]
    conflicts: list[frozenset[int]]
    r: int
    s: int | None = None

    def __post_init__(self):
        self.x = [int(v) for v in self.x]
        self.conflicts = [frozenset(int(c) for c in cs) for cs in self.conflicts]
        if len(self.x) != len(self.conflicts):
            raise ShapeError("x and conflicts differ in length")
        if self.s is None:
            self.s = max((len(c) for c in self.conflicts), default=0)
        for i, (xi, ci) in enumerate(zip(self.x, self.conflicts)):
            if not 0 <= xi < self.r:
                raise DomainError(f"item {i}: target {xi} outside [0, {self.r})")
            if xi in ci:
                raise DomainError(f"item {i}: target lies in its own conflict set")
            if len(ci) > self.s:
                raise DomainError(f"item {i}: conflict set larger than s={self.s}")
            if ci and (min(ci) < 0 or max(ci) >= self.r):
                raise DomainError(f"item {i}: conflict outside [0, {self.r})")


def cover_size_bound(n: int, s: int) -> int:
    if n <= 1:
        return 1
    return math.ceil(16 * s * math.log(n)) + 1


def verify_cover(inst: CoverInstance, sets, assignment) -> bool:
    if len(assignment) != len(inst.x):
        return False
    for xi, ci, a in zip(inst.x, inst.conflicts, assignment):
        if not 0 <= a < len(sets):
            return False
        T = sets[a]
        if xi not in T or (ci & set(T)):
            return False
    return True


def conflict_free_cover(inst: CoverInstance) -> tuple[list[list[int]], list[int]]:
    """Deterministic conflict-free cover by the method of conditional expectations.

    Each round grows a set S one element at a time.  The element is found by
    a binary search over dyadic intervals J of [0, r') (r' the next power of
    two), always descending into the half with the larger conditional
    expectation of the potential φ = |G| - |B|/(2s), where G are items whose
    target is in S and that are conflict-free, and B are items that became
    conflicted.  A round stops once |G| ≥ |I|/(16s) and the good items are
    removed.  Returns the sets (sorted lists) and the set index of each item.
    """
    n = len(inst.x)
    if n == 0:
        return [], []
    r, s = inst.r, inst.s
    R2 = 1 << max(r - 1, 0).bit_length()
    top = R2.bit_length() - 1
    xs_all = np.array(inst.x, dtype=np.int64)
    member_all = np.zeros((n, R2), dtype=np.int16)
    rows = np.repeat(np.arange(n), [len(c) for c in inst.conflicts])
    cols = np.fromiter((c for cs in inst.conflicts for c in sorted(cs)), dtype=np.int64, count=rows.size)
    member_all[rows, cols] = 1
    w = 2 * max(s, 1)

    # |C_i ∩ J| for every dyadic J, level l has intervals of length 2**l
    counts_all = [member_all.reshape(n, R2 >> l, 1 << l).sum(axis=2, dtype=np.int64) for l in range(top + 1)]

    sets: list[list[int]] = []
    assignment = np.full(n, -1, dtype=np.int64)
    active = np.arange(n)
    while active.size:
        xs = xs_all[active]
        member = member_all[active]
        nI = len(active)
        undecided = np.ones(nI, dtype=bool)
        good = np.zeros(nI, dtype=bool)
        S: list[int] = []
        while not (16 * s * good.sum() >= nI if s else good.sum() >= nI):
            cx = np.where(undecided, w, 0)
            cc = np.where(good, -(w + 1), np.where(undecided, -1, 0))

            def num(l, a):
                # scaled numerator of E[Δφ | j ∈ J] · |J| · 2s
                return int(cx @ ((xs >> l) == a)) + int(cc @ counts_all[l][active, a])

            a = 0
            cur = num(top, 0)
            for l in range(top - 1, -1, -1):
                left = num(l, 2 * a)
                if 2 * left >= cur:
                    a, cur = 2 * a, left
                else:
                    a, cur = 2 * a + 1, cur - left
            # guaranteed increase of at least |I| / (8 r')
            if cur * 8 * R2 < w * nI:
                raise RuntimeError("conditional expectation step lost its guarantee")
            S.append(a)
            newly_bad = (good | undecided) & (member[:, a] > 0)
            newly_good = undecided & (xs == a)
            good = (good | newly_good) & ~newly_bad
            undecided &= ~(newly_good | newly_bad)
        assignment[active[good]] = len(sets)
        sets.append(sorted(S))
        active = active[~good]
    return sets, assignment.tolist()


# --------------------------------------------------------------------------
# regularisation


@dataclass
class Regularized:
    row: MaskedMatrix
    col: MaskedMatrix
    small: MaskedMatrix
    d_row: RankDecomposition
    d_col: RankDecomposition
    d_small: RankDecomposition
    R: float
    stats: dict = field(default_factory=dict)


def regularize_decomposition(A, d: RankDecomposition, R: float | None = None) -> Regularized:
    """Split A into a row-regular, a column-regular and a small-rank part."""
    A = as_matrix(A)
    n, m = A.shape
    if R is None:
        R = default_regularity(n, m)
    r = d.r
    none = np.zeros((n, m), dtype=bool)
    empty_d = RankDecomposition(0, np.zeros((n, 0)), np.zeros((0, m)), np.full((n, m), -1))
    if r <= R:
        return Regularized(A, A.restrict(none), A.restrict(none), d, empty_d, empty_d, R, {"trivial": True})

    rc, cc = selector_counts(d)
    I_heavy = rc * r > R * m  # I_heavy[i, l]: i ∈ I_l
    J_heavy = cc * r > R * n  # J_heavy[j, l]: j ∈ J_l
    present = d.S >= 0
    sel = np.where(present, d.S, 0)
    in_I = present & I_heavy[np.arange(n)[:, None], sel]
    in_J = present & J_heavy[np.arange(m)[None, :], sel]
    row_part = present & ~in_I
    col_part = in_I & ~in_J
    small_part = in_I & in_J

    items = np.argwhere(small_part)
    xs = [int(d.S[i, j]) for i, j in items]
    conflicts = []
    for (i, j), x in zip(items, xs):
        cs = set(np.flatnonzero(I_heavy[i]).tolist()) | set(np.flatnonzero(J_heavy[j]).tolist())
        cs.discard(x)
        conflicts.append(frozenset(cs))
    cover = CoverInstance(xs, conflicts, r)
    sets, assign = conflict_free_cover(cover)
    q = len(sets)
    U_sm = np.zeros((n, q), dtype=np.int64)
    V_sm = np.zeros((q, m), dtype=np.int64)
    for t, T in enumerate(sets):
        for i in range(n):
            hit = [l for l in T if I_heavy[i, l]]
            if hit:
                U_sm[i, t] = d.U[i, hit[0]]
        for j in range(m):
            hit = [l for l in T if J_heavy[j, l]]
            if hit:
                V_sm[t, j] = d.V[hit[0], j]
    S_sm = np.full((n, m), -1, dtype=np.int64)
    for (i, j), a in zip(items, assign):
        S_sm[i, j] = a
    return Regularized(
        A.restrict(row_part),
        A.restrict(col_part),
        A.restrict(small_part),
        d.restrict(row_part),
        d.restrict(col_part),
        RankDecomposition(q, U_sm, V_sm, S_sm),
        R,
        {"trivial": False, "cover_s": cover.s, "irregular": len(items)},
    )
