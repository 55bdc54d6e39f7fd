"""Finite integer sets: sumsets, popular sums, coverings and order-preserving hashes."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable

import numpy as np

from .errors import DomainError


class IntegerSet:
    """Sorted set of distinct integers with cached additive statistics."""

    __slots__ = ("elements", "__dict__")

    def __init__(self, items: Iterable[int] = ()):
        self.elements: tuple[int, ...] = tuple(sorted({int(x) for x in items}))

    def __iter__(self):
        return iter(self.elements)

    def __len__(self):
        return len(self.elements)

    def __contains__(self, x):
        return x in self.as_set

    def __eq__(self, other):
        if isinstance(other, IntegerSet):
            return self.elements == other.elements
        return NotImplemented

    def __hash__(self):
        return hash(self.elements)

    def __repr__(self):
        return f"IntegerSet({list(self.elements)})"

    @cached_property
    def as_set(self) -> frozenset[int]:
        return frozenset(self.elements)

    @cached_property
    def sumset(self) -> "IntegerSet":
        return IntegerSet(sumset_with_multiplicities(self, self))

    @cached_property
    def doubling(self) -> Fraction:
        return doubling_constant(self)

    def __add__(self, other) -> "IntegerSet":
        if isinstance(other, int):
            return IntegerSet(x + other for x in self.elements)
        return IntegerSet(sumset_with_multiplicities(self, other))

    def __neg__(self) -> "IntegerSet":
        return IntegerSet(-x for x in self.elements)

    def __sub__(self, other) -> "IntegerSet":
        if isinstance(other, int):
            return self + (-other)
        return self + (-as_set(other))

    def to_json(self) -> list[int]:
        return list(self.elements)


def as_set(X) -> IntegerSet:
    return X if isinstance(X, IntegerSet) else IntegerSet(X)


def sumset_with_multiplicities(X, Y) -> dict[int, int]:
    """Map z -> r_{X+Y}(z) = #{(x, y) : x + y = z}, in increasing z."""
    xs = np.fromiter(as_set(X), dtype=np.int64)
    ys = np.fromiter(as_set(Y), dtype=np.int64)
    if not xs.size or not ys.size:
        return {}
    z, cnt = np.unique(np.add.outer(xs, ys), return_counts=True)
    return dict(zip(z.tolist(), cnt.tolist()))


def popular_sums(X, Y, s) -> IntegerSet:
    """P_s(X, Y): sums with at least s representations."""
    if s < 1:
        raise DomainError("popularity threshold must be at least 1")
    return IntegerSet(z for z, c in sumset_with_multiplicities(X, Y).items() if c >= s)


def _popular(X, Y, thr: float) -> IntegerSet:
    # every element of X + Y has at least one representation
    return popular_sums(X, Y, max(thr, 1))


def doubling_constant(X) -> Fraction:
    X = as_set(X)
    if not len(X):
        raise DomainError("doubling constant of the empty set is undefined")
    return Fraction(len(X.sumset), len(X))


def iterated_sumset(Y, n: int, m: int) -> IntegerSet:
    """nY - mY."""
    Y = as_set(Y)
    acc = IntegerSet([0])
    for _ in range(n):
        acc = acc + Y
    for _ in range(m):
        acc = acc - Y
    return acc


# --------------------------------------------------------------------------
# popular sum decomposition


@dataclass
class SideDecomposition:
    """Parts X_{i,g} = X_i ∩ (S_g + s_{i,g}) together with the leftover X_i*."""

    patterns: list[IntegerSet] = field(default_factory=list)  # S_g
    parts: list[list[IntegerSet]] = field(default_factory=list)  # [g][i]
    shifts: list[list[int | None]] = field(default_factory=list)  # [g][i], None if part empty
    rest: list[IntegerSet] = field(default_factory=list)

    @property
    def rounds(self) -> int:
        return len(self.patterns)


@dataclass
class PopularSumDecomposition:
    x: SideDecomposition
    y: SideDecomposition
    d: float
    p: float


def _decompose_side(Xs, Ys, d, p) -> SideDecomposition:
    n, m = len(Xs), len(Ys)
    Xs = [set(X) for X in Xs]
    out = SideDecomposition()
    limit = math.ceil(p * p)
    thr = 2 * d / p
    while True:
        P = [[_popular(Xs[i], Ys[j], thr) for j in range(m)] for i in range(n)]
        nonempty = np.array([[len(P[i][j]) > 0 for j in range(m)] for i in range(n)], dtype=bool).reshape(n, m)
        if nonempty.sum() * p <= n * m:
            break
        if out.rounds >= limit:
            raise RuntimeError("popular sum decomposition exceeded p^2 rounds")
        col = nonempty.sum(axis=0)
        j = int(np.argmax(col))  # most good rows, ties to the smallest j
        Yj = as_set(Ys[j])
        pattern = -Yj
        parts, shifts = [], []
        for i in range(n):
            if not nonempty[i, j]:
                parts.append(IntegerSet())
                shifts.append(None)
                continue
            mult = sumset_with_multiplicities(Xs[i], Yj)
            s = max(P[i][j], key=lambda z: (mult[z], -z))
            part = {x for x in Xs[i] if x - s in pattern}
            Xs[i] -= part
            parts.append(IntegerSet(part))
            shifts.append(int(s))
        out.patterns.append(pattern)
        out.parts.append(parts)
        out.shifts.append(shifts)
    out.rest = [IntegerSet(X) for X in Xs]
    return out


def popular_sum_decomposition(Xs, Ys, d: float, p: float) -> PopularSumDecomposition:
    """Split each X_i and Y_j into few shifted pieces of common patterns.

    Popular sums are computed exactly with threshold 2d/p.  Afterwards at most
    nm/p pairs (i, j) have a 2d/p-popular sum between X_i* and Y_j (and
    symmetrically for Y_j*).
    """
    if p < 1:
        raise DomainError("p must be at least 1")
    Xs = [as_set(X) for X in Xs]
    Ys = [as_set(Y) for Y in Ys]
    if any(len(X) > d for X in Xs) or any(len(Y) > d for Y in Ys):
        raise DomainError("all sets must have size at most d")
    xside = _decompose_side(Xs, Ys, d, p)
    yside = _decompose_side(Ys, Xs, d, p)
    return PopularSumDecomposition(xside, yside, d, p)


def popular_pair_count(Xs, Ys, thr: float) -> int:
    return sum(1 for X in Xs for Y in Ys if len(_popular(X, Y, thr)))


# --------------------------------------------------------------------------
# coverings


def greedy_cover(X, Y) -> IntegerSet:
    """Shifts S with X ⊆ Y + S, chosen greedily by maximal coverage.

    Ties go to the shift of smallest absolute value, then the smaller one.
    """
    X, Y = set(as_set(X)), as_set(Y)
    if X and not len(Y):
        raise DomainError("cannot cover a nonempty set with translates of the empty set")
    shifts = []
    ys = np.fromiter(Y, dtype=np.int64)
    while X:
        xs = np.fromiter(sorted(X), dtype=np.int64)
        z, cnt = np.unique(np.subtract.outer(xs, ys).ravel(), return_counts=True)
        best = cnt.max()
        cand = z[cnt == best]
        s = int(min(cand.tolist(), key=lambda v: (abs(v), v)))
        shifts.append(s)
        X -= {y + s for y in Y}
    return IntegerSet(shifts)


def greedy_cover_bound(X, Y) -> int:
    X, Y = as_set(X), as_set(Y)
    if len(X) <= 1:
        return len(X)
    return math.ceil(len(Y - X) / len(Y) * math.log(len(X)))


@dataclass
class BSGCover:
    rectangles: list[tuple[IntegerSet, IntegerSet]]
    remainder: set[tuple[int, int]]


def bsg_cover(X, Y, Z, L: int) -> BSGCover:
    """Cover the additive graph {(x, y) : x + y ∈ Z} by ≤ L rectangles plus a remainder.

    Heuristic: candidate rectangles are neighbourhoods of an uncovered pair
    (x0, y0), namely {x : x + y0 ∈ Z} × {y : x0 + y ∈ Z}; the candidate
    covering most uncovered pairs wins (ties: smaller sumset, then the
    smaller centre).  The remainder is exact.
    """
    X, Y, Z = as_set(X), as_set(Y), as_set(Z)
    zs = Z.as_set
    edges = {(x, y) for x in X for y in Y if x + y in zs}
    uncovered = set(edges)
    rects: list[tuple[IntegerSet, IntegerSet]] = []
    for _ in range(max(L, 0)):
        if not uncovered:
            break
        best = None
        for x0, y0 in sorted(uncovered):
            Xc = IntegerSet(x for x in X if x + y0 in zs)
            Yc = IntegerSet(y for y in Y if x0 + y in zs)
            gain = sum(1 for x in Xc for y in Yc if (x, y) in uncovered)
            key = (-gain, len(Xc + Yc), x0, y0)
            if best is None or key < best[0]:
                best = (key, Xc, Yc)
        _, Xc, Yc = best
        rects.append((Xc, Yc))
        uncovered -= {(x, y) for x in Xc for y in Yc}
    return BSGCover(rects, uncovered)


# --------------------------------------------------------------------------
# sum-order-preserving hashing


def verify_sum_order_preserving(Y, h) -> bool:
    """x1 + x2 < y1 + y2 must imply h(x1) + h(x2) < h(y1) + h(y2)."""
    ys = list(as_set(Y))
    if isinstance(h, dict):
        hv = [h[y] for y in ys]
    else:
        hv = list(h)
    if len(hv) != len(ys):
        raise DomainError("hash and domain differ in length")
    sums: dict[int, list[int]] = {}
    for a in range(len(ys)):
        for b in range(a, len(ys)):
            sums.setdefault(ys[a] + ys[b], []).append(hv[a] + hv[b])
    prev_max = None
    for z in sorted(sums):
        lo, hi = min(sums[z]), max(sums[z])
        if prev_max is not None and lo <= prev_max:
            return False
        prev_max = hi if prev_max is None else max(prev_max, hi)
    return True


@dataclass
class HashSearchResult:
    status: str  # "found" | "none" | "budget"
    domain: IntegerSet | None = None
    values: tuple[int, ...] | None = None
    nodes: int = 0

    def to_json(self) -> dict:
        if self.status != "found":
            return {"status": self.status}
        return {"status": "found", "domain": list(self.domain), "values": list(self.values)}


def _search_hash(ys: list[int], top: int, budget: list[int]):
    """Increasing h: ys -> {0..top} by backtracking; pairwise sum order is checked incrementally."""
    k = len(ys)
    h = [0] * k
    # pair sums of assigned prefixes: list of (x-sum, h-sum)
    def consistent(idx):
        # every new pair involves idx; compare with all pairs among 0..idx
        new = [(ys[a] + ys[idx], h[a] + h[idx]) for a in range(idx + 1)]
        for a in range(idx + 1):
            for b in range(a, idx + 1):
                s, hs = ys[a] + ys[b], h[a] + h[b]
                for ns, nh in new:
                    if (s < ns and not hs < nh) or (ns < s and not nh < hs):
                        return False
        return True

    def rec(idx, lo):
        if idx == k:
            return True
        for v in range(lo, top + 1):
            budget[0] -= 1
            if budget[0] < 0:
                raise _Budget
            h[idx] = v
            if consistent(idx) and rec(idx + 1, v + 1):
                return True
        return False

    return tuple(h) if rec(0, 0) else None


class _Budget(Exception):
    pass


def _full_domain_hash(xs: list[int], budget: list[int]):
    k = len(xs)
    for skip in range(k, -1, -1):
        budget[0] -= 1
        if budget[0] < 0:
            raise _Budget
        h = tuple(i if i < skip else i + 1 for i in range(k))
        if verify_sum_order_preserving(xs, h):
            return h
    return None


def sum_order_hash_search(X, budget: int = 200_000, full_search_limit: int = 6) -> HashSearchResult:
    """Find a largest Y ⊆ X with a sum-order-preserving h: Y -> {0..|X|}.

    Such an h is strictly increasing, so only increasing maps are explored.
    Subsets are tried by decreasing size when |X| ≤ ``full_search_limit``;
    larger X only tries Y = X.  ``budget`` caps the number of search nodes.

    For Y = X an increasing map into {0..|X|} skips exactly one value, so the
    |X| + 1 candidates are checked directly instead of by backtracking.
    """
    X = as_set(X)
    xs = list(X)
    if len(xs) <= 2:
        return HashSearchResult("found", X, tuple(range(len(xs))), 0)
    top = len(xs)
    left = [budget]
    sizes = range(len(xs), 0, -1) if len(xs) <= full_search_limit else [len(xs)]
    try:
        for size in sizes:
            if size == len(xs):
                h = _full_domain_hash(xs, left)
                if h is not None:
                    return HashSearchResult("found", X, h, budget - left[0])
                continue
            for Y in itertools.combinations(xs, size):
                h = _search_hash(list(Y), top, left)
                if h is not None:
                    return HashSearchResult("found", IntegerSet(Y), h, budget - left[0])
    except _Budget:
        return HashSearchResult("budget", nodes=budget)
    return HashSearchResult("none", nodes=budget - left[0])
