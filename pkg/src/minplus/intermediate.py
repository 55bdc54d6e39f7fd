"""Intermediate-complexity products, the reductions into them, and graph gadgets.

Each product has a direct triple-loop style definition (``*_brute``) that the
reductions are checked against.  Reductions return a ``ProductReduction``:
the two constructed matrices plus a decoder back to the min-plus product.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .addcomb import as_set, doubling_constant
from .core import MaskedMatrix, as_matrix, min_plus_brute
from .errors import DomainError, ShapeError


def _inner(A: MaskedMatrix, B: MaskedMatrix):
    if A.cols != B.rows:
        raise ShapeError(f"inner dimensions differ: A{A.shape} B{B.shape}")


def as_boolean(M, name: str = "matrix") -> np.ndarray:
    """0/1 matrix as a bool array; ⊥ or any other value is rejected."""
    if isinstance(M, MaskedMatrix):
        if not M.mask.all():
            raise DomainError(f"{name} must not contain ⊥")
        M = M.values
    arr = np.asarray(M)
    if arr.ndim != 2:
        if arr.size:
            raise ShapeError(f"{name} must be 2-d")
        arr = arr.reshape(0, 0)
    bad = np.argwhere((arr != 0) & (arr != 1))
    if bad.size:
        i, j = bad[0]
        raise DomainError(f"{name}[{i},{j}] = {arr[i, j]} is not boolean")
    return arr.astype(bool)


def _entries(*Ms: MaskedMatrix) -> list[int]:
    vals = [M.values[M.mask] for M in Ms]
    return sorted(set(np.concatenate(vals).tolist())) if vals else []


# --------------------------------------------------------------------------
# definitions


def min_product_brute(A, B01) -> MaskedMatrix:
    """C[i,j] = min A[i,k] over k with B[k,j] = 1."""
    A = as_matrix(A)
    B = as_boolean(B01, "B")
    if A.cols != B.shape[0]:
        raise ShapeError("inner dimensions differ")
    n1, n2 = A.shape
    n3 = B.shape[1]
    best = np.zeros((n1, n3), dtype=np.int64)
    have = np.zeros((n1, n3), dtype=bool)
    for k in range(n2):
        ok = A.mask[:, k, None] & B[None, k, :]
        cand = np.broadcast_to(A.values[:, k, None], (n1, n3))
        upd = ok & (~have | (cand < best))
        best[upd] = cand[upd]
        have |= ok
    return MaskedMatrix(best, have)


def min_max_brute(A, B) -> MaskedMatrix:
    """C[i,j] = min over k of max(A[i,k], B[k,j])."""
    A, B = as_matrix(A), as_matrix(B)
    _inner(A, B)
    n1, n2 = A.shape
    n3 = B.cols
    best = np.zeros((n1, n3), dtype=np.int64)
    have = np.zeros((n1, n3), dtype=bool)
    for k in range(n2):
        ok = A.mask[:, k, None] & B.mask[None, k, :]
        cand = np.maximum(A.values[:, k, None], B.values[None, k, :])
        upd = ok & (~have | (cand < best))
        best[upd] = cand[upd]
        have |= ok
    return MaskedMatrix(best, have)


def min_eq_brute(A, B) -> MaskedMatrix:
    """C[i,j] = min A[i,k] over k with A[i,k] = B[k,j]."""
    A, B = as_matrix(A), as_matrix(B)
    _inner(A, B)
    n1, n2 = A.shape
    n3 = B.cols
    best = np.zeros((n1, n3), dtype=np.int64)
    have = np.zeros((n1, n3), dtype=bool)
    for k in range(n2):
        ok = A.mask[:, k, None] & B.mask[None, k, :] & (A.values[:, k, None] == B.values[None, k, :])
        cand = np.broadcast_to(A.values[:, k, None], (n1, n3))
        upd = ok & (~have | (cand < best))
        best[upd] = cand[upd]
        have |= ok
    return MaskedMatrix(best, have)


def min_witness_brute(A01, B01) -> MaskedMatrix:
    """C[i,j] = smallest k with A[i,k] = B[k,j] = 1."""
    A, B = as_boolean(A01, "A"), as_boolean(B01, "B")
    if A.shape[1] != B.shape[0]:
        raise ShapeError("inner dimensions differ")
    # an index that is zero in all of A's column or B's row never witnesses
    live = np.flatnonzero(A.any(axis=0) & B.any(axis=1))
    both = A[:, live, None] & B[None, live, :]
    have = both.any(axis=1)
    first = live[both.argmax(axis=1)] if live.size else np.zeros(have.shape, dtype=np.int64)
    return MaskedMatrix(np.where(have, first, 0), have)


def min_product_via_min_max(A, B01) -> MaskedMatrix:
    """Min product computed as a min-max product with sentinels for B.

    1 becomes a value below every entry of A and 0 one above, so the max
    picks A[i,k] exactly where B[k,j] = 1; a result equal to the upper
    sentinel means no such k.
    """
    A = as_matrix(A)
    B = as_boolean(B01, "B")
    vals = A.values[A.mask]
    lo = int(vals.min()) - 1 if vals.size else -1
    hi = int(vals.max()) + 1 if vals.size else 1
    Bs = MaskedMatrix(np.where(B, lo, hi))
    C = min_max_brute(A, Bs)
    keep = C.mask & (C.values != hi)
    return C.restrict(keep)


# --------------------------------------------------------------------------
# reductions from min-plus


def _columns(inner: list[tuple], width: int) -> tuple[np.ndarray, ...]:
    arr = np.array(inner, dtype=np.int64).reshape(-1, width)
    return tuple(arr[:, c] for c in range(width))


@dataclass
class ProductReduction:
    """Constructed operands and the decoder back to A*B.

    ``inner`` labels the constructed inner dimension; ``decode`` maps the
    target product of (left, right) to the min-plus product.
    """

    left: object
    right: object
    inner: list[tuple]
    decode: Callable
    meta: dict = field(default_factory=dict)


def reduce_minplus_to_min_product(A, B) -> ProductReduction:
    """Inner index (k, x): A'[i,(k,x)] = A[i,k] + x and B'[(k,x),j] = [B[k,j] = x]."""
    A, B = as_matrix(A), as_matrix(B)
    _inner(A, B)
    X = _entries(A, B)
    n2 = A.cols
    inner = [(k, x) for k in range(n2) for x in X]
    K, Xv = _columns(inner, 2)
    Ap = A.values[:, K] + Xv[None, :]
    Am = A.mask[:, K]
    Bp = (B.mask[K, :] & (B.values[K, :] == Xv[:, None])).astype(np.int64)
    return ProductReduction(MaskedMatrix(Ap, Am), Bp, inner, lambda C: C, {"X": X})


def reduce_minplus_to_min_equality(A, B) -> ProductReduction:
    """Inner index (k, z), z in X - X: A' = 2A - z, B' = 2B + z, equal iff z = A - B."""
    A, B = as_matrix(A), as_matrix(B)
    _inner(A, B)
    X = _entries(A, B)
    Z = sorted({x - y for x in X for y in X})
    n2 = A.cols
    inner = [(k, z) for k in range(n2) for z in Z]
    K, Zv = _columns(inner, 2)
    Ap, Am = 2 * A.values[:, K] - Zv[None, :], A.mask[:, K]
    Bp, Bm = 2 * B.values[K, :] + Zv[:, None], B.mask[K, :]
    return ProductReduction(MaskedMatrix(Ap, Am), MaskedMatrix(Bp, Bm), inner, lambda C: C, {"X": X, "Z": Z})


def reduce_minplus_to_min_witness(A, B) -> ProductReduction:
    """Inner index (k, x, y) ordered by (x + y, k, x, y).

    A'[i,(k,x,y)] = [A[i,k] = x], B'[(k,x,y),j] = [B[k,j] = y].  The smallest
    common index in this order names a witness k and the value x + y.
    ``decode`` returns (values, witnesses) as two MaskedMatrix objects.
    """
    A, B = as_matrix(A), as_matrix(B)
    _inner(A, B)
    X = _entries(A, B)
    n1, n2 = A.shape
    n3 = B.cols
    inner = sorted(((k, x, y) for k in range(n2) for x in X for y in X), key=lambda e: (e[1] + e[2], e[0], e[1], e[2]))
    K, Xv, Yv = _columns(inner, 3)
    Ap = (A.mask[:, K] & (A.values[:, K] == Xv[None, :])).astype(np.int64)
    Bp = (B.mask[K, :] & (B.values[K, :] == Yv[:, None])).astype(np.int64)
    lab = np.array([[k, x + y] for k, x, y in inner], dtype=np.int64).reshape(-1, 2)

    def decode(W: MaskedMatrix):
        idx = np.where(W.mask, W.values, 0)
        if not lab.size:
            return MaskedMatrix.empty(n1, n3), MaskedMatrix.empty(n1, n3)
        return MaskedMatrix(lab[idx, 1], W.mask), MaskedMatrix(lab[idx, 0], W.mask)

    return ProductReduction(Ap, Bp, inner, decode, {"X": X})


# --------------------------------------------------------------------------
# bounded-difference and monotone transforms


def row_bd_violation(A: np.ndarray, c: int):
    """First (i, k) with |A[i,k] - A[i,k+1]| > c, or None."""
    if A.shape[1] < 2:
        return None
    bad = np.argwhere(np.abs(np.diff(A, axis=1)) > c)
    return tuple(int(v) for v in bad[0]) if bad.size else None


def is_row_bd(A: np.ndarray, c) -> bool:
    return row_bd_violation(np.asarray(A), c) is None


def is_col_bd(B: np.ndarray, c) -> bool:
    return row_bd_violation(np.asarray(B).T, c) is None


def is_row_monotone(A: np.ndarray, top) -> bool:
    A = np.asarray(A)
    return bool((A >= 0).all() and (A <= top).all() and (np.diff(A, axis=1) >= 0).all())


def is_col_monotone(B: np.ndarray, top) -> bool:
    B = np.asarray(B)
    return bool((B >= 0).all() and (B <= top).all() and (np.diff(B, axis=0) <= 0).all())


def distance_transform(B: np.ndarray, c: int) -> np.ndarray:
    """B'[k,j] = min over k' of B[k',j] + |k' - k|*c, by a forward and a backward pass."""
    B = np.asarray(B, dtype=np.int64)
    n = B.shape[0]
    BL = B.copy()
    for k in range(1, n):
        BL[k] = np.minimum(BL[k], BL[k - 1] + c)
    BR = B.copy()
    for k in range(n - 2, -1, -1):
        BR[k] = np.minimum(BR[k], BR[k + 1] + c)
    return np.minimum(BL, BR)


@dataclass
class MonotoneTransform:
    """A'*B' relates to A*B by row/column offsets and a fixed shift.

    (A*B)[i,j] = (A'*B')[i,j] + row_offset[i] + col_offset[j] - shift, and ⊥ on
    the columns in ``empty_cols`` (all-⊥ columns of B).
    """

    A: np.ndarray
    B: np.ndarray
    c: int
    row_offset: np.ndarray
    col_offset: np.ndarray
    shift: int
    empty_cols: np.ndarray
    universe: int

    def decode(self, P) -> MaskedMatrix:
        P = as_matrix(P)
        vals = P.values + self.row_offset[:, None] + self.col_offset[None, :] - self.shift
        mask = P.mask & ~self.empty_cols[None, :]
        return MaskedMatrix(vals, mask)

    def checks(self) -> dict[str, bool]:
        """The output predicates: monotone, bounded-difference (2c for A), universe O(n)."""
        return {
            "A_row_monotone": is_row_monotone(self.A, self.universe),
            "A_row_bd_2c": is_row_bd(self.A, 2 * self.c),
            "B_col_monotone": is_col_monotone(self.B, self.universe),
            "B_col_bd": is_col_bd(self.B, 2 * self.c),
        }


def monotone_bd_transform(A, B, c: int) -> MonotoneTransform:
    """Make A row-monotone and B column-monotone, both bounded-difference.

    A must be row-bounded-difference with constant c and free of ⊥.
    """
    A_m = as_matrix(A)
    B = as_matrix(B)
    _inner(A_m, B)
    c = int(c)
    if c < 0:
        raise DomainError("c must be non-negative")
    if not A_m.mask.all():
        i, k = np.argwhere(~A_m.mask)[0]
        raise DomainError(f"A[{i},{k}] is ⊥; a row-bounded-difference matrix has no ⊥")
    Av = A_m.values
    bad = row_bd_violation(Av, c)
    if bad is not None:
        i, k = bad
        raise DomainError(f"A is not row-bounded-difference at ({i},{k}): |{Av[i, k]} - {Av[i, k + 1]}| > {c}")
    n1, n = Av.shape
    # small universe for A: subtract row minima
    a = Av.min(axis=1) if n else np.zeros(n1, dtype=np.int64)
    A1 = Av - a[:, None]
    u = int(A1.max()) if A1.size else 0
    # small universe for B: cap at column minimum + 2u, fill ⊥ with the cap
    empty = ~B.mask.any(axis=0)
    bmin = np.where(empty, 0, np.where(B.mask, B.values, np.iinfo(np.int64).max).min(axis=0) if n else 0)
    cap = bmin + 2 * u
    B1 = np.where(B.mask, np.minimum(B.values, cap[None, :]), cap[None, :]) - bmin[None, :]
    # column-bounded-difference for B
    B2 = distance_transform(B1, c)
    # row-monotone A, column-monotone B
    k = np.arange(n)
    Ap = A1 + k[None, :] * c
    Bp = B2 + (n - 1 - k)[:, None] * c
    top = max(u + (n - 1) * c, 2 * u + (n - 1) * c, 0)
    return MonotoneTransform(Ap, Bp, c, a, bmin, (n - 1) * c, empty, top)


# --------------------------------------------------------------------------
# rank substitution for bounded-difference instances


@dataclass
class RankSubstitution:
    X: list[int]
    sums: list[int]
    f: dict[tuple[int, int], int]
    bad: set[tuple[int, int]]

    def rank(self, x, y) -> int:
        return self._pos[x + y]

    def __post_init__(self):
        self._pos = {s: i for i, s in enumerate(self.sums)}


def rank_substitution(X, L: int) -> RankSubstitution:
    """f(x, y) from rank(x, y) by capping the jumps of f(x, .) at L; bad pairs are those lifted."""
    X = list(as_set(X))
    sums = sorted({x + y for x in X for y in X})
    pos = {s: i for i, s in enumerate(sums)}
    f = {(x, y): pos[x + y] for x in X for y in X}
    for x in reversed(X):
        for idx in range(len(X) - 2, -1, -1):
            y, y2 = X[idx], X[idx + 1]
            if f[(x, y)] < f[(x, y2)] - L:
                f[(x, y)] = f[(x, y2)] - L
    bad = {(x, y) for (x, y), v in f.items() if v != pos[x + y]}
    return RankSubstitution(X, sums, f, bad)


def _check_uniform_regular(M: MaskedMatrix, D: int, name: str):
    from .exact_triangle.adjust import line_multiplicity

    p, q = M.shape
    for axis, length in ((1, q), (0, p)):
        over = np.argwhere(line_multiplicity(M, axis) * D > length)
        if over.size:
            i, j = over[0]
            line = "row" if axis == 1 else "column"
            raise DomainError(f"{name}[{i},{j}] = {M.values[i, j]} fills more than 1/{D} of its {line}")


def interpolate_row_bd(Ap: np.ndarray, gaps: list[int]) -> tuple[np.ndarray, np.ndarray]:
    """Insert gaps[c] dummy columns after column c so that adjacent entries differ by ≤ 1.

    Returns the padded matrix and the original column of each new column (-1 for dummies).
    """
    n1, m = Ap.shape
    cols, origin = [], []
    for c in range(m):
        cols.append(Ap[:, c])
        origin.append(c)
        if c + 1 < m:
            cur, nxt = Ap[:, c], Ap[:, c + 1]
            step = np.sign(nxt - cur)
            for s in range(1, gaps[c] + 1):
                cols.append(cur + step * np.minimum(s, np.abs(nxt - cur)))
                origin.append(-1)
    if not cols:
        return np.zeros((n1, 0), dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.stack(cols, axis=1).astype(np.int64), np.array(origin, dtype=np.int64)


def rank_substitution_bd_reduction(A, B, L: int, bd_solver: Callable = min_plus_brute, seed: int = 0, stats: dict | None = None) -> MaskedMatrix:
    """A*B from one row-bounded-difference product plus the bad pairs.

    Inputs must be |X|-uniform and 1/|X|-regular.  Good pairs go through
    A'[i,(k,y)] = f(A[i,k], y) against the 0/⊥ pattern of B, padded with
    interpolating columns; bad pairs are enumerated directly.  ``seed`` is
    accepted for interface symmetry; the reduction is deterministic.
    """
    A, B = as_matrix(A), as_matrix(B)
    _inner(A, B)
    L = int(L)
    if L < 1:
        raise DomainError("L must be >= 1")
    n1, n2 = A.shape
    n3 = B.cols
    X = _entries(A, B)
    st = stats if stats is not None else {}
    if not X:
        st.update({"X": 0, "bad_pairs": 0, "bad_bound": 0.0})
        return MaskedMatrix.empty(n1, n3)
    D = len(X)
    _check_uniform_regular(A, D, "A")
    _check_uniform_regular(B, D, "B")
    rs = rank_substitution(X, L)
    K = doubling_constant(X)
    top = len(rs.sums)  # sentinel for ⊥ in A, above every f value
    # good case
    inner = [(k, y) for k in range(n2) for y in X]
    Ap = np.zeros((n1, len(inner)), dtype=np.int64)
    Bp = np.zeros((len(inner), n3), dtype=bool)
    for c, (k, y) in enumerate(inner):
        col = [rs.f[(int(x), y)] if ok else top for x, ok in zip(A.values[:, k], A.mask[:, k])]
        Ap[:, c] = col
        Bp[c, :] = B.mask[k, :] & (B.values[k, :] == y)
    gaps = []
    for c in range(len(inner) - 1):
        same_k = inner[c][0] == inner[c + 1][0]
        gaps.append(L - 1 if same_k else top - 1)
    # a ⊥ block is constant, and f(x, .) has jumps ≤ L, so these gaps suffice
    App, origin = interpolate_row_bd(Ap, gaps)
    Bpp = np.zeros((App.shape[1], n3), dtype=bool)
    Bpp[origin >= 0] = Bp
    assert is_row_bd(App, 1)
    Cp = bd_solver(MaskedMatrix(App), MaskedMatrix(np.zeros(Bpp.shape, dtype=np.int64), Bpp))
    Cp = as_matrix(Cp)
    sel = np.array(rs.sums + [0], dtype=np.int64)
    good = Cp.mask & (Cp.values < top)
    best = np.where(good, sel[np.clip(Cp.values, 0, top)], 0)
    have = good.copy()
    # bad case
    for x, y in sorted(rs.bad):
        for k in range(n2):
            rows = A.mask[:, k] & (A.values[:, k] == x)
            cols = B.mask[k, :] & (B.values[k, :] == y)
            hit = rows[:, None] & cols[None, :]
            upd = hit & (~have | (x + y < best))
            best[upd] = x + y
            have |= hit
    st.update(
        {
            "X": D,
            "sumset": len(rs.sums),
            "K": str(K),
            "L": L,
            "bad_pairs": len(rs.bad),
            "bad_bound": float(K * D * D / L),
            "padded_inner": int(App.shape[1]),
        }
    )
    return MaskedMatrix(best, have)


# --------------------------------------------------------------------------
# graphs


@dataclass
class WeightedGraph:
    n: int
    directed: bool
    edges: list[tuple[int, int, int]]
    node_weights: list[int] | None = None
    layers: dict[str, list[int]] = field(default_factory=dict)

    def __post_init__(self):
        for a, b, w in self.edges:
            if a == b:
                raise DomainError(f"self-loop at {a}")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise DomainError(f"edge ({a},{b}) out of range")
        if self.node_weights is not None and len(self.node_weights) != self.n:
            raise DomainError("one node weight per vertex is required")

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "directed": self.directed,
            "edges": [[int(a), int(b), int(w)] for a, b, w in self.edges],
            "node_weights": None if self.node_weights is None else [int(w) for w in self.node_weights],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "WeightedGraph":
        return cls(int(obj["n"]), bool(obj["directed"]), [tuple(e) for e in obj["edges"]], obj.get("node_weights"))

    def adjacency(self) -> list[list[tuple[int, int]]]:
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for a, b, w in self.edges:
            adj[a].append((b, w))
            if not self.directed:
                adj[b].append((a, w))
        return adj


def dijkstra(g: WeightedGraph, source: int, adj=None) -> list[float]:
    """Single-source distances; a node's weight is charged on leaving it, the target's added at the end."""
    adj = adj if adj is not None else g.adjacency()
    nw = g.node_weights or [0] * g.n
    if any(w < 0 for _, _, w in g.edges) or any(w < 0 for w in nw):
        raise DomainError("negative weights")
    dist = [math.inf] * g.n
    dist[source] = 0
    heap = [(0, source)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for b, w in adj[v]:
            nd = d + nw[v] + w
            if nd < dist[b]:
                dist[b] = nd
                heapq.heappush(heap, (nd, b))
    return [d + nw[v] if d < math.inf else math.inf for v, d in enumerate(dist)]


def layer_distances(g: WeightedGraph, src: str = "I", dst: str = "J") -> np.ndarray:
    adj = g.adjacency()
    S, T = g.layers[src], g.layers[dst]
    out = np.full((len(S), len(T)), math.inf)
    for a, s in enumerate(S):
        d = dijkstra(g, s, adj)
        out[a] = [d[t] for t in T]
    return out


@dataclass
class Gadget:
    graph: WeightedGraph
    decode: Callable
    meta: dict = field(default_factory=dict)

    def solve(self) -> MaskedMatrix:
        return self.decode(layer_distances(self.graph))


def node_weighted_gadget(A, B) -> Gadget:
    """Undirected node-weighted graph on I, K1 = [n2]xX, K2 = [n2]xX, J.

    I–J distances are (A*B)[i,j] + 40u with u = max(1, max |x|); distances
    above 42u mean ⊥.
    """
    A, B = as_matrix(A), as_matrix(B)
    _inner(A, B)
    n1, n2 = A.shape
    n3 = B.cols
    X = _entries(A, B)
    if len(X) > max(n2, 1):
        raise DomainError(f"|X| = {len(X)} exceeds the inner dimension {n2}")
    u = max([1] + [abs(x) for x in X])
    xi = {x: p for p, x in enumerate(X)}
    m = len(X)
    I = list(range(n1))
    K1 = [n1 + k * m + p for k in range(n2) for p in range(m)]
    K2 = [n1 + n2 * m + k * m + p for k in range(n2) for p in range(m)]
    J = [n1 + 2 * n2 * m + j for j in range(n3)]
    n = n1 + 2 * n2 * m + n3
    w = [10 * u] * n
    for k in range(n2):
        for p, x in enumerate(X):
            w[K1[k * m + p]] = 10 * u + x
            w[K2[k * m + p]] = 10 * u + x
    edges = []
    for i, k in zip(*np.nonzero(A.mask)):
        edges.append((I[i], K1[k * m + xi[int(A.values[i, k])]], 0))
    for k, j in zip(*np.nonzero(B.mask)):
        edges.append((K2[k * m + xi[int(B.values[k, j])]], J[j], 0))
    for k in range(n2):
        for p in range(m):
            for p2 in range(m):
                edges.append((K1[k * m + p], K2[k * m + p2], 0))
    g = WeightedGraph(n, False, edges, w, {"I": I, "K1": K1, "K2": K2, "J": J})

    def decode(dist: np.ndarray) -> MaskedMatrix:
        ok = dist <= 42 * u
        return MaskedMatrix(np.where(ok, dist, 40 * u).astype(np.int64) - 40 * u, ok)

    return Gadget(g, decode, {"u": u, "offset": 40 * u, "threshold": 42 * u, "X": len(X), "vertex_bound": n1 + n3 + 2 * n2 * m})


def min_plus_to_apsp_graph(A, B, variant: str = "directed-layered", u: int | None = None) -> Gadget:
    """Graph whose I–J distances encode A*B.

    directed-layered: entries in {0..u}; q = max(1, floor(n2*u/n)), p = floor(u/q) + 1,
    middle paths (k,-p) -> ... -> (k,p) with edges of weight q; exact distances.
    undirected-3layer: 0 <= entries < u; edge weights A + u and B + u; distances
    minus 2u, where anything ≥ 4u means ⊥.
    """
    A, B = as_matrix(A), as_matrix(B)
    _inner(A, B)
    n1, n2 = A.shape
    n3 = B.cols
    X = _entries(A, B)
    if X and X[0] < 0:
        raise DomainError("entries must be non-negative")
    if variant == "directed-layered":
        u = (X[-1] if X else 0) if u is None else int(u)
        if X and X[-1] > u:
            raise DomainError(f"entry {X[-1]} exceeds u = {u}")
        n = max(n1, n3, 1)
        if n2 > n or u > n:
            raise DomainError(f"directed gadget needs n2, u <= n = {n}")
        q = max(1, (n2 * u) // n)
        p = u // q + 1
        I = list(range(n1))
        width = 2 * p + 1
        Kv = lambda k, h: n1 + k * width + (h + p)  # noqa: E731
        J = [n1 + n2 * width + j for j in range(n3)]
        N = n1 + n2 * width + n3
        edges = []
        for i, k in zip(*np.nonzero(A.mask)):
            a = int(A.values[i, k])
            edges.append((I[i], Kv(k, -(a // q)), a % q))
        for k, j in zip(*np.nonzero(B.mask)):
            b = int(B.values[k, j])
            edges.append((Kv(k, b // q), J[j], b % q))
        for k in range(n2):
            for h in range(-p, p):
                edges.append((Kv(k, h), Kv(k, h + 1), q))
        g = WeightedGraph(N, True, edges, None, {"I": I, "J": J})

        def decode(dist: np.ndarray) -> MaskedMatrix:
            ok = np.isfinite(dist)
            return MaskedMatrix(np.where(ok, dist, 0).astype(np.int64), ok)

        meta = {"q": q, "p": p, "u": u, "vertex_bound": n1 + n3 + n2 * width, "max_weight": q}
        return Gadget(g, decode, meta)
    if variant == "undirected-3layer":
        u = (X[-1] + 1 if X else 1) if u is None else int(u)
        if X and X[-1] >= u:
            raise DomainError(f"entry {X[-1]} is not below u = {u}")
        I = list(range(n1))
        K = [n1 + k for k in range(n2)]
        J = [n1 + n2 + j for j in range(n3)]
        edges = [(I[i], K[k], int(A.values[i, k]) + u) for i, k in zip(*np.nonzero(A.mask))]
        edges += [(K[k], J[j], int(B.values[k, j]) + u) for k, j in zip(*np.nonzero(B.mask))]
        g = WeightedGraph(n1 + n2 + n3, False, edges, None, {"I": I, "K": K, "J": J})

        def decode(dist: np.ndarray) -> MaskedMatrix:
            ok = dist < 4 * u
            return MaskedMatrix(np.where(ok, dist, 2 * u).astype(np.int64) - 2 * u, ok)

        return Gadget(g, decode, {"u": u, "offset": 2 * u, "threshold": 4 * u, "vertex_bound": n1 + n2 + n3})
    raise ValueError(f"unknown variant {variant!r}")
