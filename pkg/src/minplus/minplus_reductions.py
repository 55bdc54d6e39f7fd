"""Min-Plus reductions: small universe, doubling, and hashing-based compression.

Each product reduction only ever updates an output cell with a true sum
A[i,k] + B[k,j], so it can never underestimate; the sampling and the
solvers it calls decide which sums get proposed.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .addcomb import IntegerSet, as_set, greedy_cover, sum_order_hash_search
from .core import MaskedMatrix, TriangleInstance, as_matrix, min_plus_brute, min_plus_small_universe
from .errors import DomainError, HashUnavailable, ShapeError
from .exact_triangle.adjust import has_triangle
from .exact_triangle.lowdoubling import min_plus_low_doubling
from .exact_triangle.steps import Knobs, reduce_low_rank_to_low_doubling, solve_low_rank
from .exact_triangle.witnesses import first_witness_min_plus, list_witnesses_exact_triangle, list_witnesses_min_plus
from .rank import RankDecomposition


@dataclass
class SamplingConfig:
    """Constants shared by the sampling loops.

    Repetition counts and rates are ``rep_constant`` times the logarithmic
    factor ln(n1*n3) of the corresponding expression.  ``lister`` selects
    the witness lister (``probe`` is deterministic; ``sampled`` is the
    randomized bit-decoding scheme).
    """

    rep_constant: float = 4.0
    lister: str = "probe"
    lister_reps: int | None = None
    knobs: Knobs = field(default_factory=Knobs)

    def to_json(self) -> dict:
        return {
            "rep_constant": self.rep_constant,
            "lister": self.lister,
            "lister_reps": self.lister_reps,
            "knobs": self.knobs.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SamplingConfig":
        kn = dict(obj.get("knobs", {}))
        kn = {k: v for k, v in kn.items() if k in Knobs.__dataclass_fields__}
        if "K" in kn:
            kn["K"] = Fraction(str(kn["K"]))
        return cls(
            rep_constant=float(obj.get("rep_constant", 4.0)),
            lister=obj.get("lister", "probe"),
            lister_reps=obj.get("lister_reps"),
            knobs=Knobs(**kn),
        )

    @classmethod
    def load(cls, path) -> "SamplingConfig":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _log_factor(n1: int, n3: int) -> float:
    return math.log(max(n1 * n3, 2))


# --------------------------------------------------------------------------
# pseudo-witnesses


@dataclass
class PseudoWitnessProfile:
    """Pseudo-witness counts per output cell, one array per threshold q.

    kind ``slack``: k counts for q if A[i,k] + B[k,j] < (A*B)[i,j] + q.
    kind ``truncated``: k counts for q if it is a witness of
    floor(A/q) * floor(B/q).
    """

    kind: str
    thresholds: tuple[int, ...]
    counts: dict[int, np.ndarray]
    witnesses: np.ndarray

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "thresholds": list(self.thresholds),
            "witnesses": self.witnesses.tolist(),
            "counts": {str(q): self.counts[q].tolist() for q in self.thresholds},
        }


def _sum_tensor(A: MaskedMatrix, B: MaskedMatrix):
    S = A.values[:, :, None] + B.values[None, :, :]
    ok = A.mask[:, :, None] & B.mask[None, :, :]
    return S, ok


def pseudo_witness_profile(A, B, thresholds, kind: str = "slack") -> PseudoWitnessProfile:
    A, B = as_matrix(A), as_matrix(B)
    thresholds = tuple(sorted(int(q) for q in thresholds))
    if any(q < 1 for q in thresholds):
        raise DomainError("thresholds must be >= 1")
    S, ok = _sum_tensor(A, B)
    P = min_plus_brute(A, B)
    wit = (ok & (S == P.values[:, None, :])).sum(axis=1)
    counts = {}
    for q in thresholds:
        if kind == "slack":
            counts[q] = (ok & (S < P.values[:, None, :] + q)).sum(axis=1)
        elif kind == "truncated":
            A1, B1 = A.map_values(lambda v: v // q), B.map_values(lambda v: v // q)
            S1, _ = _sum_tensor(A1, B1)
            P1 = min_plus_brute(A1, B1)
            counts[q] = (ok & (S1 == P1.values[:, None, :])).sum(axis=1)
        else:
            raise ValueError(f"unknown pseudo-witness kind {kind!r}")
    return PseudoWitnessProfile(kind, thresholds, counts, wit)


# --------------------------------------------------------------------------
# helpers


class _Best:
    """Running minimum over proposed true sums."""

    def __init__(self, A: MaskedMatrix, B: MaskedMatrix):
        self.A, self.B = A, B
        self.vals = np.zeros((A.rows, B.cols), dtype=np.int64)
        self.mask = np.zeros((A.rows, B.cols), dtype=bool)
        self.updates = 0

    def offer(self, i, k, j):
        A, B = self.A, self.B
        if not (A.mask[i, k] and B.mask[k, j]):
            return
        s = int(A.values[i, k]) + int(B.values[k, j])
        self.updates += 1
        if not self.mask[i, j] or s < self.vals[i, j]:
            self.vals[i, j] = s
            self.mask[i, j] = True

    def offer_array(self, W: np.ndarray, cols: np.ndarray | None = None):
        """Offer k = W[i, j] (mapped through ``cols``) for every cell with W >= 0."""
        i, j = np.nonzero(W >= 0)
        if not i.size:
            return
        k = W[i, j] if cols is None else cols[W[i, j]]
        ok = self.A.mask[i, k] & self.B.mask[k, j]
        i, j, k = i[ok], j[ok], k[ok]
        s = self.A.values[i, k] + self.B.values[k, j]
        self.updates += int(i.size)
        better = ~self.mask[i, j] | (s < self.vals[i, j])
        self.vals[i[better], j[better]] = s[better]
        self.mask[i, j] = True

    def offer_cells(self, lists: dict):
        for (i, j), ks in lists.items():
            for k in ks:
                self.offer(i, k, j)

    def offer_columns(self, keep: np.ndarray):
        """Brute force over the inner indices in ``keep``."""
        if not keep.any():
            return
        P = min_plus_brute(self.A.restrict(np.broadcast_to(keep[None, :], self.A.shape)), self.B)
        self.merge(P)

    def merge(self, P: MaskedMatrix):
        upd = P.mask & (~self.mask | (P.values < self.vals))
        self.vals[upd] = P.values[upd]
        self.mask |= P.mask

    def result(self) -> MaskedMatrix:
        return MaskedMatrix(self.vals, self.mask)


def _cut(M: MaskedMatrix, keep: np.ndarray) -> MaskedMatrix:
    return M.restrict(keep)


def _cols(M: MaskedMatrix, K: np.ndarray) -> MaskedMatrix:
    return M.restrict(np.broadcast_to(K[None, :], M.shape))


def _rows(M: MaskedMatrix, K: np.ndarray) -> MaskedMatrix:
    return M.restrict(np.broadcast_to(K[:, None], M.shape))


def _nonneg(A: MaskedMatrix, B: MaskedMatrix):
    if (A.nnz and A.values[A.mask].min() < 0) or (B.nnz and B.values[B.mask].min() < 0):
        raise DomainError("entries must be nonnegative")
    top = 0
    for M in (A, B):
        if M.nnz:
            top = max(top, int(M.values[M.mask].max()))
    return top


def _check_inner(A: MaskedMatrix, B: MaskedMatrix):
    if A.cols != B.rows:
        raise ShapeError(f"inner dimensions differ: {A.cols} vs {B.rows}")


def _small_default(u: int) -> Callable:
    def solve(A: MaskedMatrix, B: MaskedMatrix) -> MaskedMatrix:
        return min_plus_small_universe(A, B, u)

    return solve


# --------------------------------------------------------------------------
# small-universe reduction


def small_universe_reduction(
    A,
    B,
    n2p: int,
    t: float = 2,
    small_solver: Callable | None = None,
    triangle_solver: Callable | None = None,
    seed: int = 0,
    config: SamplingConfig | None = None,
    stats: dict | None = None,
) -> MaskedMatrix:
    """A*B for entries in {0..u} from products over the universe {0..n2p}.

    ``small_solver(A, B)`` must handle entries ≤ n2p.  ``triangle_solver(inst, d)``
    answers Exact Triangle given a decomposition d of the third matrix
    (default: the low-rank pipeline).  Popular pairs go through low-rank
    Exact Triangle, unpopular ones through sampled restricted products.
    """
    A, B = as_matrix(A), as_matrix(B)
    _check_inner(A, B)
    _nonneg(A, B)
    n2p = int(n2p)
    if n2p < 1 or (A.cols and n2p > A.cols):
        raise DomainError(f"n2' must lie in 1..n2, got {n2p}")
    if t < 1:
        raise DomainError("t must be >= 1")
    cfg = config or SamplingConfig()
    small = small_solver or _small_default(n2p)
    tri = triangle_solver or (lambda I, d: solve_low_rank(I, d, cfg.knobs))
    rng = np.random.default_rng(seed)
    st = stats if stats is not None else {}
    st.setdefault("depth", 0)
    for key in ("small_calls", "triangle_calls", "unpopular_rounds", "base_cases"):
        st.setdefault(key, 0)

    def small_call(P, Q):
        st["small_calls"] += 1
        return small(P, Q)

    def tri_call(I, d):
        st["triangle_calls"] += 1
        return tri(I, d)

    def lister_seed():
        return int(rng.integers(0, 2**63))

    n1, n2 = A.shape
    n3 = B.cols
    lg = _log_factor(n1, n3)

    def rec(A: MaskedMatrix, B: MaskedMatrix, depth: int) -> MaskedMatrix:
        st["depth"] = max(st["depth"], depth)
        u = _nonneg(A, B)
        if u <= n2p:
            st["base_cases"] += 1
            return small_call(A, B)
        half = rec(A.map_values(lambda v: v // 2), B.map_values(lambda v: v // 2), depth + 1)
        Ct = half.map_values(lambda v: 2 * v)  # Ct <= A*B <= Ct + 2
        q = -(-u // n2p)
        c = -(-q // 2)
        best = _Best(A, B)
        for a in (0, 1):
            Aa = _cut(A, A.mask & ((2 * (A.values % q) >= q) == bool(a))).map_values(lambda v: v - a * c)
            if not Aa.nnz:
                continue
            for b in (0, 1):
                Bb = _cut(B, B.mask & ((2 * (B.values % q) >= q) == bool(b))).map_values(lambda v: v - b * c)
                if not Bb.nnz:
                    continue
                off = (a + b) * c
                A1, B1 = Aa.map_values(lambda v: v // q), Bb.map_values(lambda v: v // q)
                _unpopular(A1, B1, best)
                _popular(Aa, Bb, A1, B1, Ct, off, q, best)
        return best.result()

    def _unpopular(A1, B1, best):
        rho = n2p / (2 * t * n2)
        reps = math.ceil(cfg.rep_constant / rho * lg)
        live = A1.mask.any(axis=0) & B1.mask.any(axis=1)
        # the probe lister is deterministic, so a repeated sample adds nothing
        seen = set()
        for _ in range(reps):
            idx = np.flatnonzero((rng.random(n2) < rho) & live)
            if idx.size == 0:
                continue
            st["unpopular_rounds"] += 1
            if cfg.lister == "probe":
                key = idx.tobytes()
                if key in seen:
                    continue
                seen.add(key)
            # restricting to K and compacting to the columns of K are the same product
            P = MaskedMatrix._trusted(A1.values[:, idx], A1.mask[:, idx])
            Q = MaskedMatrix._trusted(B1.values[idx, :], B1.mask[idx, :])
            W = first_witness_min_plus(P, Q, small_call, lister_seed(), cfg.lister, cfg.lister_reps)
            best.offer_array(W, idx)

    def _popular(Aa, Bb, A1, B1, Ct, off, q, best):
        rate = min(1.0, cfg.rep_constant * n2p / (t * n2) * lg)
        for z in (0, 1, 2):
            K = rng.random(n2) < rate
            idx = np.flatnonzero(K)
            if idx.size == 0:
                continue
            U1, V1 = A1.values[:, idx], B1.values[idx, :]
            P1, Q1 = MaskedMatrix(U1, A1.mask[:, idx]), MaskedMatrix(V1, B1.mask[idx, :])
            R1 = small_call(P1, Q1)
            target = Ct.values + z - off
            keep = Ct.mask & R1.mask & (np.floor_divide(target, q) == R1.values)
            if not keep.any():
                continue
            S1 = first_witness_min_plus(P1, Q1, small_call, lister_seed(), cfg.lister, cfg.lister_reps, C=R1)
            keep &= S1 >= 0
            r1 = idx.size
            U = (q * np.where(P1.mask, U1, 0))[:, :, None] + np.arange(q)[None, None, :]
            V = np.repeat(q * np.where(Q1.mask, V1, 0), q, axis=0)
            S = np.where(keep, S1 * q + np.mod(target, q), -1)
            d = RankDecomposition(r1 * q, U.reshape(n1, r1 * q), V, S)
            R = d.matrix()
            inst = TriangleInstance(Aa, Bb, R)
            if not has_triangle(inst):
                continue
            W = list_witnesses_exact_triangle(
                inst, 1, lambda I: tri_call(I, d), lister_seed(), cfg.lister, cfg.lister_reps, families=("c",)
            )["c"]
            for (i, j), ks in W.items():
                for k in ks:
                    best.offer(i, k, j)

    return rec(A, B, 0)


# --------------------------------------------------------------------------
# doubling reduction


def _sampled_rank_product(A: MaskedMatrix, B: MaskedMatrix, K: np.ndarray):
    """R = A[:, K] * B[K, :] with its rank-|K| decomposition."""
    idx = np.flatnonzero(K)
    n1, n3 = A.rows, B.cols
    U = np.where(A.mask[:, idx], A.values[:, idx], 0)
    V = np.where(B.mask[idx, :], B.values[idx, :], 0)
    S = np.full((n1, n3), -1, dtype=np.int64)
    best = np.zeros((n1, n3), dtype=np.int64)
    for pos, k in enumerate(idx):
        ok = A.mask[:, k][:, None] & B.mask[k, :][None, :]
        s = A.values[:, k][:, None] + B.values[k, :][None, :]
        upd = ok & ((S < 0) | (s < best))
        best[upd] = s[upd]
        S[upd] = pos
    return RankDecomposition(idx.size, U, V, S)


def _scaled_decomposition(d: RankDecomposition, level: int, z: int) -> RankDecomposition:
    """Decomposition of floor(R / 2**level) - z from one of R (rank doubles for the carry)."""
    h = 1 << level
    U, V, S = d.U, d.V, d.S
    n1, n3 = S.shape
    live = S >= 0
    Sc = np.where(live, S, 0)
    ii = np.arange(n1)[:, None]
    jj = np.arange(n3)[None, :]
    carry = (np.mod(U[ii, Sc], h) + np.mod(V[Sc, jj], h)) >= h
    Up = np.stack([(U >> level) - z, (U >> level) + 1 - z], axis=2).reshape(n1, 2 * d.r)
    Vp = np.repeat(V >> level, 2, axis=0)
    Sp = np.where(live, 2 * S + carry, -1)
    return RankDecomposition(2 * d.r, Up, Vp, Sp)


def _residue_part(M: MaskedMatrix, level: int, x: int) -> MaskedMatrix:
    """floor(M / 2**level) on entries whose residue mod 2**level lies in the x-th half."""
    h = 1 << level
    keep = M.mask & ((2 * np.mod(M.values, h) >= h) == bool(x))
    return M.restrict(keep).map_values(lambda v: v >> level)


def doubling_reduction(
    A,
    B,
    K=2,
    solver: Callable = min_plus_low_doubling,
    seed: int = 0,
    t: float | None = None,
    config: SamplingConfig | None = None,
    stats: dict | None = None,
) -> MaskedMatrix:
    """A*B via low-rank-to-low-doubling reductions over all scales.

    ``solver(P, Q)`` computes min-plus products of the uniform, regular,
    low-doubling instances the reductions emit.  t defaults to max(2, ceil(K)).
    """
    A, B = as_matrix(A), as_matrix(B)
    _check_inner(A, B)
    K = Fraction(K).limit_denominator(10**6)
    if K < 1:
        raise DomainError("K must be >= 1")
    cfg = config or SamplingConfig()
    t = max(2, math.ceil(K)) if t is None else t
    if t < 1:
        raise DomainError("t must be >= 1")
    knobs = Knobs(**{**cfg.knobs.__dict__, "K": K})
    rng = np.random.default_rng(seed)
    st = stats if stats is not None else {}
    for key in ("levels", "reductions", "emitted", "triples", "solver_calls"):
        st.setdefault(key, 0)
    n1, n2 = A.shape
    n3 = B.cols
    out = MaskedMatrix.empty(n1, n3)
    if not (A.nnz and B.nnz):
        return out
    a0 = int(A.values[A.mask].min())
    b0 = int(B.values[B.mask].min())
    As, Bs = A.map_values(lambda v: v - a0), B.map_values(lambda v: v - b0)
    u = _nonneg(As, Bs)
    L = u.bit_length()  # floor(A / 2**L) is 0 everywhere
    best = _Best(As, Bs)
    rate = min(1.0, cfg.rep_constant * _log_factor(n1, n3) / t)

    def solve(P, Q):
        st["solver_calls"] += 1
        return solver(P, Q)

    def lister_seed():
        return int(rng.integers(0, 2**63))

    # exceptionally popular: some sampled k is a witness
    best.offer_columns(rng.random(n2) < rate)

    # exceptionally unpopular: few k with both entries finite
    AL, BL = As.map_values(lambda v: v >> L), Bs.map_values(lambda v: v >> L)
    best.offer_cells(list_witnesses_min_plus(AL, BL, math.ceil(t), solve, lister_seed(), cfg.lister, cfg.lister_reps))

    # ordinary pairs: rank-|K| approximation R, then every scale
    d = _sampled_rank_product(As, Bs, rng.random(n2) < rate)
    if d.r:
        for level in range(L + 1):
            st["levels"] += 1
            for x in (0, 1):
                Ax = _residue_part(As, level, x)
                if not Ax.nnz:
                    continue
                for y in (0, 1):
                    By = _residue_part(Bs, level, y)
                    if not By.nnz:
                        continue
                    for z in range(4):
                        dz = _scaled_decomposition(d, level, z)
                        inst = TriangleInstance(Ax, By, dz.matrix())
                        if not has_triangle(inst):
                            continue
                        st["reductions"] += 1
                        red = reduce_low_rank_to_low_doubling(inst, dz, knobs, "C")
                        st["triples"] += len(red.triples)
                        for i, k, j in red.triples:
                            best.offer(i, k, j)
                        for adj in red.instances:
                            st["emitted"] += 1
                            J = adj.instance
                            W = list_witnesses_min_plus(J.A, J.B, math.ceil(t), solve, lister_seed(), cfg.lister, cfg.lister_reps)
                            best.offer_cells(W)
    res = best.result()
    return res.map_values(lambda v: v + a0 + b0)


# --------------------------------------------------------------------------
# hash-based universe compression


@dataclass
class HashProvision:
    domain: IntegerSet
    values: tuple[int, ...]

    def table(self) -> dict[int, int]:
        return dict(zip(self.domain, self.values))


def default_hash_source(X) -> HashProvision:
    res = sum_order_hash_search(X)
    if res.status != "found":
        raise HashUnavailable(f"hash search ended with status {res.status!r}")
    return HashProvision(res.domain, res.values)


def hash_universe_compression(
    A,
    B,
    hash_source: Callable = default_hash_source,
    small_solver: Callable | None = None,
    seed: int = 0,
    config: SamplingConfig | None = None,
    stats: dict | None = None,
) -> MaskedMatrix:
    """A*B from products of hashed shifts (A - s, B - t) for s, t in a cover S.

    ``hash_source(X)`` returns a HashProvision (Y ⊆ X and an order-preserving
    h on Y) or raises HashUnavailable.
    """
    A, B = as_matrix(A), as_matrix(B)
    _check_inner(A, B)
    cfg = config or SamplingConfig()
    rng = np.random.default_rng(seed)
    st = stats if stats is not None else {}
    n1, n3 = A.rows, B.cols
    X = as_set(np.concatenate([A.values[A.mask], B.values[B.mask]]).tolist())
    if not len(X):
        return MaskedMatrix.empty(n1, n3)
    small = small_solver or _small_default(len(X))
    prov = hash_source(X)
    table = prov.table()
    S = greedy_cover(X, prov.domain)
    st.update({"X": len(X), "Y": len(prov.domain), "shifts": len(S), "pairs": len(S) ** 2})
    best = _Best(A, B)
    for s in S:
        As = _hashed(A, s, table)
        if not As.nnz:
            continue
        for tt in S:
            Bt = _hashed(B, tt, table)
            if not Bt.nnz:
                continue
            W = list_witnesses_min_plus(As, Bt, 1, small, int(rng.integers(0, 2**63)), cfg.lister, cfg.lister_reps)
            best.offer_cells(W)
    return best.result()


def _hashed(M: MaskedMatrix, shift: int, table: dict[int, int]) -> MaskedMatrix:
    vals = np.zeros(M.shape, dtype=np.int64)
    mask = np.zeros(M.shape, dtype=bool)
    for i, j in zip(*np.nonzero(M.mask)):
        y = int(M.values[i, j]) - shift
        if y in table:
            vals[i, j] = table[y]
            mask[i, j] = True
    return MaskedMatrix(vals, mask)


def compressed_instances(A, B, prov: HashProvision, S) -> dict[tuple[int, int], tuple[MaskedMatrix, MaskedMatrix]]:
    """The hashed pair (A_s, B_t) for every shift pair; used by the argmin census."""
    A, B = as_matrix(A), as_matrix(B)
    table = prov.table()
    return {(s, t): (_hashed(A, s, table), _hashed(B, t, table)) for s in S for t in S}
