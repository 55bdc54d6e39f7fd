"""Reductions from low-rank Exact Triangle down to low-doubling instances.

Each step maps a source instance to a ReductionOutput: potential-adjusted
instances that carry constraint tags, plus triples listed explicitly.  Every
exact triangle of the source survives in one of the two.  Enumerations that
the analysis performs pair by pair are done here with boolean tensors; the
sets that land in the output are the same.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from ..addcomb import _popular, bsg_cover, popular_sum_decomposition
from ..core import MaskedMatrix, TriangleFlags, TriangleInstance, exact_triangle_tensor
from ..errors import DomainError, RecursionGuardError
from ..rank import RankDecomposition, regularize_decomposition
from .adjust import (
    ROWS_FIRST,
    THIRD_SLOT,
    Orientation,
    PotentialAdjustment,
    ReductionOutput,
    doubling_tag,
    fmt_num,
    has_triangle,
    is_regular,
    line_distinct,
    line_multiplicity,
    parse_tag,
    uniformity,
)
from .lowdoubling import solve_uniform_low_doubling


@dataclass
class Knobs:
    """Parameters of the reduction chain.

    t drives the slice-uniform and uniform steps, p and q default to t**2
    and t**10.  q_reg is the heaviness factor of the regularity step, R the
    selector regularity constant (None: 64*ceil(log2(nm)+1)), L the number
    of structured pieces and K the doubling target of the last step.
    """

    t: int = 2
    p: float | None = None
    q: float | None = None
    q_reg: float | None = None
    R: float | None = None
    L: int = 2
    K: Fraction = Fraction(2)
    max_depth: int = 64

    def __post_init__(self):
        self.K = Fraction(self.K).limit_denominator(10**6)

    @property
    def p_(self) -> float:
        return self.t**2 if self.p is None else self.p

    @property
    def q_(self) -> float:
        return self.t**10 if self.q is None else self.q

    @property
    def q_reg_(self) -> float:
        return self.t**10 if self.q_reg is None else self.q_reg

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "p": self.p_,
            "q": self.q_,
            "q_reg": self.q_reg_,
            "R": self.R,
            "L": self.L,
            "K": fmt_num(self.K),
            "max_depth": self.max_depth,
        }


def _exact(I: TriangleInstance) -> np.ndarray:
    return exact_triangle_tensor(I)


def _naive(I: TriangleInstance, reason: str) -> ReductionOutput:
    out = ReductionOutput(stats={f"naive_{reason}": 1})
    out.add_triples(_exact(I))
    return out


# --------------------------------------------------------------------------
# low rank -> slice uniform


def reduce_low_rank_to_slice_uniform(inst: TriangleInstance, d: RankDecomposition, t: int = 2, R=None, which: str = "C") -> ReductionOutput:
    """Emit r-slice-uniform instances (A-columns have ≤ r distinct entries).

    ``d`` decomposes the matrix named by ``which``.
    """
    o = THIRD_SLOT[which]
    return o.back(_slice_c(o.forward(inst), d, t, R, 0))


def _slice_c(I: TriangleInstance, d: RankDecomposition, t, R, depth) -> ReductionOutput:
    if d.r == 0 or not I.C.nnz:
        return ReductionOutput()
    reg = regularize_decomposition(I.C, d, R)
    out = _slice_core(TriangleInstance(I.A, I.B, reg.row), reg.d_row, t)
    if reg.col.nnz:
        T = Orientation(("T",))
        F = T.forward(TriangleInstance(I.A, I.B, reg.col))
        out.extend(T.back(_slice_core(F, reg.d_col.transpose(), t)))
    if reg.small.nnz:
        if reg.d_small.r >= d.r or depth >= 64:
            raise RecursionGuardError(f"regularisation did not shrink the rank ({d.r} -> {reg.d_small.r})")
        out.extend(_slice_c(TriangleInstance(I.A, I.B, reg.small), reg.d_small, t, R, depth + 1))
    return out


def _slice_core(I: TriangleInstance, d: RankDecomposition, t) -> ReductionOutput:
    A, B = I.A, I.B
    n1, n2, n3 = I.dims
    r = d.r
    out = ReductionOutput(stats={"light": 0, "heavy_brute": 0, "heavy_split": 0})
    exact = _exact(I)
    alive = A.mask.copy()
    for l in range(r):
        sel = d.S == l
        if not sel.any():
            continue
        Al = A.values - d.U[:, l][:, None]
        Bl = d.V[l][None, :] - B.values
        eq = (Al[:, None, :] == Al[None, :, :]) & alive[None, :, :]
        freq = np.where(alive, eq.sum(axis=1), 0)
        light = alive & (freq * r * t <= n1)
        heavy = alive & ~light
        # light pairs: every (k, j) with B_l[k,j] = A_l[i,k] whose triangle is exact
        match = light[:, :, None] & B.mask[None] & (Al[:, :, None] == Bl[None, :, :])
        out.add_triples(match & exact)
        out.stats["light"] += 1
        nh = int(heavy.sum())
        if not nh:
            continue
        if nh * t <= n1 * n2:
            out.add_triples(heavy[:, :, None] & sel[:, None, :] & exact)
            out.stats["heavy_brute"] += 1
            continue
        # many heavy pairs: every column of A_l on H has at most r*t values
        out.stats["heavy_split"] += 1
        u = -d.U[:, l]
        rank = np.zeros((n1, n2), dtype=np.int64)
        for k in range(n2):
            col = heavy[:, k]
            if col.any():
                vals = np.unique(Al[col, k])
                rank[col, k] = np.searchsorted(vals, Al[col, k])
        for g in range(int(rank[heavy].max()) // r + 1):
            keep = heavy & (rank // r == g)
            if keep.any():
                out.instances.append(
                    PotentialAdjustment.shifted(I, u, None, None, keep_a=keep, tags=[f"slice-uniform:d={r}"])
                )
        alive &= ~heavy
    return out


# --------------------------------------------------------------------------
# slice uniform -> uniform


def split_uniform(adj: PotentialAdjustment, D: int, tags=()) -> list[PotentialAdjustment]:
    """Cut an adjusted instance into D-uniform pieces that keep all its triangles."""
    I = adj.instance
    if uniformity(I) <= D:
        return [replace(adj, tags=list(tags))] if has_triangle(I) else []
    XA, XB, XC = I.A.entries(), I.B.entries(), I.C.entries()
    pieces = []
    if D >= 3:
        m = D // 3
        for ga in range(0, XA.size, m):
            Sa = XA[ga : ga + m]
            ka = I.A.mask & np.isin(I.A.values, Sa)
            for gb in range(0, XB.size, m):
                Sb = XB[gb : gb + m]
                kb = I.B.mask & np.isin(I.B.values, Sb)
                zs = np.intersect1d(XC, np.add.outer(Sa, Sb).ravel())
                for gc in range(0, zs.size, m):
                    kc = I.C.mask & np.isin(I.C.values, zs[gc : gc + m])
                    piece = adj.restricted(ka, kb, kc, tags=list(tags))
                    if has_triangle(piece.instance):
                        pieces.append(piece)
        return pieces
    # D < 3: single values, shifted to zero by constant potentials
    n1, n2, n3 = I.dims
    xc = set(XC.tolist())
    for a in XA.tolist():
        for b in XB.tolist():
            if a + b not in xc:
                continue
            ka = I.A.mask & (I.A.values == a)
            kb = I.B.mask & (I.B.values == b)
            kc = I.C.mask & (I.C.values == a + b)
            inner = PotentialAdjustment.shifted(I, np.full(n1, -a), None, np.full(n3, -b), ka, kb, kc, tags)
            if has_triangle(inner.instance):
                pieces.append(adj.compose(inner))
    return pieces


def reduce_slice_uniform_to_uniform(inst: TriangleInstance, d: int, t: int = 2, p=None, q=None) -> ReductionOutput:
    """Emit D-uniform instances (D ≤ d) from a d-slice-uniform instance."""
    if uniformity(inst) <= d:
        return ReductionOutput([PotentialAdjustment.identity(inst, [f"uniform:D={d}"])], stats={"passthrough": 1})
    p = t**2 if p is None else p
    q = t**10 if q is None else q
    for name, o in ROWS_FIRST.items():
        F = o.forward(inst)
        if line_distinct(F.A, 1) <= d:
            out = o.back(_uniform_rows(F, d, t, p, q))
            # rotations negate matrices, so the joint entry count is only
            # meaningful in the source orientation: split there
            pieces = []
            for adj in out.instances:
                pieces.extend(split_uniform(adj, d, tags=[f"uniform:D={d}"]))
            out.instances = pieces
            out.stats["ordinary_pieces"] = len(pieces)
            return out
    raise DomainError(f"instance is not {d}-slice-uniform")


def _freq_class(cnt: np.ndarray, mask: np.ndarray) -> np.ndarray:
    # floor(log2(count)); -1 for ⊥
    return np.where(mask, np.floor(np.log2(np.maximum(cnt, 1))).astype(np.int64), -1)


def _uniform_rows(I: TriangleInstance, d: int, t, p, q) -> ReductionOutput:
    A, B, C = I.A, I.B, I.C
    n1, n2, n3 = I.dims
    out = ReductionOutput(stats={"brute_classes": 0, "uniformized_classes": 0})
    ca = _freq_class(line_multiplicity(A, 1), A.mask)
    cb = _freq_class(line_multiplicity(B, 0), B.mask)
    for la in np.unique(ca[A.mask]).tolist():
        for lb in np.unique(cb[B.mask]).tolist():
            sub = TriangleInstance(A.restrict(ca == la), B.restrict(cb == lb), C)
            dA = min(d, n2 / 2**la)
            dB = n2 / 2**lb
            if dB >= dA * t:
                out.add_triples(_exact(sub))
                out.stats["brute_classes"] += 1
                continue
            out.stats["uniformized_classes"] += 1
            out.extend(_uniformize(sub, max(dA, dB), d, p, q))
    return out


def _value_sets(M: MaskedMatrix, axis: int) -> list[set[int]]:
    if axis == 1:
        return [set(vr[mr].tolist()) for vr, mr in zip(M.values, M.mask)]
    return _value_sets(M.T, 1)


def _membership(M: MaskedMatrix, sets, axis: int) -> np.ndarray:
    """mask[i,k]: M[i,k] lies in sets[i] (axis=1) or sets[k] (axis=0)."""
    out = np.zeros(M.shape, dtype=bool)
    for (i, k) in np.argwhere(M.mask):
        s = sets[i] if axis == 1 else sets[k]
        out[i, k] = int(M.values[i, k]) in s
    return out


def _uniformize(I: TriangleInstance, dp: float, d: int, p, q) -> ReductionOutput:
    A, B, C = I.A, I.B, I.C
    n1, n2, n3 = I.dims
    out = ReductionOutput()
    Xs = _value_sets(A, 1)
    Ys = _value_sets(B, 0)
    dec = popular_sum_decomposition(Xs, Ys, dp, p)
    exact = _exact(I)
    thr = 2 * dp / p

    def popular_c(Xl, Yl):
        pc = np.zeros((n1, n3), dtype=bool)
        for i, j in np.argwhere(C.mask):
            pc[i, j] = int(C.values[i, j]) in _popular(Xl[i], Yl[j], thr)
        return pc

    # exceptional triangles: popular pairs are brute forced, unpopular ones enumerated
    exc_a = _membership(A, [set(X) for X in dec.x.rest], 1)
    out.add_triples(exact & (exc_a[:, :, None] | popular_c(dec.x.rest, Ys)[:, None, :]))
    exc_b = _membership(B, [set(Y) for Y in dec.y.rest], 0)
    out.add_triples(exact & (exc_b[None, :, :] | popular_c(Xs, dec.y.rest)[:, None, :]))

    # ordinary triangles
    for g, (Sg, parts_g, shifts_g) in enumerate(zip(dec.x.patterns, dec.x.parts, dec.x.shifts)):
        keep_a = _membership(A, [set(P) for P in parts_g], 1)
        if not keep_a.any():
            continue
        s = np.array([0 if x is None else x for x in shifts_g], dtype=np.int64)
        for h, (Th, parts_h, shifts_h) in enumerate(zip(dec.y.patterns, dec.y.parts, dec.y.shifts)):
            keep_b = _membership(B, [set(P) for P in parts_h], 0)
            if not keep_b.any():
                continue
            tt = np.array([0 if x is None else x for x in shifts_h], dtype=np.int64)
            P = _popular(Sg, Th, dp / q)
            Cgh = C.values - s[:, None] - tt[None, :]
            pop = C.mask & np.isin(Cgh, np.array(P.elements, dtype=np.int64))
            sub_exact = exact & keep_a[:, :, None] & keep_b[None, :, :]
            out.add_triples(sub_exact & ~pop[:, None, :])
            adj = PotentialAdjustment.shifted(I, -s, None, -tt, keep_a, keep_b, pop)
            if has_triangle(adj.instance):
                out.instances.append(adj)
    return out


# --------------------------------------------------------------------------
# low rank -> uniform and regular


def _regular_colors(M: MaskedMatrix, keep: np.ndarray, D: int) -> np.ndarray:
    """Greedy classes in which every value fills at most 1/D of any row and column."""
    p, q = M.shape
    cap_r, cap_c = q // D, p // D
    color = np.full(M.shape, -1, dtype=np.int64)
    rows: dict = {}
    cols: dict = {}
    for i, k in np.argwhere(keep):
        x = int(M.values[i, k])
        c = 0
        while rows.get((c, i, x), 0) >= cap_r or cols.get((c, k, x), 0) >= cap_c:
            c += 1
        color[i, k] = c
        rows[(c, i, x)] = rows.get((c, i, x), 0) + 1
        cols[(c, k, x)] = cols.get((c, k, x), 0) + 1
    return color


class _HeavyParts:
    """Collects heavy entries of one matrix together with a rank decomposition."""

    def __init__(self, M: MaskedMatrix):
        self.M = M
        self.keep = np.zeros(M.shape, dtype=bool)
        self.U: list[np.ndarray] = []
        self.V: list[np.ndarray] = []
        self.S = np.full(M.shape, -1, dtype=np.int64)
        self.r = 0

    def add(self, Mp: MaskedMatrix, sel: np.ndarray, row_pot: np.ndarray, col_pot: np.ndarray, by_row: bool):
        """Heavy entries ``sel`` of the adjusted matrix Mp = M + row_pot[i] + col_pot[k]."""
        if not sel.any():
            return
        p, q = Mp.shape
        vals = Mp.values if by_row else Mp.values.T
        msk = sel if by_row else sel.T
        width = max(np.unique(vr[mr]).size for vr, mr in zip(vals, msk))
        Ux = np.zeros((vals.shape[0], width), dtype=np.int64)
        S = np.full(vals.shape, -1, dtype=np.int64)
        for a, (vr, mr) in enumerate(zip(vals, msk)):
            if mr.any():
                distinct = np.unique(vr[mr])
                Ux[a, : distinct.size] = distinct
                S[a, mr] = np.searchsorted(distinct, vr[mr])
        Vx = np.zeros((width, vals.shape[1]), dtype=np.int64)
        if by_row:
            U, V = Ux, Vx
        else:
            U, V, S = Vx.T.copy(), Ux.T.copy(), S.T.copy()
        # undo the potentials so that the pieces describe the source matrix
        U = U - row_pot[:, None]
        V = V - col_pot[None, :]
        self.U.append(U)
        self.V.append(V)
        self.S[sel] = S[sel] + self.r
        self.r += width
        self.keep |= sel

    def decomposition(self) -> RankDecomposition:
        p, q = self.M.shape
        U = np.concatenate(self.U, axis=1) if self.U else np.zeros((p, 0))
        V = np.concatenate(self.V, axis=0) if self.V else np.zeros((0, q))
        return RankDecomposition(self.r, U, V, self.S)


def reduce_low_rank_to_uniform_regular(inst: TriangleInstance, d: RankDecomposition, knobs: Knobs | None = None, which: str = "C") -> ReductionOutput:
    """Emit instances that are r-uniform and 1/r-regular, recursing on heavy entries."""
    knobs = knobs or Knobs()
    o = THIRD_SLOT[which]
    return o.back(_uniform_regular_c(o.forward(inst), d, knobs, 0))


def _uniform_regular_c(I: TriangleInstance, d: RankDecomposition, kn: Knobs, depth: int) -> ReductionOutput:
    n1, n2, n3 = I.dims
    r = d.r
    if r == 0 or not I.C.nnz:
        return ReductionOutput()
    if r > min(n1, n2, n3):
        # rank above the smallest dimension: solved directly
        return _naive(I, "rank")
    if depth > kn.max_depth:
        raise RecursionGuardError("uniform-regular recursion too deep")
    out = ReductionOutput(stats={"levels": 1})
    sl = _slice_c(I, d, kn.t, kn.R, 0)
    out.triples |= sl.triples
    uniform: list[PotentialAdjustment] = []
    for adj in sl.instances:
        un = reduce_slice_uniform_to_uniform(adj.instance, r, kn.t, kn.p_, kn.q_)
        out.triples |= un.triples
        uniform.extend(adj.compose(a) for a in un.instances)

    heavy = {"A": _HeavyParts(I.A), "B": _HeavyParts(I.B), "C": _HeavyParts(I.C)}
    qr = kn.q_reg_
    tags = [f"uniform:D={r}", f"regular:rho=1/{r}"]
    for adj in uniform:
        J = adj.instance
        pots = {"A": (adj.u, adj.v), "B": (-adj.v, adj.w), "C": (adj.u, adj.w)}
        light = {}
        for name in "ABC":
            M = getattr(J, name)
            p, q = M.shape
            row_h = M.mask & (line_multiplicity(M, 1) * r > qr * q)
            col_h = M.mask & ~row_h & (line_multiplicity(M, 0) * r > qr * p)
            heavy[name].add(M, row_h, *pots[name], by_row=True)
            heavy[name].add(M, col_h, *pots[name], by_row=False)
            keep = M.mask & ~row_h & ~col_h
            light[name] = (keep, _regular_colors(M, keep, r))
        (ka, ca), (kb, cb), (kc, cc) = light["A"], light["B"], light["C"]
        for a in range(ca.max(initial=-1) + 1):
            for b in range(cb.max(initial=-1) + 1):
                for c in range(cc.max(initial=-1) + 1):
                    piece = adj.restricted(ka & (ca == a), kb & (cb == b), kc & (cc == c), tags=tags)
                    if has_triangle(piece.instance):
                        out.instances.append(piece)

    for name in "ABC":
        hp = heavy[name]
        if not hp.keep.any():
            continue
        dsm = hp.decomposition()
        if dsm.r >= r:
            raise RecursionGuardError(f"heavy part of {name} has rank {dsm.r} >= {r}")
        parts = {"A": I.A, "B": I.B, "C": I.C}
        parts[name] = getattr(I, name).restrict(hp.keep)
        sub = TriangleInstance(parts["A"], parts["B"], parts["C"])
        o = THIRD_SLOT[name]
        out.extend(o.back(_uniform_regular_c(o.forward(sub), dsm, kn, depth + 1)))
    return out


# --------------------------------------------------------------------------
# uniform regular -> low doubling


def reduce_uniform_regular_to_low_doubling(inst: TriangleInstance, D: int, K=None, L: int = 2, check: bool = True) -> ReductionOutput:
    """Split a D-uniform, 1/D-regular instance into pieces with small doubling."""
    K = Fraction(2) if K is None else Fraction(K).limit_denominator(10**6)
    if check:
        if uniformity(inst) > D:
            raise DomainError(f"instance is not {D}-uniform")
        if not is_regular(inst, D):
            raise DomainError(f"instance is not 1/{D}-regular")
    A, B, C = inst.A, inst.B, inst.C
    out = ReductionOutput(stats={"sparse": 0, "dense": 0, "exceeded": 0})
    X = inst.entry_set().tolist()
    if not X:
        return out
    cov = bsg_cover(X, X, X, L)
    exact = _exact(inst)
    xa = {x: i for i, x in enumerate(X)}
    ia = np.where(A.mask, np.searchsorted(X, A.values), 0)
    ib = np.where(B.mask, np.searchsorted(X, B.values), 0)
    rem = np.zeros((len(X), len(X)), dtype=bool)
    for x, y in cov.remainder:
        rem[xa[x], xa[y]] = True
    out.add_triples(exact & rem[ia[:, :, None], ib[None, :, :]])
    for Xl, Yl in cov.rectangles:
        ka = A.mask & np.isin(A.values, list(Xl))
        kb = B.mask & np.isin(B.values, list(Yl))
        kc = C.mask & np.isin(C.values, list(Xl + Yl))
        if len(Xl) * L * L <= D or len(Yl) * L * L <= D:
            out.add_triples(exact & ka[:, :, None] & kb[None, :, :] & kc[:, None, :])
            out.stats["sparse"] += 1
            continue
        piece = PotentialAdjustment.identity(inst).restricted(ka, kb, kc)
        if not has_triangle(piece.instance):
            continue
        tag = doubling_tag(piece.instance, K)
        piece.tags = [f"uniform:D={D}", f"regular:rho=1/{D}", tag]
        out.stats["dense"] += 1
        out.stats["exceeded"] += tag.endswith("heuristic-exceeded")
        out.instances.append(piece)
    return out


def reduce_low_rank_to_low_doubling(inst: TriangleInstance, d: RankDecomposition, knobs: Knobs | None = None, which: str = "C") -> ReductionOutput:
    knobs = knobs or Knobs()
    first = reduce_low_rank_to_uniform_regular(inst, d, knobs, which)
    out = ReductionOutput(triples=set(first.triples), stats=dict(first.stats))
    for adj in first.instances:
        D = next(int(parse_tag(tg)[1]) for tg in adj.tags if tg.startswith("uniform:"))
        sub = reduce_uniform_regular_to_low_doubling(adj.instance, D, knobs.K, knobs.L, check=False)
        out.triples |= sub.triples
        out.instances.extend(adj.compose(a) for a in sub.instances)
        out.extend(ReductionOutput(stats=sub.stats))
    return out


def flags_from_output(inst: TriangleInstance, out: ReductionOutput, solver=solve_uniform_low_doubling) -> TriangleFlags:
    """Answer the source instance from a reduction output."""
    n1, n2, n3 = inst.dims
    flags = TriangleFlags.zeros(n1, n2, n3)
    A, B, C = inst.A, inst.B, inst.C
    for i, k, j in out.triples:
        if A.mask[i, k] and B.mask[k, j] and C.mask[i, j] and A.values[i, k] + B.values[k, j] == C.values[i, j]:
            flags.a[i, k] = flags.b[k, j] = flags.c[i, j] = True
    for adj in out.instances:
        f = solver(adj.instance)
        flags = flags | f
    return flags


def solve_low_rank(inst: TriangleInstance, d: RankDecomposition, knobs: Knobs | None = None, which: str = "C") -> TriangleFlags:
    """Exact Triangle for an instance with a known decomposition of one matrix."""
    return flags_from_output(inst, reduce_low_rank_to_low_doubling(inst, d, knobs, which))
