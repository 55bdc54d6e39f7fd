"""Potential adjustments, reduction outputs, orientations and constraint tags."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..addcomb import doubling_constant
from ..core import MaskedMatrix, TriangleFlags, TriangleInstance, exact_triangle_tensor


@dataclass
class PotentialAdjustment:
    """Instance A' = A + u[i] + v[k], B' = B - v[k] + w[j], C' = C + u[i] + w[j].

    Any entry of the adjusted instance may additionally be ⊥.
    """

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    instance: TriangleInstance
    tags: list[str] = field(default_factory=list)

    def __post_init__(self):
        n1, n2, n3 = self.instance.dims
        self.u = np.asarray(self.u, dtype=np.int64).reshape(n1)
        self.v = np.asarray(self.v, dtype=np.int64).reshape(n2)
        self.w = np.asarray(self.w, dtype=np.int64).reshape(n3)

    @classmethod
    def identity(cls, inst: TriangleInstance, tags=()) -> "PotentialAdjustment":
        n1, n2, n3 = inst.dims
        return cls(np.zeros(n1), np.zeros(n2), np.zeros(n3), inst, list(tags))

    @classmethod
    def shifted(cls, src: TriangleInstance, u, v, w, keep_a=None, keep_b=None, keep_c=None, tags=()):
        """Apply potentials to ``src`` and keep only the masked entries."""
        n1, n2, n3 = src.dims
        u = np.zeros(n1, np.int64) if u is None else np.asarray(u, np.int64)
        v = np.zeros(n2, np.int64) if v is None else np.asarray(v, np.int64)
        w = np.zeros(n3, np.int64) if w is None else np.asarray(w, np.int64)
        A = src.A.shift(u, v)
        B = src.B.shift(-v, w)
        C = src.C.shift(u, w)
        if keep_a is not None:
            A = A.restrict(keep_a)
        if keep_b is not None:
            B = B.restrict(keep_b)
        if keep_c is not None:
            C = C.restrict(keep_c)
        return cls(u, v, w, TriangleInstance(A, B, C), list(tags))

    def compose(self, inner: "PotentialAdjustment") -> "PotentialAdjustment":
        """``inner`` adjusts ``self.instance``; the result adjusts our source."""
        return PotentialAdjustment(self.u + inner.u, self.v + inner.v, self.w + inner.w, inner.instance, list(inner.tags))

    def restricted(self, keep_a=None, keep_b=None, keep_c=None, tags=None) -> "PotentialAdjustment":
        I = self.instance
        A = I.A if keep_a is None else I.A.restrict(keep_a)
        B = I.B if keep_b is None else I.B.restrict(keep_b)
        C = I.C if keep_c is None else I.C.restrict(keep_c)
        return PotentialAdjustment(self.u, self.v, self.w, TriangleInstance(A, B, C), list(self.tags if tags is None else tags))

    def to_json(self, src: TriangleInstance) -> dict:
        dels = {}
        for name in "ABC":
            s, a = getattr(src, name), getattr(self.instance, name)
            dels[name] = _bitset(s.mask & ~a.mask)
        return {
            "u": self.u.tolist(),
            "v": self.v.tolist(),
            "w": self.w.tolist(),
            "deleted": dels,
            "tags": list(self.tags),
        }

    @classmethod
    def from_json(cls, obj: dict, src: TriangleInstance) -> "PotentialAdjustment":
        keep = {}
        for name in "ABC":
            M = getattr(src, name)
            keep[name] = ~_unbitset(obj["deleted"][name], M.shape)
        return cls.shifted(src, obj["u"], obj["v"], obj["w"], keep["A"], keep["B"], keep["C"], obj.get("tags", ()))


def _bitset(mask: np.ndarray) -> str:
    return np.packbits(mask.ravel().astype(np.uint8)).tobytes().hex()


def _unbitset(hexstr: str, shape) -> np.ndarray:
    n = int(np.prod(shape))
    bits = np.unpackbits(np.frombuffer(bytes.fromhex(hexstr), dtype=np.uint8))[:n]
    if bits.size < n:
        bits = np.concatenate([bits, np.zeros(n - bits.size, np.uint8)])
    return bits.astype(bool).reshape(shape)


@dataclass
class ReductionOutput:
    """Adjusted instances plus explicitly listed triples."""

    instances: list[PotentialAdjustment] = field(default_factory=list)
    triples: set[tuple[int, int, int]] = field(default_factory=set)
    stats: dict = field(default_factory=dict)

    def extend(self, other: "ReductionOutput") -> "ReductionOutput":
        self.instances.extend(other.instances)
        self.triples |= other.triples
        for k, v in other.stats.items():
            if isinstance(v, (int, float)) and not isinstance(v, bool):
                self.stats[k] = self.stats.get(k, 0) + v
        return self

    def add_triples(self, tensor: np.ndarray):
        self.triples |= {tuple(map(int, t)) for t in np.argwhere(tensor)}

    def to_json(self, src: TriangleInstance) -> dict:
        return {
            "instances": [a.to_json(src) for a in self.instances],
            "triples": sorted([list(t) for t in self.triples]),
            "stats": {k: self.stats[k] for k in sorted(self.stats)},
        }

    @classmethod
    def from_json(cls, obj: dict, src: TriangleInstance) -> "ReductionOutput":
        return cls(
            [PotentialAdjustment.from_json(a, src) for a in obj["instances"]],
            {tuple(t) for t in obj["triples"]},
            dict(obj.get("stats", {})),
        )


# --------------------------------------------------------------------------
# verification


def verify_potential_adjustment(src: TriangleInstance, adj: PotentialAdjustment) -> bool:
    if src.dims != adj.instance.dims:
        return False
    u, v, w = adj.u, adj.v, adj.w
    expect = {
        "A": src.A.values + u[:, None] + v[None, :],
        "B": src.B.values - v[:, None] + w[None, :],
        "C": src.C.values + u[:, None] + w[None, :],
    }
    for name in "ABC":
        s, a = getattr(src, name), getattr(adj.instance, name)
        if (a.mask & ~s.mask).any():
            return False
        if not np.array_equal(a.values[a.mask], expect[name][a.mask]):
            return False
    return True


def coverage(src: TriangleInstance, out: ReductionOutput) -> dict:
    """How often each exact triangle of ``src`` is accounted for."""
    T = exact_triangle_tensor(src)
    hits = np.zeros(T.shape, dtype=np.int64)
    for adj in out.instances:
        I = adj.instance
        hits += exact_triangle_tensor(I)
    listed = np.zeros(T.shape, dtype=bool)
    for i, k, j in out.triples:
        listed[i, k, j] = True
    found = T & ((hits > 0) | listed)
    return {
        "exact": int(T.sum()),
        "covered": int(found.sum()),
        "missing": [tuple(map(int, t)) for t in np.argwhere(T & ~found)],
        "max_multiplicity": int(hits[T].max()) if T.any() else 0,
        "in_instances": int((T & (hits > 0)).sum()),
        "in_triples": int((T & listed).sum()),
    }


def verify_reduction_output(src: TriangleInstance, out: ReductionOutput) -> bool:
    """Every adjustment is valid and every exact triangle is preserved."""
    n1, n2, n3 = src.dims
    for i, k, j in out.triples:
        if not (0 <= i < n1 and 0 <= k < n2 and 0 <= j < n3):
            return False
    if not all(verify_potential_adjustment(src, a) for a in out.instances):
        return False
    return not coverage(src, out)["missing"]


# --------------------------------------------------------------------------
# orientations


def _transpose(I: TriangleInstance) -> TriangleInstance:
    return TriangleInstance(I.B.T, I.A.T, I.C.T)


def _rot_a(I: TriangleInstance) -> TriangleInstance:
    # C[i,j] - B[k,j] = A[i,k]: A moves to the third slot
    return TriangleInstance(I.C, -(I.B.T), I.A)


def _rot_b(I: TriangleInstance) -> TriangleInstance:
    # -A[i,k] + C[i,j] = B[k,j]: B moves to the third slot
    return TriangleInstance(-(I.A.T), I.C, I.B)


def _inv_instance(step: str, F: TriangleInstance) -> TriangleInstance:
    X, Y, Z = F.A, F.B, F.C
    if step == "T":
        return TriangleInstance(Y.T, X.T, Z.T)
    if step == "Ra":
        return TriangleInstance(Z, -(Y.T), X)
    return TriangleInstance(-(X.T), Z, Y)


def _inv_potentials(step: str, u, v, w):
    if step == "T":
        return w, -v, u
    if step == "Ra":
        return u, w, v
    return -v, -u, w


def _inv_triple(step: str, t):
    a, b, c = t
    if step == "T":
        return (c, b, a)
    if step == "Ra":
        return (a, c, b)
    return (b, a, c)


def _inv_flags(step: str, f: TriangleFlags) -> TriangleFlags:
    if step == "T":
        return TriangleFlags(f.b.T, f.a.T, f.c.T)
    if step == "Ra":
        return TriangleFlags(f.c, f.b.T, f.a)
    return TriangleFlags(f.a.T, f.c, f.b)


_FORWARD = {"T": _transpose, "Ra": _rot_a, "Rb": _rot_b}


class Orientation:
    """A composition of transpose / rotation steps applied left to right."""

    def __init__(self, steps=()):
        self.steps = tuple(steps)

    def __repr__(self):
        return f"Orientation({'∘'.join(self.steps) or 'id'})"

    def forward(self, inst: TriangleInstance) -> TriangleInstance:
        for s in self.steps:
            inst = _FORWARD[s](inst)
        return inst

    def back_adjustment(self, adj: PotentialAdjustment) -> PotentialAdjustment:
        u, v, w, I = adj.u, adj.v, adj.w, adj.instance
        for s in reversed(self.steps):
            u, v, w = _inv_potentials(s, u, v, w)
            I = _inv_instance(s, I)
        return PotentialAdjustment(u, v, w, I, list(adj.tags))

    def back_triple(self, t):
        for s in reversed(self.steps):
            t = _inv_triple(s, t)
        return t

    def back_flags(self, f: TriangleFlags) -> TriangleFlags:
        for s in reversed(self.steps):
            f = _inv_flags(s, f)
        return f

    def back(self, out: ReductionOutput) -> ReductionOutput:
        if not self.steps:
            return out
        return ReductionOutput(
            [self.back_adjustment(a) for a in out.instances],
            {self.back_triple(t) for t in out.triples},
            dict(out.stats),
        )


# orientation putting the named matrix into the third slot
THIRD_SLOT = {"C": Orientation(), "A": Orientation(("Ra",)), "B": Orientation(("Rb",))}

# orientation whose first matrix has rows equal to the named family
ROWS_FIRST = {
    "A.rows": Orientation(),
    "A.cols": Orientation(("Rb",)),
    "B.cols": Orientation(("T",)),
    "B.rows": Orientation(("Ra", "T")),
    "C.rows": Orientation(("Ra",)),
    "C.cols": Orientation(("Rb", "T")),
}


# --------------------------------------------------------------------------
# constraint recounts


def line_distinct(M: MaskedMatrix, axis: int) -> int:
    """Largest number of distinct non-⊥ entries in a row (axis=1) or column (axis=0)."""
    vals = M.values if axis == 1 else M.values.T
    mask = M.mask if axis == 1 else M.mask.T
    best = 0
    for vr, mr in zip(vals, mask):
        if mr.any():
            best = max(best, np.unique(vr[mr]).size)
    return best


def line_multiplicity(M: MaskedMatrix, axis: int) -> np.ndarray:
    """cnt[i,k]: how often M[i,k] occurs in its row (axis=1) or column (axis=0)."""
    if axis == 1:
        eq = (M.values[:, :, None] == M.values[:, None, :]) & M.mask[:, None, :]
        return np.where(M.mask, eq.sum(axis=2), 0)
    return line_multiplicity(M.T, 1).T


def slice_uniformity(I: TriangleInstance) -> dict[str, int]:
    return {
        "A.rows": line_distinct(I.A, 1),
        "A.cols": line_distinct(I.A, 0),
        "B.rows": line_distinct(I.B, 1),
        "B.cols": line_distinct(I.B, 0),
        "C.rows": line_distinct(I.C, 1),
        "C.cols": line_distinct(I.C, 0),
    }


def uniformity(I: TriangleInstance) -> int:
    return int(I.entry_set().size)


def is_regular(I: TriangleInstance, D) -> bool:
    """No entry fills more than a 1/D fraction of its row or column."""
    D = Fraction(D)
    a, b = D.numerator, D.denominator
    for M in (I.A, I.B, I.C):
        p, q = M.shape
        if (line_multiplicity(M, 1) * a > q * b).any() or (line_multiplicity(M, 0) * a > p * b).any():
            return False
    return True


def entry_doubling(I: TriangleInstance) -> Fraction:
    X = I.entry_set()
    return doubling_constant(X.tolist()) if X.size else Fraction(0)


def parse_tag(tag: str) -> tuple[str, Fraction, bool]:
    parts = tag.split(":")
    kind = parts[0]
    key, _, val = parts[1].partition("=")
    return kind, Fraction(val), len(parts) > 2 and parts[2] == "heuristic-exceeded"


def fmt_num(x) -> str:
    x = Fraction(x).limit_denominator(10**6)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def doubling_tag(I: TriangleInstance, K) -> str:
    ok = entry_doubling(I) <= Fraction(K).limit_denominator(10**6)
    return f"doubling:K={fmt_num(K)}" + ("" if ok else ":heuristic-exceeded")


def check_tags(adj: PotentialAdjustment) -> bool:
    """Recount every constraint a tag claims."""
    I = adj.instance
    for tag in adj.tags:
        try:
            kind, val, flagged = parse_tag(tag)
        except (IndexError, ValueError, ZeroDivisionError):
            return False
        if kind == "slice-uniform":
            if min(slice_uniformity(I).values()) > val:
                return False
        elif kind == "uniform":
            if uniformity(I) > val:
                return False
        elif kind == "regular":
            if val <= 0 or not is_regular(I, 1 / val):
                return False
        elif kind == "doubling":
            if (entry_doubling(I) > val) != flagged:
                return False
        else:
            return False
    return True


def has_triangle(I: TriangleInstance) -> bool:
    """Some (i, k, j) with all three entries present (exactness not checked)."""
    reach = I.A.mask.astype(np.int64) @ I.B.mask.astype(np.int64)
    return bool(((reach > 0) & I.C.mask).any())
