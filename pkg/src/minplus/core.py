"""Masked integer matrices, brute-force oracles and the basic product routines.

The missing value ⊥ is modelled by a boolean presence mask next to an int64
value array.  It is never encoded as a large integer; at the Python level it
shows up as ``None``.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError, ShapeError

# stored entries are kept well inside int64 so that sums of two never wrap
BOUND = 1 << 60


def check_bounds(values: np.ndarray) -> np.ndarray:
    if values.size and int(np.abs(values).max()) > BOUND:
        raise OverflowError("entry magnitude exceeds 2**60")
    return values


class MaskedMatrix:
    """Integer matrix in which some entries may be ⊥ (``mask`` False)."""

    __slots__ = ("values", "mask")

    def __init__(self, values, mask=None):
        values = np.array(values, dtype=np.int64, copy=True)
        if values.ndim != 2:
            if values.size:
                raise ShapeError(f"expected a 2-d array, got shape {values.shape}")
            values = values.reshape(0, 0)
        if mask is None:
            mask = np.ones(values.shape, dtype=bool)
        else:
            mask = np.array(mask, dtype=bool, copy=True)
            if mask.shape != values.shape:
                raise ShapeError(f"mask shape {mask.shape} != values shape {values.shape}")
        values[~mask] = 0
        self.values = check_bounds(values)
        self.mask = mask

    # construction -----------------------------------------------------
    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int | None]], cols: int | None = None):
        rows = [list(r) for r in rows]
        n = len(rows)
        m = len(rows[0]) if n else (cols or 0)
        if any(len(r) != m for r in rows):
            raise ShapeError("ragged rows")
        vals = np.zeros((n, m), dtype=np.int64)
        mask = np.zeros((n, m), dtype=bool)
        for i, r in enumerate(rows):
            for j, x in enumerate(r):
                if x is not None:
                    if isinstance(x, bool) or int(x) != x:
                        raise DomainError(f"non-integer entry {x!r} at ({i},{j})")
                    if abs(int(x)) > BOUND:
                        raise OverflowError("entry magnitude exceeds 2**60")
                    vals[i, j] = int(x)
                    mask[i, j] = True
        return cls(vals, mask)

    @classmethod
    def empty(cls, n: int, m: int):
        return cls(np.zeros((n, m), dtype=np.int64), np.zeros((n, m), dtype=bool))

    @classmethod
    def full(cls, values):
        return cls(values)

    # basic access -----------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def nnz(self) -> int:
        return int(self.mask.sum())

    def __getitem__(self, ij) -> int | None:
        i, j = ij
        return int(self.values[i, j]) if self.mask[i, j] else None

    def to_rows(self) -> list[list[int | None]]:
        return [
            [int(v) if m else None for v, m in zip(vr, mr)]
            for vr, mr in zip(self.values.tolist(), self.mask.tolist())
        ]

    def entries(self) -> np.ndarray:
        """Sorted distinct non-⊥ entries."""
        return np.unique(self.values[self.mask])

    def __eq__(self, other) -> bool:
        if not isinstance(other, MaskedMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.mask, other.mask)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        return f"MaskedMatrix({self.to_rows()})"

    def copy(self) -> "MaskedMatrix":
        return MaskedMatrix(self.values, self.mask)

    # transformations --------------------------------------------------
    @property
    def T(self) -> "MaskedMatrix":
        return MaskedMatrix(self.values.T, self.mask.T)

    def __neg__(self) -> "MaskedMatrix":
        return MaskedMatrix(-self.values, self.mask)

    @classmethod
    def _trusted(cls, values: np.ndarray, mask: np.ndarray) -> "MaskedMatrix":
        # internal: values already int64, bounded and zero under ⊥
        m = object.__new__(cls)
        m.values, m.mask = values, mask
        return m

    def restrict(self, keep: np.ndarray) -> "MaskedMatrix":
        """Keep entries where ``keep`` is True, ⊥ elsewhere."""
        mask = self.mask & keep
        return MaskedMatrix._trusted(np.where(mask, self.values, 0), mask)

    def shift(self, row=None, col=None) -> "MaskedMatrix":
        """Add ``row[i] + col[j]`` to every non-⊥ entry."""
        vals = self.values.copy()
        if row is not None:
            vals = vals + np.asarray(row, dtype=np.int64)[:, None]
        if col is not None:
            vals = vals + np.asarray(col, dtype=np.int64)[None, :]
        return MaskedMatrix(check_bounds(vals), self.mask)

    def map_values(self, fn) -> "MaskedMatrix":
        return MaskedMatrix(check_bounds(np.asarray(fn(self.values), dtype=np.int64)), self.mask)

    # serialisation ----------------------------------------------------
    def to_json(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "entries": self.to_rows()}

    @classmethod
    def from_json(cls, obj: dict) -> "MaskedMatrix":
        m = cls.from_rows(obj["entries"], cols=obj.get("cols"))
        if m.rows != obj["rows"] or (m.rows and m.cols != obj["cols"]):
            raise ShapeError("declared shape does not match entries")
        if not m.rows:
            return cls.empty(0, obj["cols"])
        return m


def as_matrix(x) -> MaskedMatrix:
    if isinstance(x, MaskedMatrix):
        return x
    return MaskedMatrix.from_rows(x)


@dataclass
class TriangleInstance:
    """Matrices A (n1×n2), B (n2×n3), C (n1×n3)."""

    A: MaskedMatrix
    B: MaskedMatrix
    C: MaskedMatrix

    def __post_init__(self):
        self.A, self.B, self.C = as_matrix(self.A), as_matrix(self.B), as_matrix(self.C)
        n1, n2 = self.A.shape
        if self.B.rows != n2 or self.C.rows != n1 or self.C.cols != self.B.cols:
            raise ShapeError(
                f"incompatible shapes A{self.A.shape} B{self.B.shape} C{self.C.shape}"
            )

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.A.rows, self.A.cols, self.B.cols

    def entry_set(self) -> np.ndarray:
        return np.unique(
            np.concatenate([self.A.values[self.A.mask], self.B.values[self.B.mask], self.C.values[self.C.mask]])
        )

    def to_json(self) -> dict:
        return {"A": self.A.to_json(), "B": self.B.to_json(), "C": self.C.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "TriangleInstance":
        return cls(*(MaskedMatrix.from_json(obj[k]) for k in "ABC"))


@dataclass
class TriangleFlags:
    """Per-edge answers of an Exact Triangle instance."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __eq__(self, other) -> bool:
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in "abc")

    def __or__(self, other) -> "TriangleFlags":
        return TriangleFlags(self.a | other.a, self.b | other.b, self.c | other.c)

    @classmethod
    def zeros(cls, n1, n2, n3) -> "TriangleFlags":
        return cls(np.zeros((n1, n2), bool), np.zeros((n2, n3), bool), np.zeros((n1, n3), bool))

    def to_json(self) -> dict:
        return {k: getattr(self, k).astype(int).tolist() for k in "abc"}


def partition_union(parts: Iterable[MaskedMatrix]) -> MaskedMatrix:
    """Reassemble a matrix from disjoint-support parts."""
    parts = list(parts)
    vals = np.zeros(parts[0].shape, dtype=np.int64)
    mask = np.zeros(parts[0].shape, dtype=bool)
    for p in parts:
        if (mask & p.mask).any():
            raise DomainError("parts overlap")
        vals[p.mask] = p.values[p.mask]
        mask |= p.mask
    return MaskedMatrix(vals, mask)


def _check_product_shapes(A: MaskedMatrix, B: MaskedMatrix):
    if A.cols != B.rows:
        raise ShapeError(f"inner dimensions differ: A{A.shape} B{B.shape}")


def min_plus_brute(A, B) -> MaskedMatrix:
    """Exhaustive min-plus product with the ⊥ conventions."""
    A, B = as_matrix(A), as_matrix(B)
    _check_product_shapes(A, B)
    n1, n2 = A.shape
    n3 = B.cols
    best = np.zeros((n1, n3), dtype=np.int64)
    have = np.zeros((n1, n3), dtype=bool)
    for k in range(n2):
        cand = A.values[:, k, None] + B.values[None, k, :]
        ok = A.mask[:, k, None] & B.mask[None, k, :]
        upd = ok & (~have | (cand < best))
        best[upd] = cand[upd]
        have |= ok
    return MaskedMatrix(best, have)


def min_plus_witnesses_brute(A, B) -> list[list[list[int]]]:
    """All witnesses k of every output entry (empty list for ⊥)."""
    A, B = as_matrix(A), as_matrix(B)
    C = min_plus_brute(A, B)
    hit = (
        A.mask[:, :, None]
        & B.mask[None, :, :]
        & C.mask[:, None, :]
        & (A.values[:, :, None] + B.values[None, :, :] == C.values[:, None, :])
    )
    n1, _, n3 = hit.shape
    return [[np.flatnonzero(hit[i, :, j]).tolist() for j in range(n3)] for i in range(n1)]


def exact_triangle_tensor(inst: TriangleInstance) -> np.ndarray:
    """Boolean tensor T[i,k,j] marking exact triangles."""
    A, B, C = inst.A, inst.B, inst.C
    return (
        A.mask[:, :, None]
        & B.mask[None, :, :]
        & C.mask[:, None, :]
        & (A.values[:, :, None] + B.values[None, :, :] == C.values[:, None, :])
    )


def exact_triangle_brute(inst: TriangleInstance) -> TriangleFlags:
    T = exact_triangle_tensor(inst)
    return TriangleFlags(T.any(axis=2), T.any(axis=0), T.any(axis=1))


def exact_triangles(inst: TriangleInstance) -> set[tuple[int, int, int]]:
    return {tuple(map(int, t)) for t in np.argwhere(exact_triangle_tensor(inst))}


def _check_universe(M: MaskedMatrix, u: int, name: str):
    v = M.values  # zero under ⊥, which is inside the universe
    if v.size and not (0 <= v.min() and v.max() <= u):
        raise DomainError(f"{name} has entries outside {{0..{u}}}")


def min_plus_small_universe(A, B, u: int) -> MaskedMatrix:
    """Min-plus product through polynomial matrix multiplication.

    Entry x becomes the monomial of degree x.  One matrix product of the
    one-hot coefficient tensors gives, for every output cell, which degree
    pairs (a, b) occur; the output is the lowest a + b among them.
    """
    A, B = as_matrix(A), as_matrix(B)
    _check_product_shapes(A, B)
    if u < 0:
        raise DomainError("universe bound must be non-negative")
    _check_universe(A, u, "A")
    _check_universe(B, u, "B")
    n1, n2 = A.shape
    n3 = B.cols
    w = u + 1
    deg = np.arange(w)
    # one-hot coefficient tensors laid out for a single matrix product
    PA = ((A.values[:, None, :] == deg[None, :, None]) & A.mask[:, None, :]).reshape(n1 * w, n2)
    PB = ((B.values[:, :, None] == deg) & B.mask[:, :, None]).reshape(n2, n3 * w)
    # counts are at most n2, exact in float64
    cnt = (PA.astype(np.float64) @ PB.astype(np.float64)).reshape(n1, w, n3, w)
    big = 2 * u + 1
    sums = _degree_sums(u)
    low = np.where(cnt > 0, sums, big).min(axis=(1, 3), initial=big)
    have = low < big
    return MaskedMatrix._trusted(np.where(have, low, 0).astype(np.int64), have)


@functools.lru_cache(maxsize=256)
def _degree_sums(u: int) -> np.ndarray:
    deg = np.arange(u + 1)
    return np.add.outer(deg, deg)[None, :, None, :]


TriangleSolver = Callable[[TriangleInstance], TriangleFlags]
MinPlusSolver = Callable[[MaskedMatrix, MaskedMatrix], MaskedMatrix]


def min_plus_via_exact_triangle(A, B, triangle_solver: TriangleSolver = exact_triangle_brute) -> MaskedMatrix:
    """Min-plus product using only Exact Triangle calls (bit-scaling recursion).

    Recursing on ⌊A/2⌋, ⌊B/2⌋ gives C' with 2C' ≤ A*B ≤ 2C'+2; the three
    candidates are tested in increasing order.  Negative inputs are handled
    by shifting to a non-negative range first.
    """
    A, B = as_matrix(A), as_matrix(B)
    _check_product_shapes(A, B)
    a0 = int(A.values[A.mask].min()) if A.nnz else 0
    b0 = int(B.values[B.mask].min()) if B.nnz else 0
    C = _via_triangle(A.shift(row=np.full(A.rows, -a0)), B.shift(row=np.full(B.rows, -b0)), triangle_solver)
    return C.shift(row=np.full(C.rows, a0 + b0))


def _via_triangle(A: MaskedMatrix, B: MaskedMatrix, solver) -> MaskedMatrix:
    n1, n3 = A.rows, B.cols
    top = max(int(A.values.max(initial=0)), int(B.values.max(initial=0)))
    if top == 0:
        flags = solver(TriangleInstance(A, B, MaskedMatrix(np.zeros((n1, n3), np.int64))))
        return MaskedMatrix(np.zeros((n1, n3), np.int64), flags.c)
    Ch = _via_triangle(A.map_values(lambda v: v // 2), B.map_values(lambda v: v // 2), solver)
    vals = np.zeros((n1, n3), dtype=np.int64)
    done = np.zeros((n1, n3), dtype=bool)
    for z in range(3):
        cand = MaskedMatrix(2 * Ch.values + z, Ch.mask & ~done)
        hit = solver(TriangleInstance(A, B, cand)).c & cand.mask
        vals[hit] = cand.values[hit]
        done |= hit
    if (Ch.mask & ~done).any():
        raise RuntimeError("triangle solver missed a candidate in [2C', 2C'+2]")
    return MaskedMatrix(vals, done)
