"""Seeded random instance families used by tests, the acceptance suite and the CLI."""
from __future__ import annotations

import numpy as np

from .core import MaskedMatrix, TriangleInstance
from .rank import RankDecomposition


def random_matrix(rng, n, m, lo=0, hi=8, density=0.8) -> MaskedMatrix:
    return MaskedMatrix(rng.integers(lo, hi + 1, (n, m)), rng.random((n, m)) < density)


def random_decomposition(rng, n, m, r, lo=0, hi=8, density=0.8) -> RankDecomposition:
    U = rng.integers(lo, hi + 1, (n, r))
    V = rng.integers(lo, hi + 1, (r, m))
    S = rng.integers(0, r, (n, m))
    S[rng.random((n, m)) >= density] = -1
    return RankDecomposition(r, U, V, S)


def plant_triangles(rng, inst: TriangleInstance, count: int) -> TriangleInstance:
    """Overwrite B entries so that ``count`` random triples become exact."""
    A, B, C = inst.A.copy(), inst.B.copy(), inst.C
    n1, n2, n3 = inst.dims
    for _ in range(count):
        i, k, j = rng.integers(0, n1), rng.integers(0, n2), rng.integers(0, n3)
        if A.mask[i, k] and C.mask[i, j]:
            B.values[k, j] = C.values[i, j] - A.values[i, k]
            B.mask[k, j] = True
    return TriangleInstance(A, B, C)


def low_rank_instance(rng, n1, n2, n3, r, hi=8, density=0.8, plant=4):
    """Instance whose C has a rank-r decomposition, with a few planted exact triangles."""
    d = random_decomposition(rng, n1, n3, r, 0, hi, density)
    inst = TriangleInstance(random_matrix(rng, n1, n2, 0, hi, density), random_matrix(rng, n2, n3, 0, hi, density), d.matrix())
    return plant_triangles(rng, inst, plant), d


def all_exact_instance(rng, n1, n2, n3, hi=8) -> TriangleInstance:
    """Rank-one style instance in which every triple is an exact triangle."""
    a = rng.integers(0, hi + 1, n1)
    b = rng.integers(0, hi + 1, n2)
    c = rng.integers(0, hi + 1, n3)
    A = MaskedMatrix(a[:, None] + b[None, :])
    B = MaskedMatrix(-b[:, None] + c[None, :])
    C = MaskedMatrix(a[:, None] + c[None, :])
    return TriangleInstance(A, B, C)


def regular_instance(rng, X, m1, m2, m3) -> TriangleInstance:
    """D-uniform and 1/D-regular instance (D = |X|) with dimensions m*D.

    Entries follow shifted Latin patterns so every value occurs equally often
    in every row and column of each matrix.
    """
    X = np.asarray(sorted(set(int(x) for x in X)), dtype=np.int64)
    D = X.size
    n1, n2, n3 = m1 * D, m2 * D, m3 * D

    def latin(p, q):
        pr, pc = rng.permutation(p), rng.permutation(q)
        return X[(pr[:, None] + pc[None, :]) % D]

    return TriangleInstance(MaskedMatrix(latin(n1, n2)), MaskedMatrix(latin(n2, n3)), MaskedMatrix(latin(n1, n3)))


def low_doubling_set(rng, size, kind="progression", base=0):
    if kind == "progression":
        step = int(rng.integers(1, 4))
        return [base + step * i for i in range(size)]
    if kind == "geometric":
        return [base + 2**i for i in range(size)]
    return sorted(set(rng.integers(0, 4 * size, size).tolist()))


def bd_matrix(rng, n, m, c, lo=0) -> np.ndarray:
    """Row-bounded-difference matrix: neighbours in a row differ by at most c."""
    start = rng.integers(lo, lo + 4 * c + 1, (n, 1))
    steps = rng.integers(-c, c + 1, (n, m - 1))
    return np.concatenate([start, start + np.cumsum(steps, axis=1)], axis=1)
