"""Witness listing on top of a decision solver.

``sampled`` is the randomized scheme: restrict the witness index to a random
subset K of rate 2**-l and decode the index of a surviving unique witness
from one extra call per bit of the index.  ``probe`` restricts the index to a
single value at a time and is deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import MaskedMatrix, TriangleInstance, exact_triangle_brute

SAMPLE_CONSTANT = 2 * math.e
FAIL_PROB = 0.01


def repetitions(t: int, size: int, edges: int, fail_prob: float = FAIL_PROB) -> int:
    """Rounds needed so every edge with ≤ t witnesses is fully listed w.p. 1 - fail_prob.

    A fixed witness of an edge with W ≤ t witnesses is the unique survivor of
    a round with probability at least 1/(2e·W·(levels)); the union bound over
    t·edges witnesses gives the count below.
    """
    levels = max(size - 1, 0).bit_length() + 1
    return max(1, math.ceil(SAMPLE_CONSTANT * t * levels * math.log(max(t * edges, 1) / fail_prob)))


@dataclass
class _Family:
    size: int  # range of the witness index
    query: object  # keep (mask over the index) -> edge flags of the restricted instance
    present: np.ndarray  # which edges exist
    check: object  # (edges array, index array) -> bool array
    live: np.ndarray | None = None  # indices that can witness anything at all
    base: np.ndarray | None = None  # edge flags of the unrestricted instance, if known


def _families(inst: TriangleInstance, solver) -> dict[str, _Family]:
    A, B, C = inst.A, inst.B, inst.C
    n1, n2, n3 = inst.dims

    def cut_rows(M, keep):
        return M.restrict(np.broadcast_to(keep[:, None], M.shape))

    def cut_cols(M, keep):
        return M.restrict(np.broadcast_to(keep[None, :], M.shape))

    def chk_c(e, k):  # e: (i, j)
        i, j = e[:, 0], e[:, 1]
        ok = (k >= 0) & (k < n2)
        k = np.clip(k, 0, n2 - 1)
        return ok & A.mask[i, k] & B.mask[k, j] & (A.values[i, k] + B.values[k, j] == C.values[i, j])

    def chk_a(e, j):  # e: (i, k)
        i, k = e[:, 0], e[:, 1]
        ok = (j >= 0) & (j < n3)
        j = np.clip(j, 0, n3 - 1)
        return ok & B.mask[k, j] & C.mask[i, j] & (A.values[i, k] + B.values[k, j] == C.values[i, j])

    def chk_b(e, i):  # e: (k, j)
        k, j = e[:, 0], e[:, 1]
        ok = (i >= 0) & (i < n1)
        i = np.clip(i, 0, n1 - 1)
        return ok & A.mask[i, k] & C.mask[i, j] & (A.values[i, k] + B.values[k, j] == C.values[i, j])

    return {
        "c": _Family(n2, lambda keep: solver(TriangleInstance(cut_cols(A, keep), B, C)).c, C.mask, chk_c,
                     A.mask.any(axis=0) & B.mask.any(axis=1)),
        "a": _Family(n3, lambda keep: solver(TriangleInstance(A, cut_cols(B, keep), C)).a, A.mask, chk_a,
                     B.mask.any(axis=0) & C.mask.any(axis=0)),
        "b": _Family(n1, lambda keep: solver(TriangleInstance(cut_rows(A, keep), B, C)).b, B.mask, chk_b,
                     A.mask.any(axis=1) & C.mask.any(axis=1)),
    }


def _sampled(fam: _Family, t, rng, reps) -> dict:
    found: dict[tuple[int, int], set[int]] = {}
    n = fam.size
    if n == 0:
        return {}
    bits = max(n - 1, 0).bit_length()
    levels = bits + 1
    idx = np.arange(n)
    edges = np.argwhere(fam.present)
    if reps is None:
        reps = repetitions(t, n, len(edges))
    for _ in range(reps):
        l = int(rng.integers(0, levels))
        K = rng.random(n) < 2.0**-l
        if not K.any():
            continue
        base = fam.query(K)
        hit = base & fam.present
        if not hit.any():
            continue
        code = np.zeros(base.shape, dtype=np.int64)
        for b in range(bits):
            fb = fam.query(K & ((idx >> b) & 1).astype(bool))
            code |= fb.astype(np.int64) << b
        e = np.argwhere(hit)
        cand = code[hit]
        ok = fam.check(e, cand) & K[np.clip(cand, 0, n - 1)]
        for (x, y), w in zip(e[ok].tolist(), cand[ok].tolist()):
            found.setdefault((x, y), set()).add(w)
    return found


def _probe(fam: _Family) -> dict:
    live = np.arange(fam.size) if fam.live is None else np.flatnonzero(fam.live)
    if live.size == 0:
        return {}
    if live.size == 1 and fam.base is not None:
        # the only candidate index witnesses every edge that has a witness
        hits = (fam.base & fam.present)[None]
    else:
        keep = np.zeros((live.size, fam.size), dtype=bool)
        keep[np.arange(live.size), live] = True
        hits = np.stack([fam.query(kp) for kp in keep]) & fam.present
    found: dict[tuple[int, int], list[int]] = {}
    lv = live.tolist()
    for x, y, w in np.argwhere(hits.transpose(1, 2, 0)).tolist():
        found.setdefault((x, y), []).append(lv[w])
    return found


def _check_method(method: str):
    if method not in ("sampled", "probe"):
        raise ValueError(f"unknown listing method {method!r}")


def _cap(found: dict, t) -> dict[tuple[int, int], list[int]]:
    return {e: sorted(ws)[:t] for e, ws in sorted(found.items())}


def _cap_sorted(found: dict, t) -> dict[tuple[int, int], list[int]]:
    # probe output: keys in row-major order, lists ascending
    return {e: ws[:t] for e, ws in found.items()}


def list_witnesses_exact_triangle(inst: TriangleInstance, t: int, solver=exact_triangle_brute, seed: int = 0, method: str = "sampled", reps: int | None = None, families=("a", "b", "c")) -> dict[str, dict]:
    """Up to t witnesses per edge: ``{"a": {(i,k): [j..]}, "b": {(k,j): [i..]}, "c": {(i,j): [k..]}}``.

    Every reported witness is checked against the instance.  ``families``
    limits the listing to some of the three edge kinds.
    """
    _check_method(method)
    rng = np.random.default_rng(seed)
    out = {}
    for name, fam in _families(inst, solver).items():
        if name not in families:
            continue
        if method == "probe":
            out[name] = _cap_sorted(_probe(fam), t)
        else:
            out[name] = _cap(_sampled(fam, t, rng, reps), t)
    return out


def list_witnesses_min_plus(A: MaskedMatrix, B: MaskedMatrix, t: int, solver, seed: int = 0, method: str = "sampled", reps: int | None = None) -> dict[tuple[int, int], list[int]]:
    """Up to t witnesses k of each finite entry of A*B, using a min-plus solver as black box."""
    _check_method(method)
    n2 = A.cols
    C = solver(A, B)

    def query(keep):
        mask = A.mask & keep[None, :]
        P = solver(MaskedMatrix._trusted(np.where(mask, A.values, 0), mask), B)
        return P.mask & C.mask & (P.values == C.values)

    def check(e, k):
        i, j = e[:, 0], e[:, 1]
        ok = (k >= 0) & (k < n2)
        k = np.clip(k, 0, n2 - 1)
        return ok & A.mask[i, k] & B.mask[k, j] & (A.values[i, k] + B.values[k, j] == C.values[i, j])

    fam = _Family(n2, query, C.mask, check, A.mask.any(axis=0) & B.mask.any(axis=1), C.mask)
    if method == "probe":
        return _cap_sorted(_probe(fam), t)
    return _cap(_sampled(fam, t, np.random.default_rng(seed), reps), t)


def first_witness_min_plus(A: MaskedMatrix, B: MaskedMatrix, solver, seed: int = 0, method: str = "probe", reps: int | None = None, C: MaskedMatrix | None = None) -> np.ndarray:
    """One witness per finite cell of A*B as an (n1, n3) array, -1 where none was found.

    Same scheme as ``list_witnesses_min_plus`` with t = 1; ``probe`` returns the
    smallest witness.  A precomputed product can be passed as ``C``.
    """
    _check_method(method)
    n1, n2 = A.shape
    n3 = B.cols
    out = np.full((n1, n3), -1, dtype=np.int64)
    if method == "sampled":
        for (i, j), ks in list_witnesses_min_plus(A, B, 1, solver, seed, method, reps).items():
            out[i, j] = ks[0]
        return out
    C = solver(A, B) if C is None else C
    live = np.flatnonzero(A.mask.any(axis=0) & B.mask.any(axis=1))
    if live.size == 0:
        return out
    if live.size == 1:
        out[C.mask] = live[0]
        return out
    for k in live[::-1]:
        mask = A.mask & (np.arange(n2) == k)[None, :]
        P = solver(MaskedMatrix._trusted(np.where(mask, A.values, 0), mask), B)
        hit = P.mask & C.mask & (P.values == C.values)
        out[hit] = k
    return out
