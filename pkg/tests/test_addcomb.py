import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from minplus.addcomb import (
    IntegerSet,
    bsg_cover,
    doubling_constant,
    greedy_cover,
    greedy_cover_bound,
    iterated_sumset,
    popular_sum_decomposition,
    popular_sums,
    sum_order_hash_search,
    sumset_with_multiplicities,
    verify_sum_order_preserving,
)
from minplus.errors import DomainError

small_sets = st.sets(st.integers(-20, 20), min_size=1, max_size=8)


def pair_counts(X, Y):
    out = {}
    for x in X:
        for y in Y:
            out[x + y] = out.get(x + y, 0) + 1
    return out


def test_integer_set_sorted_distinct():
    X = IntegerSet([3, 1, 3, -2])
    assert list(X) == [-2, 1, 3] and len(X) == 3 and 1 in X
    assert X.to_json() == [-2, 1, 3]


def test_multiplicity_examples():
    assert sumset_with_multiplicities({0}, {0}) == {0: 1}
    assert sumset_with_multiplicities({1, 2}, {10, 20}) == {11: 1, 12: 1, 21: 1, 22: 1}


@given(small_sets, small_sets)
def test_multiplicities_match_pair_loop(X, Y):
    assert sumset_with_multiplicities(X, Y) == pair_counts(X, Y)
    assert sumset_with_multiplicities(X, {0}) == {x: 1 for x in X}


def test_popular_sum_examples():
    assert popular_sums({0, 1}, {0, 1}, 2) == IntegerSet([1])
    assert popular_sums({0, 1}, {3, 5}, 1) == IntegerSet([3, 4, 5, 6])
    assert len(popular_sums({0, 1}, {0, 1}, 5)) == 0
    with pytest.raises(DomainError):
        popular_sums({0}, {0}, 0)


@given(small_sets, small_sets, st.integers(1, 6))
def test_popular_size_bound(X, Y, s):
    P = popular_sums(X, Y, s)
    assert len(P) * s <= len(X) * len(Y)
    assert set(P) == {z for z, c in pair_counts(X, Y).items() if c >= s}


def test_doubling_examples():
    assert doubling_constant(range(8)) == Fraction(15, 8)
    assert doubling_constant({1, 2, 4, 8}) == Fraction(10, 4)
    assert doubling_constant({7}) == 1
    with pytest.raises(DomainError):
        doubling_constant([])


# popular sum decomposition


def check_side(Xs, Ys, side, d, p):
    n, m = len(Xs), len(Ys)
    assert side.rounds <= math.ceil(p * p)
    for g, pattern in enumerate(side.patterns):
        assert len(pattern) <= d
    for i, X in enumerate(Xs):
        pieces = [side.parts[g][i] for g in range(side.rounds)] + [side.rest[i]]
        assert sum(len(P) for P in pieces) == len(X)
        assert set().union(*map(set, pieces)) == set(X)
        for g in range(side.rounds):
            part, s = side.parts[g][i], side.shifts[g][i]
            if len(part):
                assert {x - s for x in part} <= set(side.patterns[g])
    thr = max(2 * d / p, 1)
    bad = sum(1 for i in range(n) for j in range(m) if any(c >= thr for c in pair_counts(side.rest[i], Ys[j]).values()))
    assert bad * p <= n * m


def check_decomposition(Xs, Ys, d, p):
    dec = popular_sum_decomposition(Xs, Ys, d, p)
    check_side(Xs, Ys, dec.x, d, p)
    check_side(Ys, Xs, dec.y, d, p)
    return dec


def test_decomposition_shared_single_element():
    dec = check_decomposition([{0}] * 3, [{0}] * 3, 1, 2)
    assert dec.x.rounds == 1 and all(len(R) == 0 for R in dec.x.rest)


def test_decomposition_stops_immediately():
    Xs = [{0, 1}, {100, 101}]
    Ys = [{1000, 3000}, {5000, 9000}]
    dec = check_decomposition(Xs, Ys, 2, 1.5)
    assert dec.x.rounds == 0 and [set(R) for R in dec.x.rest] == Xs


def test_decomposition_random_six(rng):
    Xs = [set(rng.choice(12, 4, replace=False).tolist()) for _ in range(6)]
    Ys = [set(rng.choice(12, 4, replace=False).tolist()) for _ in range(6)]
    check_decomposition(Xs, Ys, 4, 2)


def test_decomposition_size_error():
    with pytest.raises(DomainError):
        popular_sum_decomposition([{0, 1, 2}], [{0}], 2, 1)


@given(st.integers(0, 2**32 - 1))
def test_decomposition_property(seed):
    rng = np.random.default_rng(seed)
    n, m, d = (int(v) for v in rng.integers(1, 6, 3))
    p = float(rng.choice([1, 1.5, 2, 3]))
    Xs = [set(rng.integers(0, 10, int(rng.integers(1, d + 1))).tolist()) for _ in range(n)]
    Ys = [set(rng.integers(0, 10, int(rng.integers(1, d + 1))).tolist()) for _ in range(m)]
    check_decomposition(Xs, Ys, d, p)


# coverings


def test_greedy_subset_uses_zero():
    assert greedy_cover({1, 2}, {0, 1, 2, 3}) == IntegerSet([0])


def test_greedy_progression_bound():
    X, Y = set(range(8)), {0, 1}
    S = greedy_cover(X, Y)
    assert X <= {y + s for y in Y for s in S}
    assert len(S) <= math.ceil(9 / 2 * math.log(8)) == greedy_cover_bound(X, Y)


def test_greedy_singleton():
    assert len(greedy_cover({5}, {0, 3})) == 1


@given(small_sets, small_sets)
def test_greedy_property(X, Y):
    S = greedy_cover(X, Y)
    assert X <= {y + s for y in Y for s in S}
    assert len(S) <= greedy_cover_bound(X, Y)


def test_bsg_disjoint_target():
    out = bsg_cover({0, 1}, {0, 1}, {50}, 3)
    assert out.rectangles == [] and out.remainder == set()


def test_bsg_full_rectangle():
    X = set(range(8))
    out = bsg_cover(X, X, X, 1)
    # the densest neighbourhood rectangle is kept; the remainder is exact
    edges = {(x, y) for x in X for y in X if x + y in X}
    covered = {(x, y) for Xl, Yl in out.rectangles for x in Xl for y in Yl}
    assert out.remainder == edges - covered


@given(small_sets, small_sets, small_sets, st.integers(0, 3))
def test_bsg_remainder_is_exact(X, Y, Z, L):
    out = bsg_cover(X, Y, Z, L)
    edges = {(x, y) for x in X for y in Y if x + y in Z}
    covered = {(x, y) for Xl, Yl in out.rectangles for x in Xl for y in Yl}
    assert len(out.rectangles) <= L
    assert out.remainder == edges - covered


# sum-order-preserving hashing


def test_hash_examples():
    assert verify_sum_order_preserving([0, 3, 6, 9], [0, 1, 2, 3])
    assert not verify_sum_order_preserving([0, 1, 10], [0, 1, 2])
    assert verify_sum_order_preserving([0, 1, 10], {0: 0, 1: 1, 10: 3})


def test_hash_search_examples():
    r = sum_order_hash_search([0, 1, 10])
    assert r.status == "found" and list(r.domain) == [0, 1, 10] and r.values == (0, 1, 3)
    r = sum_order_hash_search([2, 5, 8, 11])
    assert r.status == "found" and len(r.domain) == 4 and verify_sum_order_preserving(r.domain, r.values)
    for X in ([4], [1, 9]):
        r = sum_order_hash_search(X)
        assert r.status == "found" and list(r.domain) == X and r.values == tuple(range(len(X)))
    assert r.to_json() == {"status": "found", "domain": [1, 9], "values": [0, 1]}


def test_hash_budget_is_reported():
    r = sum_order_hash_search([0, 1, 3, 7, 15, 31], budget=3)
    assert r.status == "budget" and r.to_json() == {"status": "budget"}


@given(st.sets(st.integers(0, 40), min_size=1, max_size=6))
def test_hash_results_verify(X):
    r = sum_order_hash_search(X)
    assert r.status == "found"
    assert set(r.domain) <= X and max(r.values) <= len(X)
    assert verify_sum_order_preserving(r.domain, r.values)


# inequalities


@given(st.sets(st.integers(0, 30), min_size=1, max_size=7), st.integers(0, 2), st.integers(0, 2))
def test_pluennecke_ruzsa(X, n, m):
    K = doubling_constant(X)
    assert len(iterated_sumset(X, n, m)) <= K ** (n + m) * len(X)


@given(small_sets, small_sets, small_sets)
def test_ruzsa_triangle(X, Y, Z):
    X, Y, Z = IntegerSet(X), IntegerSet(Y), IntegerSet(Z)
    assert len(X - Y) * len(Z) <= len(X - Z) * len(Z - Y)
    assert len(X + Y) * len(Z) <= len(X + Z) * len(Y + Z)


@given(small_sets, small_sets)
def test_sumset_doubling(X, Y):
    K = max(doubling_constant(X), doubling_constant(Y))
    Z = IntegerSet(X) + IntegerSet(Y)
    assert len(Z.sumset) <= K**8 * len(Z)
