import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trimbirk.contfrac import cfe_of_quadratic, golden, periodic_stream
from trimbirk.errors import DomainError, RangeError
from trimbirk.orbit import (
    RotationContext,
    count_in_interval,
    count_in_interval_enum,
    countlem_check,
    floor_sum,
    frame,
    iota,
    j1_coincidence,
    k_smallest_fast,
    k_smallest_positive,
    last_point,
    make_context,
    numerators,
    position,
    signed_position,
    x_min,
)

GOLD = make_context(golden(), 10**4)
SILVER = make_context(cfe_of_quadratic(-1, 1, 2, 1), 10**4)
ODD = make_context(periodic_stream((3, 1, 7, 2), (1, 4, 1)), 10**4)
CONTEXTS = [GOLD, SILVER, ODD]


def test_small_rational_examples():
    c = RotationContext.rational(3, 5)
    assert position(c, F(1, 10), 2) == F(3, 10)
    assert count_in_interval(c, F(1, 10), 5, 0, F(1, 2)) == 3
    assert count_in_interval(c, F(1, 10), 5, 0, 1) == 5
    assert signed_position(c, F(1, 10), 1) == F(-3, 10)
    assert iota(F(1, 2)) == F(-1, 2)


def test_guard_level_selection():
    assert GOLD.M == 50 and GOLD.q == 12586269025  # F_50
    assert GOLD.max_valid_N >= 10**4
    assert GOLD.max_valid_N <= GOLD.table.q[GOLD.M - 2]
    with pytest.raises(DomainError):
        make_context(periodic_stream((1, 2, 2), ()), 10)
    with pytest.raises(RangeError):
        GOLD.check_N(GOLD.max_valid_N + 1)
    with pytest.raises(DomainError):
        position(GOLD, F(3, 2), 0)


def test_floor_sum_brute():
    rng = random.Random(5)
    for _ in range(500):
        n, m, a, b = rng.randint(1, 60), rng.randint(1, 60), rng.randint(0, 200), rng.randint(0, 200)
        assert floor_sum(n, m, a, b) == sum((a * i + b) // m for i in range(n))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9), st.integers(0, 200), st.integers(1, 5000), st.sampled_from([1, 3, 7]))
def test_numerators_match_exact_positions(seed, start, count, den):
    ctx = CONTEXTS[seed % 3]
    x = F(seed % (ctx.q * den), ctx.q * den)
    f = frame(ctx, x)
    arr = numerators(f, start, count)
    for j in (0, count // 2, count - 1):
        assert F(int(arr[j]), f.D) == position(ctx, x, start + j)


def test_numerators_object_fallback():
    big = make_context(golden(), 10**4, safety=2**60)
    assert big.q >= 2**62
    f = frame(big, F(7, big.q))
    arr = numerators(f, 3, 50)
    assert arr.dtype == object
    assert F(int(arr[10]), f.D) == position(big, F(7, big.q), 13)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2), st.integers(1, 10**4), st.integers(0, 40), st.integers(0, 10**12), st.booleans())
def test_fast_equals_oracle(ci, N, k, seed, on_grid):
    ctx = CONTEXTS[ci]
    x = F(seed % ctx.q, ctx.q) if on_grid else F(seed % 9973, 9973)
    assert k_smallest_fast(ctx, x, N, k, check=False) == k_smallest_positive(ctx, x, N, k)


def test_zero_point_excluded():
    ctx = GOLD
    x = position(ctx, F(0), ctx.q - 5)  # R^5 of this point is 0
    res = k_smallest_positive(ctx, x, 20, 20)
    assert len(res) == 19 and all(j != 5 for j, _ in res)
    assert k_smallest_fast(ctx, x, 20, 20, check=False) == res
    assert last_point(ctx, x, 20) == 5


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2), st.integers(1, 400), st.integers(0, 10**12), st.fractions(0, 1), st.fractions(0, 1))
def test_count_matches_enumeration(ci, N, seed, u, v):
    if u == v:
        return
    u, v = min(u, v), max(u, v)
    ctx = CONTEXTS[ci]
    x = F(seed % ctx.q, ctx.q)
    assert count_in_interval(ctx, x, N, u, v) == count_in_interval_enum(ctx, x, N, u, v)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2), st.integers(2, 3000), st.integers(0, 10**12))
def test_three_distance(ci, N, seed):
    ctx = CONTEXTS[ci]
    x = F(seed % ctx.q, ctx.q)
    c = np.sort(numerators(frame(ctx, x), 0, N))
    gaps = set(np.diff(c).tolist()) | {int(c[0] + ctx.q - c[-1])}
    assert len(gaps) <= 3


def test_stable_under_deeper_proxy():
    shallow = make_context(golden(), 5000)
    deep = make_context(golden(), 5000, M=shallow.M + 6)
    rng = random.Random(3)
    for _ in range(50):
        N, k = rng.randint(1, 5000), rng.randint(1, 15)
        x = F(rng.randrange(shallow.q), shallow.q)
        a = [j for j, _ in k_smallest_positive(shallow, x, N, k)]
        b = [j for j, _ in k_smallest_positive(deep, x, N, k)]
        assert a == b


def test_mirror_reverses_orbit():
    m = GOLD.mirror()
    assert m.p == GOLD.q - GOLD.p and m.mirrored
    x, N = F(12345, GOLD.q), 100
    y = position(GOLD, x, N - 1)
    for j in range(N):
        assert position(m, y, j) == position(GOLD, x, N - 1 - j)


def test_countlem_random():
    rng = random.Random(11)
    for _ in range(300):
        ctx = rng.choice(CONTEXTS)
        n = rng.randint(2, 18)
        if ctx.table.q[n] > ctx.max_valid_N:
            continue
        x = F(rng.randrange(ctx.q), ctx.q)
        assert countlem_check(ctx, x, n)["pass"]


def test_j1_coincidence_random():
    rng = random.Random(12)
    applicable = hyp = 0
    for _ in range(2000):
        ctx = rng.choice(CONTEXTS)
        N = rng.randint(2, 3000)
        x = F(rng.randrange(ctx.q), ctx.q)
        r = j1_coincidence(ctx, x, N)
        if r["applicable"]:
            applicable += 1
            hyp += r["hypothesis"]
            assert r["pass"]
    assert applicable > 0 and hyp > 0


def test_j1_example_golden():
    ctx = GOLD
    r = j1_coincidence(ctx, F(0), 10)
    assert r["n"] == ctx.table.level(10)
    assert x_min(ctx, F(0), 10) == position(ctx, F(0), k_smallest_positive(ctx, F(0), 10, 1)[0][0])
