import math
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from trimbirk.contfrac import cfe_of_quadratic, golden, periodic_stream
from trimbirk.diophantine import TrimmingSequence
from trimbirk.errors import PreconditionError, ValidationError
from trimbirk.observables import PowerObservable, TruncatedObservable, truncate
from trimbirk.orbit import RotationContext, make_context, position
from trimbirk.trimsum import (
    birkhoff_sum,
    brute_trimmed_sum,
    cluster_gap_bound,
    denjoy_koksma_check,
    qn_bound_suite,
    sandwich_errlem,
    shift_coupling,
    strong1xlembn_check,
    trimmed_profile,
    trimmed_sum,
    trimmed_sums_multi,
)

GOLD = make_context(golden(), 10**5)
SILVER = make_context(cfe_of_quadratic(-1, 1, 2, 1), 10**5)
MIXED = make_context(periodic_stream((5, 1, 12, 2, 1, 30), (3, 1, 2)), 10**5)
CONTEXTS = [GOLD, SILVER, MIXED]
OBSERVABLES = [PowerObservable(1.0), PowerObservable(2.0), PowerObservable(1.5, 2.0, 0.5), PowerObservable(1.0, 1.0, 1.0)]


def test_small_example():
    c = RotationContext.rational(3, 5)
    r = birkhoff_sum(c, PowerObservable(1), F(1, 10), 5)
    assert r.total == pytest.approx(10 + 10 / 7 + 10 / 3 + 10 / 9 + 2, rel=1e-15)
    r1 = trimmed_sum(c, PowerObservable(1), F(1, 10), 5, 1)
    assert r1.removed_times == (0,) and r1.removed_values == (10.0,)
    assert trimmed_sum(c, PowerObservable(1), F(1, 10), 5, 5).trimmed == 0.0
    assert trimmed_sum(c, PowerObservable(1), F(1, 10), 3, 9).trimmed == 0.0


@settings(max_examples=400, deadline=None)
@given(st.integers(0, 2), st.integers(0, 3), st.integers(1, 200), st.integers(0, 30), st.integers(0, 10**12))
def test_streaming_equals_brute(ci, oi, N, k, seed):
    ctx, obs = CONTEXTS[ci], OBSERVABLES[oi]
    x = F(seed % ctx.q, ctx.q)
    a = trimmed_sum(ctx, obs, x, N, k)
    b = brute_trimmed_sum(ctx, obs, x, N, k)
    assert a.removed_times == b.removed_times
    assert a.removed_values == b.removed_values
    assert abs(a.trimmed - b.trimmed) <= a.residual + b.residual


def test_streaming_across_chunks():
    x = GOLD.grid_point(7, 50, avoid_N=10**5)
    for obs in OBSERVABLES[:3]:
        a = trimmed_sum(GOLD, obs, x, 10**5, 12)
        b = brute_trimmed_sum(GOLD, obs, x, 10**5, 12)
        assert a.removed_times == b.removed_times
        assert abs(a.trimmed - b.trimmed) <= a.residual + b.residual


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2), st.integers(2, 3000), st.integers(0, 10**12))
def test_monotone_in_k(ci, N, seed):
    ctx = CONTEXTS[ci]
    x = F(seed % ctx.q, ctx.q)
    ks = list(range(0, 12))
    vals = trimmed_sums_multi(ctx, PowerObservable(1.0), x, N, ks)
    assert vals[0] == pytest.approx(birkhoff_sum(ctx, PowerObservable(1.0), x, N).total, rel=1e-14)
    for k in ks[1:]:
        assert vals[k] <= vals[k - 1] * (1 + 1e-14)


def test_profile_matches_pointwise():
    x = SILVER.grid_point(3, 10, avoid_N=10**5)
    Ns = [10, 100, 1000, 5000, 10**4, 10**5]
    k = TrimmingSequence("log", 1, monotone=True)
    rows = trimmed_profile(SILVER, PowerObservable(2.0), x, Ns, k)
    for r in rows:
        single = trimmed_sum(SILVER, PowerObservable(2.0), x, r.N, k(r.N))
        assert r.trimmed == pytest.approx(single.trimmed, rel=1e-13)
        assert r.ratio == 1.0
    with pytest.raises(ValidationError):
        trimmed_profile(SILVER, PowerObservable(1.0), x, [10, 5], 1)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2), st.integers(0, 3), st.integers(1, 2000), st.integers(0, 12), st.integers(0, 10**12))
def test_shift_coupling(ci, oi, N, k, seed):
    ctx, obs = CONTEXTS[ci], OBSERVABLES[oi]
    x = F(seed % ctx.q, ctx.q)
    a, b = shift_coupling(ctx, obs, x, N, k)
    assert sorted(a.removed_values) == sorted(b.removed_values)
    if obs.one_sided or len(set(a.removed_values)) == len(a.removed_values):
        assert sorted(N - 1 - j for j in a.removed_times) == sorted(b.removed_times)
    assert a.trimmed == pytest.approx(b.trimmed, rel=1e-12, abs=1e-12)


def test_denjoy_koksma_random_and_negative_control():
    rng = random.Random(2)
    failures_quarter = 0
    for _ in range(150):
        ctx = rng.choice(CONTEXTS)
        n = rng.randint(3, 14)
        if ctx.table.q[n] > ctx.max_valid_N:
            continue
        t = F(1, rng.randint(2, 400))
        obs = PowerObservable(rng.choice([1.0, 2.0]))
        x = F(rng.randrange(ctx.q), ctx.q)
        r = denjoy_koksma_check(ctx, truncate(obs, t), x, n)
        assert r["pass"], r
        failures_quarter += r["lhs"] > r["variation"] / 4
    assert failures_quarter > 0  # a quarter of the bound is not safe
    zero = TruncatedObservable(PowerObservable(1.0), F(1))
    assert denjoy_koksma_check(GOLD, zero, F(0), 5)["lhs"] == 0


def test_errlem_and_strong_bn_random():
    rng = random.Random(3)
    for _ in range(200):
        ctx = rng.choice(CONTEXTS)
        N = rng.randint(2, 20000)
        x = F(rng.randrange(ctx.q), ctx.q)
        assert sandwich_errlem(ctx, x, N)["pass"]
        assert strong1xlembn_check(ctx, x, N)["pass"]


def test_qn_bound():
    xs = [GOLD.grid_point(i, 5, avoid_N=10**5) for i in range(5)]
    rows = qn_bound_suite(GOLD, xs, 10**5)
    assert rows and all(r["pass"] for r in rows)
    assert {r["q_n"] for r in rows} >= {89, 75025}


def test_cluster_gap_bound():
    rng = random.Random(4)
    valid = 0
    for _ in range(300):
        ctx = rng.choice(CONTEXTS)
        n = rng.randint(3, 12)
        qn, qn1 = ctx.table.q[n], ctx.table.q[n + 1]
        if qn1 > ctx.max_valid_N:
            continue
        N = rng.randint(qn, qn1 - 1)
        x = F(rng.randrange(ctx.q), ctx.q)
        k = rng.randint(0, N // qn + 1)
        r = cluster_gap_bound(ctx, x, n, N, k)
        if r["valid"]:
            valid += 1
            assert r["pass"], r
    assert valid > 20
    with pytest.raises(PreconditionError):
        cluster_gap_bound(GOLD, F(0), 5, 1000, 1)


def test_grid_points_avoid_zero():
    for i in range(20):
        x = GOLD.grid_point(i, 20, avoid_N=1000)
        assert all(position(GOLD, x, j) != 0 for j in range(1000))
    assert math.isfinite(birkhoff_sum(GOLD, PowerObservable(1.0), GOLD.grid_point(0, 20, avoid_N=10), 10).total)
