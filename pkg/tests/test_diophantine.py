import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from trimbirk.contfrac import convergents, golden, periodic_stream
from trimbirk.diophantine import (
    GrowthWindow,
    SublinearRule,
    TrimmingSequence,
    canonical_subsequence,
    condition_D,
    condition_III,
    construct_alpha_in_window,
    construct_alpha_seq1xrem,
    iterated_log,
    logprop_trajectory,
    roth_profile,
    u_scan,
)
from trimbirk.errors import BudgetError, ConstructionError, DomainError, PreconditionError, ValidationError


def test_iterated_log():
    assert iterated_log(1, math.e) == pytest.approx(1.0)
    assert iterated_log(2, 10**6) == pytest.approx(math.log(math.log(10**6)))
    with pytest.raises(DomainError):
        iterated_log(2, 1)
    with pytest.raises(DomainError):
        iterated_log(3, 2)


@settings(max_examples=100, deadline=None)
@given(st.floats(20, 1e300))
def test_iterated_log_against_mpmath(x):
    with mpmath.workdps(50):
        ref = mpmath.log(mpmath.log(mpmath.log(mpmath.mpf(x))))
    assert iterated_log(3, x) == pytest.approx(float(ref), rel=1e-12, abs=1e-14)


def test_trimming_rules():
    assert TrimmingSequence("const", 1)(10) == 1
    assert TrimmingSequence("const", 5)(3) == 3
    k = TrimmingSequence("log", 1)
    assert [k(N) for N in (1, 2, 3, 1000, 10**6)] == [0, 1, 2, 7, 14]
    p = TrimmingSequence("pow", 0.5)
    assert [p(N) for N in (1, 4, 5, 10**6, 10**6 + 1)] == [1, 2, 3, 1000, 1001]
    t = TrimmingSequence("table", table=(0, 0, 1, 1, 2), monotone=True)
    assert t.evaluate([1, 2, 3, 4]) == [0, 1, 1, 2]
    with pytest.raises(ValidationError):
        TrimmingSequence("table", table=(0, 1, 0), monotone=True).evaluate([1, 2])
    with pytest.raises(ValidationError):
        TrimmingSequence("table", table=(0, 5))(1)
    with pytest.raises(ValidationError):
        TrimmingSequence("bogus", 1)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 10**12), st.sampled_from([Fraction(1, 2), Fraction(1, 3), Fraction(2, 3), Fraction(3, 4)]))
def test_pow_rule_exact(N, th):
    k = TrimmingSequence("pow", th)(N)
    assert k ** th.denominator >= N ** th.numerator
    assert (k - 1) ** th.denominator < N ** th.numerator


def test_window_example_digit_range():
    w = GrowthWindow("q*ln(q)*log3(q)", "q*ln(q)^2")
    assert w.admissible_digits(1009, 1) == (5, 47)
    assert w.choose_digit(1009, 1) == 15
    with pytest.raises(PreconditionError):
        w.bounds(15)
    assert w.bounds(16)[0][0] > 0


def test_window_construction_verified():
    w = GrowthWindow("q*ln(q)*log3(q)", "q*ln(q)^2")
    s = construct_alpha_in_window(w, [1009], 5)
    t = convergents(s, len(s.prefix))
    with mpmath.workdps(60):
        for n in range(2, len(t.q) - 1):
            q, qn = t.q[n], t.q[n + 1]
            if q < 1009:
                continue
            L = q * mpmath.log(q) * mpmath.log(mpmath.log(mpmath.log(q)))
            U = q * mpmath.log(q) ** 2
            assert L < qn < U


def test_window_liouville_inf():
    s = construct_alpha_in_window(GrowthWindow("q^2"), [1, 1008], 2)
    assert s.prefix[2] == 1009
    t = convergents(s, 4)
    assert t.q[4] > t.q[3] ** 2 and t.q[5] > t.q[4] ** 2


def test_window_empty():
    # lower and upper squeeze out every integer digit
    w = GrowthWindow("q*2.3", "q*2.6")
    with pytest.raises(ConstructionError):
        construct_alpha_in_window(w, [1000], 1)
    with pytest.raises(ValidationError):
        GrowthWindow("q*__import__(1)").bounds(10)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 1.0), st.integers(20, 5000))
def test_power_window_construction(g, q0):
    w = GrowthWindow("q^(1+g)", "q^(1+2*g)", (("g", g),))
    try:
        s = construct_alpha_in_window(w, [q0], 2)
    except ConstructionError:
        # confirm by brute force that the first empty level really is empty
        lo, hi = q0 ** (1 + g), q0 ** (1 + 2 * g)
        assert not any(lo * (1 + 1e-12) < a * q0 + 1 < hi * (1 - 1e-12) for a in range(1, int(hi) + 2))
        return
    t = convergents(s, 3)
    for n in (2, 3):
        q, qn = t.q[n], t.q[n + 1]
        assert q ** (1 + g) * (1 - 1e-12) < qn < q ** (1 + 2 * g) * (1 + 1e-12)


def brute_u(rule, eps, horizon):
    last = 0
    for m in range(1, horizon):
        if rule(m) >= eps * m:
            last = m
    return last + 1


@pytest.mark.parametrize("rule", [SublinearRule("zero"), SublinearRule("const", 3), SublinearRule("pow", 0.5),
                                  SublinearRule("nlog")])
def test_u_scan_against_brute(rule):
    for q in (1, 2, 3):
        eps = Fraction(1, q * q)
        assert u_scan(rule, eps) == brute_u(rule, eps, 200000)


def test_seq1xrem():
    s = construct_alpha_seq1xrem(SublinearRule("zero"), [1, 1008], 1)
    assert s.prefix == (1, 1008, 1009)
    s = construct_alpha_seq1xrem(SublinearRule("nlog"), [2], 1)
    t = convergents(s, 2)
    assert t.q[3] > t.q[2] ** 2 * u_scan(SublinearRule("nlog"), Fraction(1, 4))
    with pytest.raises(DomainError):
        SublinearRule("linear")
    with pytest.raises(BudgetError):
        u_scan(SublinearRule("nlog"), Fraction(1, 10**4), budget=10**6)


def test_roth_profile():
    g = roth_profile(convergents(golden(), 40))
    assert g.roth_consistent and g.bounded_on_prefix
    assert abs(g.ratios[-1] - 1) < 0.05
    s = construct_alpha_in_window(GrowthWindow("q^2"), [1, 1008], 3)
    r = roth_profile(convergents(s, 6))
    assert not r.roth_consistent
    assert max(r.ratios) > 1.9
    with pytest.raises(DomainError):
        roth_profile(convergents(periodic_stream((1, 2, 2), ()), 3))


def test_condition_III_examples():
    t = convergents(golden(), 40)
    Ns = range(2, 100000, 37)
    assert condition_III(TrimmingSequence("log", 1), t, Ns).holds
    assert not condition_III(TrimmingSequence("const", 5), t, Ns).holds
    big = convergents(periodic_stream((1,) * 9 + (1000,), (1,)), 30)
    rep = condition_III(TrimmingSequence("log", 1), big, range(big.q[11], big.q[11] + 500))
    assert max(rep.values) <= math.ceil(math.log(big.q[11] + 500)) / 1000


def test_condition_D_and_agreement():
    t = convergents(golden(), 40)
    for k, expected in ((TrimmingSequence("log", 1), True), (TrimmingSequence("const", 5), False)):
        d = condition_D(k, t)
        c = condition_III(k, t, range(2, t.q[30]))
        assert d.holds == expected == c.holds
    growing = convergents(periodic_stream(tuple(2 ** j + 1 for j in range(1, 9)), (1,)), 9)
    k = TrimmingSequence("log", 1, monotone=True)
    d = condition_D(k, growing)
    c = condition_III(k, growing, sorted({int(1.02 ** i) for i in range(40, 1300) if 1.02 ** i < growing.q[9]}))
    assert d.holds == c.holds == False  # noqa: E712
    for N in canonical_subsequence(growing):
        n = growing.level(N)
        assert N <= (2 / 3) * growing.q[n + 1]


def test_condition_D_margin_violation():
    t = convergents(golden(), 20)
    with pytest.raises(PreconditionError):
        condition_D(TrimmingSequence("const", 1), t, [t.q[10] + t.q[9] - 1], margin=0.3)


def test_logprop_trajectory():
    t = convergents(golden(), 40)
    traj = logprop_trajectory(t, [10**3, 10**4, 10**5, 10**6])
    assert all(0.5 < r < 2 for r in traj.ratios)
    s = construct_alpha_in_window(GrowthWindow("q^3"), [1, 99], 2)
    traj = logprop_trajectory(convergents(s, 6), [10, 100])
    assert traj.witnesses
