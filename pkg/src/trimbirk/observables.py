"""Singular power observables ``c1 x^-beta + c2 (1-x)^-beta`` and their truncations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, ValidationError

BETA_ONE_GUARD = 1e-6


@dataclass(frozen=True)
class PowerObservable:
    beta: float = 1.0
    c1: float = 1.0
    c2: float = 0.0

    def __post_init__(self):
        if not (self.beta >= 1):
            raise DomainError("beta must be at least 1")
        if 0 < abs(self.beta - 1) <= BETA_ONE_GUARD:
            raise DomainError("beta within 1e-6 of 1 is ill-conditioned; use beta = 1 exactly")
        if not (self.c1 > 0):
            raise DomainError("c1 must be positive")
        if not (self.c2 >= 0):
            raise DomainError("c2 must be non-negative")

    @property
    def one_sided(self) -> bool:
        return self.c2 == 0

    def at(self, x: float) -> float:
        """Value at a float in (0, 1); the caller handles 0."""
        v = self.c1 * x ** -self.beta
        if self.c2:
            v += self.c2 * (1 - x) ** -self.beta
        return v

    def minimizer(self) -> float:
        """Where the valley of a two-sided observable bottoms out."""
        if self.one_sided:
            return 1.0
        r = (self.c1 / self.c2) ** (1 / (self.beta + 1))
        return r / (1 + r)

    def describe(self) -> str:
        return f"pow:beta={self.beta!r},c1={self.c1!r},c2={self.c2!r}"


def eval_point(obs: PowerObservable, x) -> float:
    """``f(x)`` for an exact point in ``[0, 1)``; ``f(0) = 0``."""
    x = Fraction(x)
    if not (0 <= x < 1):
        raise DomainError("point must lie in [0, 1)")
    if x == 0:
        return 0.0
    if obs.beta == 1:
        v = obs.c1 * (x.denominator / x.numerator)
        if obs.c2:
            v += obs.c2 * (x.denominator / (x.denominator - x.numerator))
        return v
    # np.power so scalar and vector paths round identically
    v = obs.c1 * float(np.power(float(x), -obs.beta))
    if obs.c2:
        v += obs.c2 * float(np.power(float(1 - x), -obs.beta))
    return v


def eval_numerators(obs, c: np.ndarray, D: int) -> np.ndarray:
    """Vectorized values at ``c / D``; numerators equal to 0 give 0."""
    if c.dtype == object:
        return np.array([eval_point(obs, Fraction(int(v), D)) if isinstance(obs, PowerObservable)
                         else obs.eval_point(Fraction(int(v), D)) for v in c], dtype=np.float64)
    if isinstance(obs, TruncatedObservable):
        return obs.eval_numerators(c, D)
    cf = c.astype(np.float64)
    Df = float(D)
    zero = c == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        if obs.beta == 1:
            v = obs.c1 * (Df / cf)
            if obs.c2:
                v = v + obs.c2 * (Df / (D - c).astype(np.float64))
        else:
            v = obs.c1 * np.power(cf / Df, -obs.beta)
            if obs.c2:
                v = v + obs.c2 * np.power((D - c).astype(np.float64) / Df, -obs.beta)
    v[zero] = 0.0
    return v


@dataclass(frozen=True)
class TruncatedObservable:
    """``f`` on ``[t, 1)`` (on ``[t, 1 - t]`` when two-sided), zero elsewhere.

    ``t = 1`` is accepted here and gives the zero function.
    """

    base: PowerObservable
    t: Fraction

    def __post_init__(self):
        t = Fraction(self.t)
        object.__setattr__(self, "t", t)
        if not (0 < t <= 1):
            raise DomainError("truncation threshold must lie in (0, 1]")

    @property
    def upper(self) -> Fraction:
        return Fraction(1) if self.base.one_sided else 1 - self.t

    @property
    def degenerate(self) -> bool:
        """True when the support has measure zero."""
        return self.t >= (1 if self.base.one_sided else Fraction(1, 2))

    def eval_point(self, x) -> float:
        x = Fraction(x)
        if x < self.t or x > self.upper or x >= 1:
            return 0.0
        return eval_point(self.base, x)

    def eval_numerators(self, c: np.ndarray, D: int) -> np.ndarray:
        lo = math.ceil(self.t * D)
        hi = math.floor(self.upper * D)
        v = eval_numerators(self.base, c, D)
        keep = (c >= lo) & (c <= hi) & (c < D)
        return np.where(keep, v, 0.0)

    def integral(self) -> float:
        b, c1, c2 = self.base.beta, self.base.c1, self.base.c2
        t = float(self.t)
        if self.degenerate:
            return 0.0
        if self.base.one_sided:
            if b == 1:
                return -c1 * math.log(t)
            return c1 * (t ** (1 - b) - 1) / (b - 1)
        u = 1 - t
        if b == 1:
            return (c1 + c2) * (math.log(u) - math.log(t))
        return (c1 + c2) * (t ** (1 - b) - u ** (1 - b)) / (b - 1)

    def variation(self, circle: bool = True) -> float:
        """Total variation on ``[0, 1)``, or on the circle including the wrap at 0."""
        f = self.base
        if self.degenerate:
            return 0.0
        t = float(self.t)
        ft = f.at(t)
        if f.one_sided:
            # jump up at t, then monotone down to f(1-) = c1
            inner = ft + (ft - f.c1)
            return inner + (f.c1 if circle else 0.0)
        u = 1 - t
        fu = f.at(u)
        xs = min(max(f.minimizer(), t), u)
        fmin = f.at(xs)
        return ft + (ft - fmin) + (fu - fmin) + fu


def truncate(obs: PowerObservable, t) -> TruncatedObservable:
    t = Fraction(t)
    if not (0 < t < 1):
        raise DomainError("truncation threshold must lie in (0, 1)")
    return TruncatedObservable(obs, t)


def normalizer_1x(N: int) -> float:
    if N < 2:
        raise DomainError("N ln N needs N >= 2")
    return N * math.log(N)


def normalizer_beta(N: int, k: int, beta: float) -> float:
    """``N^beta k^(1-beta) / (beta - 1)``."""
    if not beta > 1:
        raise DomainError("normalizer_beta needs beta > 1")
    if abs(beta - 1) <= BETA_ONE_GUARD:
        raise DomainError("beta too close to 1")
    if not (1 <= k <= N):
        raise ValidationError("need 1 <= k <= N")
    return math.exp(beta * math.log(N) + (1 - beta) * math.log(k)) / (beta - 1)


def tail_measure(obs: PowerObservable, s: float) -> float:
    """Lebesgue measure of ``{x : f(x) > s}``."""
    if s <= 0:
        return 1.0
    b, c1, c2 = obs.beta, obs.c1, obs.c2
    if obs.one_sided:
        return min(1.0, (c1 / s) ** (1 / b))
    xs = obs.minimizer()
    if obs.at(xs) >= s:
        return 1.0

    def g(x):
        return obs.at(x) - s

    left_end = min(xs, (c1 / s) ** (1 / b))  # f > s holds left of this
    right_end = max(xs, 1 - (c2 / s) ** (1 / b))
    xl = brentq(g, left_end, xs, xtol=1e-300, rtol=1e-15, maxiter=500) if left_end < xs else xs
    xr = brentq(g, xs, right_end, xtol=1e-300, rtol=1e-15, maxiter=500) if right_end > xs else xs
    return min(1.0, xl + (1 - xr))


def weakgen_check(obs: PowerObservable, k, d, Ns, cs) -> dict:
    """Track ``N * lambda(f > c d_N / k(N))`` along ``Ns`` for each ``c``.

    ``k`` and ``d`` are callables of ``N``.  A row decays when its final value
    is below its first and its tail maximum is below its head maximum.
    """
    Ns = list(Ns)
    rows = {}
    for c in cs:
        vals = []
        for N in Ns:
            kN = k(N)
            vals.append(0.0 if kN == 0 else N * tail_measure(obs, c * d(N) / kN))
        half = max(1, len(vals) // 2)
        decays = len(vals) >= 2 and vals[-1] < vals[0] and max(vals[half:]) <= max(vals[:half])
        rows[c] = {"values": vals, "decays": decays}
    return {"Ns": Ns, "rows": rows}
