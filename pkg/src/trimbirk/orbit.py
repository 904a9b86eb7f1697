"""Exact orbit positions of a rotation on a rational proxy of the angle.

A point ``x`` and the proxy ``p_M/q_M`` share the denominator
``D = lcm(q_M, den x)``.  Position ``j`` is the integer ``(a + j s) mod D``
with ``a = x D`` and ``s = p_M D / q_M``, so every comparison is exact.
"""

from __future__ import annotations

import hashlib
import heapq
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .contfrac import CoefficientStream, ConvergentTable, cfe_of_rational, convergents, deltas
from .errors import DomainError, LengthError, RangeError, ValidationError

log = logging.getLogger(__name__)

DEFAULT_SAFETY = 2**20
INT64_LIMIT = 2**62
BLOCK = 4096


@dataclass(frozen=True)
class RotationContext:
    """Rotation by the proxy ``p/q`` certified for orbit lengths ``<= max_valid_N``."""

    p: int
    q: int
    M: int
    table: ConvergentTable
    max_valid_N: int
    deltas: tuple[Fraction, ...]
    stream: CoefficientStream | None = field(default=None, compare=False)
    mirrored: bool = False

    @classmethod
    def rational(cls, p: int, q: int) -> "RotationContext":
        """Exact rotation by ``p/q`` itself; every ``N <= q`` is valid."""
        s = cfe_of_rational(p, q)
        t = convergents(s, len(s.prefix))
        M = len(t.q) - 1
        return cls(p, q, M, t, q, deltas(t, Fraction(p, q), M), s)

    @property
    def proxy(self) -> Fraction:
        return Fraction(self.p, self.q)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(",".join(map(str, self.table.digits)).encode())
        h.update(f"|M={self.M}|p={self.p}|q={self.q}|mirror={int(self.mirrored)}".encode())
        return h.hexdigest()[:16]

    def check_N(self, N: int) -> None:
        if not isinstance(N, (int, np.integer)) or N < 1:
            raise DomainError("N must be a positive integer")
        if N > self.max_valid_N:
            raise RangeError(f"N={N} exceeds certified range {self.max_valid_N}; deepen the guard level")

    def sign(self, n: int) -> int:
        """Sign of ``q_n alpha - p_n`` computed against the proxy."""
        v = self.table.q[n] * self.p - self.table.p[n] * self.q
        return (v > 0) - (v < 0)

    def delta(self, n: int) -> Fraction:
        return self.deltas[n - 1]

    def mirror(self) -> "RotationContext":
        """Context for ``1 - alpha`` on the mirrored proxy ``(q - p)/q``."""
        p = self.q - self.p
        s = cfe_of_rational(p, self.q)
        t = convergents(s, len(s.prefix))
        M = len(t.q) - 1
        return RotationContext(p, self.q, M, t, self.max_valid_N, deltas(t, Fraction(p, self.q), M),
                               None, not self.mirrored)

    def snap(self, x) -> Fraction:
        """Round ``x`` down onto the proxy grid ``{a/q}``."""
        x = Fraction(x)
        return Fraction(math.floor(x * self.q) % self.q, self.q)

    def grid_point(self, i: int, G: int, offset: Fraction = Fraction(1, 2), avoid_N: int = 0) -> Fraction:
        """Point of stratum ``i`` out of ``G`` on the proxy grid.

        The numerator is nudged upward until no ``j < avoid_N`` lands exactly on 0.
        """
        if not (0 <= i < G):
            raise ValidationError("stratum index out of range")
        offset = Fraction(offset)
        if not (0 <= offset < 1):
            raise ValidationError("offset must be in [0, 1)")
        a = math.floor((i + offset) * self.q / G)
        if avoid_N:
            inv = pow(self.p, -1, self.q)
            while (-a * inv) % self.q < avoid_N:
                a += 1
        return Fraction(a % self.q, self.q)


def _choose_guard(stream: CoefficientStream, N_budget: int, safety: int) -> int:
    p, q = [1, 0], [0, 1]
    j = 0
    while True:
        j += 1
        a = stream.digit(j)
        p.append(a * p[-1] + p[-2])
        q.append(a * q[-1] + q[-2])
        M = len(q) - 1
        if M >= 3 and q[M - 2] >= N_budget and q[M] >= safety * N_budget:
            return M
        if j > 100000:
            raise LengthError("guard level search did not terminate")


def make_context(stream: CoefficientStream, N_budget: int, safety: int = DEFAULT_SAFETY,
                 M: int | None = None) -> RotationContext:
    """Pick the smallest guard ``M`` with ``q_{M-2} >= N_budget`` and ``q_M >= safety N_budget``."""
    if stream.finite:
        raise DomainError("make_context needs an irrational angle; use RotationContext.rational")
    if N_budget < 1:
        raise DomainError("N_budget must be positive")
    if M is None:
        M = _choose_guard(stream, N_budget, safety)
    table = convergents(stream, M - 1)
    q_M, p_M = table.q[M], table.p[M]
    if table.q[M - 2] < N_budget or q_M < safety * N_budget:
        raise RangeError(f"guard level {M} too shallow for N_budget={N_budget}")
    max_valid = min(table.q[M - 2], q_M // safety)
    return RotationContext(p_M, q_M, M, table, max_valid, deltas(table, Fraction(p_M, q_M), M), stream)


# frames and exact positions


@dataclass(frozen=True)
class Frame:
    """Integer frame for one starting point: positions are ``(a + j s) mod D``."""

    D: int
    a: int
    s: int
    g: int  # D = g q

    @property
    def r(self) -> int:
        return self.a % self.g


def frame(ctx: RotationContext, x) -> Frame:
    x = Fraction(x)
    if not (0 <= x < 1):
        raise DomainError("x must lie in [0, 1)")
    D = ctx.q * x.denominator // math.gcd(ctx.q, x.denominator)
    g = D // ctx.q
    return Frame(D, x.numerator * (D // x.denominator), ctx.p * g, g)


def position(ctx: RotationContext, x, j: int) -> Fraction:
    f = frame(ctx, x)
    return Fraction((f.a + j * f.s) % f.D, f.D)


def iota(y: Fraction) -> Fraction:
    """Map ``[0, 1)`` onto ``[-1/2, 1/2)``."""
    return y - 1 if y >= Fraction(1, 2) else y


def signed_position(ctx: RotationContext, x, j: int) -> Fraction:
    return iota(position(ctx, x, j))


@lru_cache(maxsize=64)
def _offsets(step: int, D: int, B: int) -> np.ndarray:
    """``(i * step) mod D`` for ``i < B`` without int64 overflow."""
    out = np.zeros(B, dtype=np.int64)
    m = 1
    while m < B:
        inc = (m * step) % D
        take = min(m, B - m)
        out[m:m + take] = (out[:take] + inc) % D
        m += take
    out.setflags(write=False)
    return out


def numerators(f: Frame, start: int, count: int) -> np.ndarray:
    """Positions ``j = start .. start+count-1`` as integer numerators over ``f.D``."""
    if count <= 0:
        return np.zeros(0, dtype=np.int64)
    if f.D >= INT64_LIMIT:
        a0 = (f.a + start * f.s) % f.D
        return np.array([(a0 + i * f.s) % f.D for i in range(count)], dtype=object)
    B = min(BLOCK, count)
    off = _offsets(f.s % f.D, f.D, B)
    nb = -(-count // B)
    first = (f.a + start * f.s) % f.D
    starts = _offsets((B * f.s) % f.D, f.D, nb).copy()
    starts = (starts + first) % f.D
    block = (starts[:, None] + off[None, :]) % f.D
    return block.reshape(-1)[:count]


# ordering


def k_smallest_positive(ctx: RotationContext, x, N: int, k: int) -> list[tuple[int, Fraction]]:
    """Heap-scan oracle: the ``k`` smallest positive positions among ``j < N``.

    A point exactly at 0 is never returned.  Ties cannot occur since ``N <= q``.
    """
    ctx.check_N(N)
    if k < 0:
        raise ValidationError("k must be non-negative")
    f = frame(ctx, x)
    gen = (((f.a + j * f.s) % f.D, j) for j in range(N))
    best = heapq.nsmallest(k, (t for t in gen if t[0] > 0))
    return [(j, Fraction(c, f.D)) for c, j in best]


def floor_sum(n: int, m: int, a: int, b: int) -> int:
    """``sum_{i<n} floor((a i + b) / m)`` for ``n, m >= 1`` and ``a, b >= 0``."""
    ans = 0
    while True:
        if a >= m:
            ans += (n - 1) * n // 2 * (a // m)
            a %= m
        if b >= m:
            ans += n * (b // m)
            b %= m
        y_max = a * n + b
        if y_max < m:
            return ans
        n, b = divmod(y_max, m)
        m, a = a, m


def _count_below(f: Frame, N: int, t: int) -> int:
    """``#{j < N : (a + j s) mod D < t}`` for ``0 <= t <= D``."""
    if t <= 0:
        return 0
    if t >= f.D:
        return N
    return floor_sum(N, f.D, f.s, f.a) - floor_sum(N, f.D, f.s, f.a - t + f.D) + N


def _count_range(f: Frame, N: int, lo: int, hi: int) -> int:
    """Numerators ``c`` with ``lo <= c <= hi``."""
    lo, hi = max(lo, 0), min(hi, f.D - 1)
    if hi < lo:
        return 0
    return _count_below(f, N, hi + 1) - _count_below(f, N, lo)


def _index_of(f: Frame, ctx: RotationContext, c: int) -> int:
    """The unique ``j`` in ``[0, q)`` with ``(a + j s) mod D == c``."""
    g = f.g
    if (c - f.a) % g:
        raise ValidationError("numerator not on this orbit")
    cp, ap = (c - f.r) // g, f.a // g
    return ((cp - ap) * pow(ctx.p, -1, ctx.q)) % ctx.q


def _smallest_positive_numerator(f: Frame, N: int) -> int | None:
    if _count_range(f, N, 1, f.D - 1) == 0:
        return None
    lo, hi = 1, f.D - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _count_range(f, N, 1, mid) >= 1:
            hi = mid
        else:
            lo = mid + 1
    return lo


def _largest_numerator(f: Frame, N: int) -> int:
    lo, hi = 0, f.D - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if _count_range(f, N, mid, f.D - 1) >= 1:
            lo = mid
        else:
            hi = mid - 1
    return lo


def _gap_indices(ctx: RotationContext, N: int) -> tuple[int, int]:
    """Indices ``A`` and ``B`` in ``[1, N)`` of the nearest right and left neighbours of 0."""
    f0 = Frame(ctx.q, ctx.p, ctx.p, 1)  # start at alpha, so index shifts by one
    cA = _smallest_positive_numerator(f0, N - 1)
    cB = _largest_numerator(f0, N - 1)
    A = _index_of(Frame(ctx.q, 0, ctx.p, 1), ctx, cA)
    B = _index_of(Frame(ctx.q, 0, ctx.p, 1), ctx, cB)
    return A, B


def k_smallest_fast(ctx: RotationContext, x, N: int, k: int, check: bool = True) -> list[tuple[int, Fraction]]:
    """Floor-sum search for the smallest positive point, then successor steps.

    Successor of ``j``: ``j + A`` if ``< N``, else ``j - B`` if ``>= 0``, else
    ``j + A - B``.  With ``check`` the answer is compared with an independent
    scan and the scan result is returned on any mismatch.
    """
    ctx.check_N(N)
    if k < 0:
        raise ValidationError("k must be non-negative")
    f = frame(ctx, x)
    out: list[tuple[int, Fraction]] = []
    if k and N >= 2:
        c1 = _smallest_positive_numerator(f, N)
        zeros = N - _count_range(f, N, 1, f.D - 1)
        total = min(k, N - zeros)
        if c1 is not None and total:
            A, B = _gap_indices(ctx, N)
            j = _index_of(f, ctx, c1)
            for _ in range(total):
                out.append((j, Fraction((f.a + j * f.s) % f.D, f.D)))
                if j + A < N:
                    j += A
                elif j - B >= 0:
                    j -= B
                else:
                    j += A - B
    elif k and N == 1:
        c = f.a % f.D
        out = [(0, Fraction(c, f.D))] if c else []
    if check:
        ref = _k_smallest_scan(f, N, k)
        if ref != out:
            log.warning("fast k-smallest disagreed with the scan at N=%d k=%d; using the scan", N, k)
            return ref
    return out


def _k_smallest_scan(f: Frame, N: int, k: int) -> list[tuple[int, Fraction]]:
    """Vectorized independent ordering by full partition of the numerators."""
    if k == 0:
        return []
    c = numerators(f, 0, N)
    key = np.where(c == 0, f.D, c) if c.dtype != object else np.array([v or f.D for v in c], dtype=object)
    if c.dtype == object:
        order = sorted(range(N), key=lambda j: key[j])[:k]
    else:
        kk = min(k, N)
        idx = np.argpartition(key, kk - 1)[:kk] if kk < N else np.arange(N)
        order = idx[np.argsort(key[idx], kind="stable")]
    return [(int(j), Fraction(int(c[j]), f.D)) for j in order if c[j] != 0]


def x_min(ctx: RotationContext, x, N: int) -> Fraction:
    """Smallest positive position among ``j < N``."""
    ctx.check_N(N)
    f = frame(ctx, x)
    c = _smallest_positive_numerator(f, N)
    if c is None:
        raise DomainError("no positive point in the orbit window")
    return Fraction(c, f.D)


def last_point(ctx: RotationContext, x, N: int) -> int:
    """Index of the largest position in ``(0, 1]``; a point at 0 counts as 1."""
    ctx.check_N(N)
    f = frame(ctx, x)
    if _count_range(f, N, 0, 0):
        return _index_of(f, ctx, 0)
    return _index_of(f, ctx, _largest_numerator(f, N))


def count_in_interval(ctx: RotationContext, x, N: int, u, v) -> int:
    """``#{j < N : R^j x in (u, v]}`` with ``0 <= u < v <= 1``; 0 is identified with 1."""
    ctx.check_N(N)
    u, v = Fraction(u), Fraction(v)
    if not (0 <= u < v <= 1):
        raise ValidationError("interval must satisfy 0 <= u < v <= 1")
    f = frame(ctx, x)
    lo = math.floor(u * f.D) + 1
    hi = math.floor(v * f.D)
    n = _count_range(f, N, lo, hi)
    if v == 1:
        n += _count_range(f, N, 0, 0)
    return n


def count_in_interval_enum(ctx: RotationContext, x, N: int, u, v) -> int:
    """Enumeration oracle for :func:`count_in_interval`."""
    ctx.check_N(N)
    u, v = Fraction(u), Fraction(v)
    n = 0
    for j in range(N):
        y = position(ctx, x, j)
        if y == 0:
            y = Fraction(1)
        n += u < y <= v
    return n


def countlem_check(ctx: RotationContext, x, n: int) -> dict:
    """Among ``R^1 x .. R^{q_n} x`` at most one lies in ``[0, 1/(q_n + q_{n-1}))``."""
    qn, qm = ctx.table.q[n], ctx.table.q[n - 1]
    ctx.check_N(qn)
    f = frame(ctx, Fraction(position(ctx, x, 1)))
    width = Fraction(1, qn + qm)
    hi = math.ceil(width * f.D) - 1
    count = _count_range(f, qn, 0, hi)
    return {"n": n, "count": count, "pass": count <= 1}


def j1_coincidence(ctx: RotationContext, x, N: int) -> dict:
    """Check that the smallest positive point up to ``N`` already occurs before ``q_n``.

    Applies when ``q_n alpha - p_n > 0`` and ``R^{j} x <= -b_n delta_{n+1}`` for
    ``j`` the last point among the first ``q_n``.
    """
    ctx.check_N(N)
    t = ctx.table
    n = t.level(N)
    if n + 1 > len(ctx.deltas) or ctx.sign(n) <= 0:
        return {"applicable": False, "n": n}
    qn = t.q[n]
    b = N // qn
    jl = last_point(ctx, x, qn)
    signed = iota(position(ctx, x, jl))
    hyp = signed <= -b * ctx.delta(n + 1)
    f = frame(ctx, x)
    c_all = numerators(f, 0, N)
    c_short = c_all[:qn]
    key_all = np.where(c_all == 0, f.D, c_all) if c_all.dtype != object else [v or f.D for v in c_all]
    key_short = key_all[:qn]
    j_all = int(np.argmin(key_all)) if c_all.dtype != object else min(range(N), key=lambda j: key_all[j])
    j_short = int(np.argmin(key_short)) if c_all.dtype != object else min(range(qn), key=lambda j: key_short[j])
    same = j_all == j_short
    return {"applicable": True, "n": n, "hypothesis": bool(hyp), "conclusion": same,
            "pass": (not hyp) or same}
