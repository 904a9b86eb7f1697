"""Continued fractions, convergents, convergent remainders and Ostrowski digits.

Index conventions used throughout the package:

* ``alpha = 1/(a_1 + 1/(a_2 + ...))`` with ``alpha`` in (0, 1).
* Seed rows ``(p_0, q_0) = (1, 0)`` and ``(p_1, q_1) = (0, 1)``, then
  ``p_{n+1} = a_n p_n + p_{n-1}`` and the same for ``q``.  So ``q_2 = a_1``.
* ``delta_n = |q_{n-1} alpha - p_{n-1}|``, hence ``delta_1 = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

import mpmath

from .errors import DomainError, LengthError, ValidationError

Exact = Union[Fraction, "Surd"]

FINITE = "finite-rational"
PERIODIC = "periodic-quadratic"
RULE = "rule-generated"


@dataclass(frozen=True)
class Surd:
    """The real number ``(a + b*sqrt(d)) / c`` with ``d`` a non-square.

    Stored normalized: ``c > 0`` and ``gcd(a, b, c) == 1``.  ``b == 0`` is
    allowed so rationals embed in the same field.
    """

    a: int
    b: int
    d: int
    c: int = 1

    def __post_init__(self):
        a, b, d, c = self.a, self.b, self.d, self.c
        if c == 0:
            raise DomainError("surd denominator is zero")
        if d < 2 or math.isqrt(d) ** 2 == d:
            raise DomainError(f"radicand {d} must be a positive non-square")
        if c < 0:
            a, b, c = -a, -b, -c
        g = math.gcd(math.gcd(a, b), c)
        object.__setattr__(self, "a", a // g)
        object.__setattr__(self, "b", b // g)
        object.__setattr__(self, "c", c // g)

    def _lift(self, other) -> "Surd":
        if isinstance(other, Surd):
            if other.d == self.d:
                return other
            k = math.isqrt(self.d * other.d)
            if k * k != self.d * other.d:
                raise DomainError("surds from different quadratic fields")
            # sqrt(d2) = k sqrt(d1) / d1
            return Surd(other.a * self.d, other.b * k, self.d, other.c * self.d)
        if isinstance(other, int):
            return Surd(other, 0, self.d, 1)
        if isinstance(other, Fraction):
            return Surd(other.numerator, 0, self.d, other.denominator)
        return NotImplemented

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return Surd(self.a * o.c + o.a * self.c, self.b * o.c + o.b * self.c, self.d, self.c * o.c)

    __radd__ = __add__

    def __neg__(self):
        return Surd(-self.a, -self.b, self.d, self.c)

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return Surd(
            self.a * o.a + self.b * o.b * self.d,
            self.a * o.b + self.b * o.a,
            self.d,
            self.c * o.c,
        )

    __rmul__ = __mul__

    def inverse(self) -> "Surd":
        norm = self.a * self.a - self.b * self.b * self.d
        if norm == 0:
            raise DomainError("division by zero surd")
        # (a + b r)/c inverted is c (a - b r) / (a^2 - b^2 d)
        return Surd(self.c * self.a, -self.c * self.b, self.d, norm)

    def __truediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self._lift(other) * self.inverse()

    def sign(self) -> int:
        a, b = self.a, self.b
        sa = (a > 0) - (a < 0)
        sb = (b > 0) - (b < 0)
        if sb == 0:
            return sa
        if sa == 0 or sa == sb:
            return sb
        # opposite signs: compare a^2 with b^2 d
        return sa if a * a > b * b * self.d else sb

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def _cmp(self, other) -> int:
        return (self - other).sign()

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __eq__(self, other):
        if isinstance(other, (Surd, int, Fraction)):
            try:
                return self._cmp(other) == 0
            except DomainError:
                return False
        return NotImplemented

    def __hash__(self):
        return hash((self.a, self.b, self.d, self.c))

    def __floor__(self) -> int:
        s = math.isqrt(self.b * self.b * self.d)
        # b*sqrt(d) is irrational unless b == 0
        if self.b > 0:
            m = s
        elif self.b < 0:
            m = -s - 1
        else:
            m = 0
        return (self.a + m) // self.c

    def __float__(self) -> float:
        return float(self.to_mpf(30))

    def to_mpf(self, dps: int = 50):
        with mpmath.workdps(dps):
            return (mpmath.mpf(self.a) + self.b * mpmath.sqrt(self.d)) / self.c

    def __str__(self):
        sign = "-" if self.b < 0 else "+"
        return f"({self.a}{sign}{abs(self.b)}*sqrt({self.d}))/{self.c}"


def _frac_or_surd_lt(x, y) -> bool:
    if isinstance(x, Surd) or isinstance(y, Surd):
        return (x - y).sign() < 0 if isinstance(x, Surd) else (y - x).sign() > 0
    return x < y


@dataclass(frozen=True)
class CoefficientStream:
    """Digits ``a_1, a_2, ...`` given as a finite prefix plus an optional period.

    A stream with an empty period is finite (a rational angle).  A non-empty
    period repeats forever after the prefix, so every infinite stream here is
    a quadratic irrational and carries its exact value.
    """

    prefix: tuple[int, ...]
    period: tuple[int, ...] = ()
    source: str = FINITE
    label: str = ""
    value: Exact | None = field(default=None, compare=False)

    def __post_init__(self):
        if any((not isinstance(a, int)) or a < 1 for a in self.prefix + self.period):
            raise ValidationError("digits must be positive integers")
        if not self.prefix and not self.period:
            raise ValidationError("empty digit stream")
        if self.value is None:
            object.__setattr__(self, "value", _stream_value(self.prefix, self.period))

    @property
    def finite(self) -> bool:
        return not self.period

    @property
    def available_length(self) -> int | None:
        return len(self.prefix) if self.finite else None

    def digit(self, j: int) -> int:
        if j < 1:
            raise ValidationError("digit index starts at 1")
        if j <= len(self.prefix):
            return self.prefix[j - 1]
        if self.finite:
            raise LengthError(f"stream has only {len(self.prefix)} digits, asked for a_{j}")
        return self.period[(j - len(self.prefix) - 1) % len(self.period)]

    def take(self, m: int) -> tuple[int, ...]:
        if self.finite and m > len(self.prefix):
            raise LengthError(f"stream has only {len(self.prefix)} digits, asked for {m}")
        return tuple(self.digit(j) for j in range(1, m + 1))


def _mobius_rows(digits: Sequence[int]) -> tuple[int, int, int, int]:
    """Return ``(p_{m+1}, p_m, q_{m+1}, q_m)`` for the digits."""
    p0, p1, q0, q1 = 1, 0, 0, 1
    for a in digits:
        p0, p1 = p1, a * p1 + p0
        q0, q1 = q1, a * q1 + q0
    return p1, p0, q1, q0


def _stream_value(prefix: tuple[int, ...], period: tuple[int, ...]) -> Exact:
    if not period:
        p1, _, q1, _ = _mobius_rows(prefix)
        return Fraction(p1, q1)
    # theta = [period, theta] solves Q_m t^2 + (Q_{m+1} - P_m) t - P_{m+1} = 0
    P1, P0, Q1, Q0 = _mobius_rows(period)
    b = Q1 - P0
    disc = b * b + 4 * Q0 * P1
    r = math.isqrt(disc)
    if r * r == disc:
        raise DomainError("periodic tail produced a rational value")
    theta = Surd(-b, 1, disc, 2 * Q0)
    p1, p0, q1, q0 = _mobius_rows(prefix)
    return (theta * p0 + p1) / (theta * q0 + q1)


def canonical_digits(digits: Sequence[int]) -> tuple[int, ...]:
    """Fold a trailing 1 into the previous digit, ``[.., a, 1] -> [.., a+1]``."""
    ds = list(digits)
    if len(ds) > 1 and ds[-1] == 1:
        ds[-2] += 1
        ds.pop()
    return tuple(ds)


def cfe_of_rational(p: int, q: int) -> CoefficientStream:
    """Euclidean expansion of ``p/q`` in (0, 1); last digit >= 2 unless length 1."""
    if q <= 0 or not (0 < p < q):
        raise DomainError(f"{p}/{q} is not in (0, 1)")
    digits = []
    num, den = q, p  # expand q/p = 1/alpha
    while den:
        a, r = divmod(num, den)
        digits.append(a)
        num, den = den, r
    frac = Fraction(p, q)
    return CoefficientStream(canonical_digits(digits), (), FINITE, f"rational:{frac}", frac)


def cfe_of_quadratic(a: int, b: int, d: int, c: int) -> CoefficientStream:
    """Periodic expansion of ``(a + b*sqrt(d))/c``, exact integer recurrence."""
    if b == 0:
        raise DomainError("b must be non-zero")
    x = Surd(a, b, d, c)
    if not (x.sign() > 0 and (x - 1).sign() < 0):
        raise DomainError(f"{x} is not in (0, 1)")
    # Put 1/x in the form (P + sqrt(D))/Q with Q | D - P^2.
    y = x.inverse()
    P, B, C = y.a, y.b, y.c
    if B < 0:
        P, B, C = -P, -B, -C
    D = B * B * y.d
    if (D - P * P) % C:
        P, D, C = P * abs(C), D * C * C, C * abs(C)
    s = math.isqrt(D)
    digits: list[int] = []
    seen: dict[tuple[int, int], int] = {}
    Q = C
    while (P, Q) not in seen:
        seen[(P, Q)] = len(digits)
        # floor((P + sqrt(D))/Q) for irrational sqrt(D)
        digit = (P + s) // Q if Q > 0 else -((P + s) // -Q) - 1
        digits.append(digit)
        P = digit * Q - P
        Q = (D - P * P) // Q
    start = seen[(P, Q)]
    return CoefficientStream(tuple(digits[:start]), tuple(digits[start:]), PERIODIC, f"surd:{x}", x)


def periodic_stream(prefix: Iterable[int], period: Iterable[int], source: str = PERIODIC,
                    label: str = "") -> CoefficientStream:
    return CoefficientStream(tuple(prefix), tuple(period), source, label)


def golden() -> CoefficientStream:
    return periodic_stream((), (1,), label="golden")


@dataclass(frozen=True)
class ConvergentTable:
    """Rows ``0..M+1`` of convergents for the first ``M`` digits."""

    digits: tuple[int, ...]
    p: tuple[int, ...]
    q: tuple[int, ...]
    stream: CoefficientStream | None = field(default=None, compare=False)

    @property
    def depth(self) -> int:
        return len(self.digits)

    def a(self, n: int) -> int:
        return self.digits[n - 1]

    def level(self, N: int) -> int:
        """Largest ``n`` with ``q_n <= N < q_{n+1}``."""
        if N < 1:
            raise DomainError("N must be at least 1")
        if N >= self.q[-1]:
            raise LengthError(f"N={N} needs a deeper table (q_max={self.q[-1]})")
        lo, hi = 1, len(self.q) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.q[mid] <= N:
                lo = mid
            else:
                hi = mid
        return lo

    def error_sign(self, n: int) -> int:
        """Sign of ``q_n alpha - p_n``, which is ``(-1)^(n+1)`` for irrational alpha."""
        return 1 if n % 2 == 1 else -1

    def ratio(self, n: int) -> Fraction:
        return Fraction(self.p[n], self.q[n])


def convergents(stream: CoefficientStream, M: int) -> ConvergentTable:
    if M < 0:
        raise ValidationError("depth must be non-negative")
    digits = stream.take(M)
    p, q = [1, 0], [0, 1]
    for a in digits:
        p.append(a * p[-1] + p[-2])
        q.append(a * q[-1] + q[-2])
    return ConvergentTable(digits, tuple(p), tuple(q), stream)


def _in_cylinder(table: ConvergentTable, ref: Exact) -> bool:
    """True when ``ref`` lies between ``[a_1..a_M]`` and ``[a_1..a_M, 1]``."""
    M = table.depth
    if M == 0:
        return True
    lo = Fraction(table.p[M + 1], table.q[M + 1])
    hi = Fraction(table.p[M + 1] + table.p[M], table.q[M + 1] + table.q[M])
    lo, hi = min(lo, hi), max(lo, hi)
    return not (_frac_or_surd_lt(ref, lo) or _frac_or_surd_lt(hi, ref))


def deltas(table: ConvergentTable, reference: Exact, n_max: int | None = None) -> tuple[Exact, ...]:
    """``(delta_1, ..., delta_{n_max})`` measured against ``reference``.

    Index ``i`` of the result holds ``delta_{i+1}``.  Needs ``n_max <= M + 2``.
    """
    M = table.depth
    if n_max is None:
        n_max = M + 2
    if n_max > M + 2:
        raise LengthError(f"delta_{n_max} needs convergent row {n_max - 1} > {M + 1}")
    if not _in_cylinder(table, reference):
        raise ValidationError("reference value does not match the digit prefix")
    return tuple(abs(reference * table.q[n - 1] - table.p[n - 1]) for n in range(1, n_max + 1))


def delta(table: ConvergentTable, reference: Exact, n: int) -> Exact:
    if n < 1:
        raise ValidationError("delta index starts at 1")
    return deltas(table, reference, n)[n - 1]


def proxy(table: ConvergentTable) -> Fraction:
    """The deepest convergent ``p_{M+1}/q_{M+1}`` of the table."""
    return Fraction(table.p[-1], table.q[-1])


# Ostrowski numeration


@dataclass(frozen=True)
class OstrowskiDigits:
    """Digits ``(b_1, ..., b_n)`` with ``N = sum b_j q_j`` and ``q_n <= N < q_{n+1}``."""

    digits: tuple[int, ...]

    @property
    def level(self) -> int:
        return len(self.digits)

    def b(self, j: int) -> int:
        return self.digits[j - 1]


def ostrowski_expand(N: int, table: ConvergentTable) -> OstrowskiDigits:
    """Greedy top-down expansion of ``N >= 1``."""
    if not isinstance(N, int) or N < 1:
        raise DomainError("Ostrowski expansion needs an integer N >= 1")
    n = table.level(N)
    out = [0] * n
    rest = N
    for j in range(n, 0, -1):
        out[j - 1], rest = divmod(rest, table.q[j])
    return OstrowskiDigits(tuple(out))


def check_admissible(digits: OstrowskiDigits | Sequence[int], table: ConvergentTable) -> None:
    ds = tuple(digits.digits if isinstance(digits, OstrowskiDigits) else digits)
    n = len(ds)
    if n == 0:
        raise ValidationError("empty Ostrowski digit vector")
    if n + 1 >= len(table.q):
        raise LengthError(f"level {n} needs convergent row {n + 1}")
    if any(b < 0 for b in ds):
        raise ValidationError("Ostrowski digits must be non-negative")
    if ds[-1] == 0:
        raise ValidationError("leading Ostrowski digit b_n must be positive")
    partial = 0
    for j, b in enumerate(ds, start=1):
        partial += b * table.q[j]
        if partial >= table.q[j + 1]:
            raise ValidationError(f"partial sum through b_{j} reaches q_{j + 1}")


def ostrowski_value(digits: OstrowskiDigits | Sequence[int], table: ConvergentTable) -> int:
    check_admissible(digits, table)
    ds = digits.digits if isinstance(digits, OstrowskiDigits) else tuple(digits)
    return sum(b * table.q[j] for j, b in enumerate(ds, start=1))


def weighted_log_sums(digits: OstrowskiDigits, table: ConvergentTable, precise: bool = False):
    """Return ``(sum b_j q_j ln q_j, sum_{j<n, b_j>0} a_j q_j ln b_j, b_n)``.

    With ``precise`` the two sums are mpmath values at 50 digits.
    """
    check_admissible(digits, table)
    ds = digits.digits
    n = len(ds)
    if precise:
        with mpmath.workdps(50):
            main = mpmath.fsum(b * table.q[j] * mpmath.log(table.q[j])
                               for j, b in enumerate(ds, start=1) if b)
            aux = mpmath.fsum(table.a(j) * table.q[j] * mpmath.log(ds[j - 1])
                              for j in range(1, n) if ds[j - 1])
        return main, aux, ds[-1]
    main = math.fsum(b * table.q[j] * math.log(table.q[j]) for j, b in enumerate(ds, start=1) if b)
    aux = math.fsum(table.a(j) * table.q[j] * math.log(ds[j - 1]) for j in range(1, n) if ds[j - 1])
    return main, aux, ds[-1]
