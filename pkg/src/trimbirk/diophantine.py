"""Diophantine profiles of an angle, trimming-rate conditions and constructors.

Growth windows are given as small arithmetic expressions in ``q``, for example
``q*ln(q)^2`` or ``q^(1+g)``.  They are evaluated in mpmath interval
arithmetic so that every constructed digit is verified with directed rounding.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
import numpy as np
from mpmath import iv

from .contfrac import RULE, CoefficientStream, ConvergentTable, convergents, ostrowski_expand, weighted_log_sums
from .errors import BudgetError, ConstructionError, DomainError, PreconditionError, ValidationError

DEFAULT_SCAN_BUDGET = 10**8


# Iterated logarithms


def iterated_log(k: int, x) -> float:
    """``log_k(x)``: natural log applied ``k`` times; every stage must be defined."""
    if k < 1:
        raise DomainError("iterated log order starts at 1")
    y = x
    for stage in range(1, k + 1):
        if y <= 0:
            raise DomainError(f"log_{stage} undefined: argument {y} <= 0")
        y = math.log(y)
    return float(y)


# Trimming sequences


def _ceil_exact_power(N: int, theta: Fraction) -> int:
    """Smallest integer k with k >= N^theta, decided in integers."""
    if N == 0:
        return 0
    guess = max(0, math.ceil(N ** float(theta)) - 1)
    p, q = theta.numerator, theta.denominator
    target = N ** p
    while guess ** q < target:
        guess += 1
    while guess > 0 and (guess - 1) ** q >= target:
        guess -= 1
    return guess


def _ceil_log_power(N: int, p: float) -> int:
    if N <= 1:
        return 0
    v = math.log(N) ** p
    k = math.ceil(v)
    if abs(v - round(v)) < 1e-9:
        with mpmath.workdps(40):
            k = int(mpmath.ceil(mpmath.log(N) ** mpmath.mpf(p)))
    return k


@dataclass(frozen=True)
class TrimmingSequence:
    """A rule ``N -> k(N)`` with ``0 <= k(N) <= N``.

    ``rule`` is one of ``const``, ``log`` (ceil of a power of ln N), ``pow``
    (ceil of a power of N) or ``table``.
    """

    rule: str
    param: object = None
    table: tuple[int, ...] | None = None
    monotone: bool = False

    def __post_init__(self):
        if self.rule == "const":
            if not isinstance(self.param, int) or self.param < 0:
                raise ValidationError("const trimming needs a non-negative integer")
        elif self.rule == "log":
            if float(self.param) <= 0:
                raise ValidationError("log trimming needs a positive power")
        elif self.rule == "pow":
            th = Fraction(self.param).limit_denominator(10**6)
            if not (0 <= th <= 1):
                raise ValidationError("pow trimming needs 0 <= theta <= 1")
            object.__setattr__(self, "param", th)
        elif self.rule == "table":
            if not self.table:
                raise ValidationError("table trimming needs values")
        else:
            raise ValidationError(f"unknown trimming rule {self.rule!r}")

    def __call__(self, N: int) -> int:
        if self.rule == "const":
            k = self.param
        elif self.rule == "log":
            k = _ceil_log_power(N, float(self.param))
        elif self.rule == "pow":
            k = _ceil_exact_power(N, self.param)
        else:
            if N >= len(self.table):
                raise ValidationError(f"trimming table has no entry for N={N}")
            k = self.table[N]
        if not (0 <= k <= N) and self.rule != "const":
            raise ValidationError(f"k({N})={k} outside [0, N]")
        return min(k, N)

    def evaluate(self, Ns: Iterable[int]) -> list[int]:
        """Evaluate on a sorted grid, enforcing monotonicity when flagged."""
        out = []
        prev = None
        for N in Ns:
            k = self(N)
            if self.monotone and prev is not None and k < prev:
                raise ValidationError(f"trimming sequence not monotone at N={N}")
            prev = k
            out.append(k)
        return out

    def describe(self) -> str:
        if self.rule == "table":
            return "table:" + ",".join(map(str, self.table))
        return f"{self.rule}:{self.param}"


# Growth windows

_ALLOWED_BIN = {ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow}


class _Expr:
    """A safe arithmetic expression in ``q`` evaluated over mpmath intervals."""

    def __init__(self, text: str, params: dict[str, float] | None = None):
        self.text = text.strip()
        self.params = dict(params or {})
        try:
            tree = ast.parse(self.text.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ValidationError(f"cannot parse window expression {text!r}") from exc
        self._check(tree.body)
        self.tree = tree.body

    def _check(self, node):
        if isinstance(node, ast.BinOp) and type(node.op) in _ALLOWED_BIN:
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            self._check(node.operand)
        elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            pass
        elif isinstance(node, ast.Name):
            if node.id != "q" and node.id not in self.params:
                raise ValidationError(f"unknown name {node.id!r} in window expression")
        elif isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and len(node.args) == 1:
            name = node.func.id
            if not (name in ("ln", "log", "sqrt", "exp") or (name.startswith("log") and name[3:].isdigit())):
                raise ValidationError(f"unknown function {name!r} in window expression")
            self._check(node.args[0])
        else:
            raise ValidationError(f"unsupported syntax in window expression {self.text!r}")

    def __call__(self, q: int):
        return self._eval(self.tree, q)

    def _eval(self, node, q):
        if isinstance(node, ast.BinOp):
            left, right = self._eval(node.left, q), self._eval(node.right, q)
            op = type(node.op)
            if op is ast.Add:
                return left + right
            if op is ast.Sub:
                return left - right
            if op is ast.Mult:
                return left * right
            if op is ast.Div:
                return left / right
            if left.a <= 0:
                raise PreconditionError("power of a non-positive quantity in window expression")
            return iv.exp(right * iv.log(left))
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, q)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Constant):
            return iv.mpf(str(node.value))
        if isinstance(node, ast.Name):
            return iv.mpf(q) if node.id == "q" else iv.mpf(str(self.params[node.id]))
        name = node.func.id
        v = self._eval(node.args[0], q)
        if name == "sqrt":
            return iv.sqrt(v)
        if name == "exp":
            return iv.exp(v)
        depth = 1 if name in ("ln", "log") else int(name[3:])
        for stage in range(depth):
            if v.a <= 0:
                raise PreconditionError(f"{name} undefined at q={q} (stage {stage + 1})")
            v = iv.log(v)
        return v


@dataclass(frozen=True)
class GrowthWindow:
    """Bounds ``lower(q_n) < q_{n+1} < upper(q_n)``; ``upper`` may be ``inf``."""

    lower: str
    upper: str = "inf"
    params: tuple[tuple[str, float], ...] = ()

    def _exprs(self):
        p = dict(self.params)
        lo = _Expr(self.lower, p)
        hi = None if self.upper.strip() in ("inf", "oo") else _Expr(self.upper, p)
        return lo, hi

    def bounds(self, q: int):
        """Enclosures ``((lo_a, lo_b), (up_a, up_b))`` at ``q`` as mpf endpoints.

        ``upper`` is None for an infinite window.
        """
        lo, hi = self._exprs()
        saved = iv.dps
        iv.dps = max(30, 2 * len(str(q)) + 10)
        try:
            L = lo(q)
            U = hi(q) if hi is not None else None
            # endpoints must leave the interval context at full precision
            with mpmath.workprec(iv.prec):
                L = (mpmath.mpf(L.a), mpmath.mpf(L.b))
                U = (mpmath.mpf(U.a), mpmath.mpf(U.b)) if U is not None else None
        finally:
            iv.dps = saved
        if L[0] <= 0:
            raise PreconditionError(f"lower window bound not positive at q={q}; below validity threshold")
        if U is not None and not (L[1] < U[0]):
            raise PreconditionError(f"window empty at q={q}; below validity threshold")
        return L, U

    def admissible_digits(self, q: int, q_prev: int) -> tuple[int, int | None]:
        """Integer range of ``a`` with ``a q + q_prev`` strictly inside the window."""
        L, U = self.bounds(q)
        with mpmath.workdps(2 * len(str(q)) + 30):
            a_min = max(1, int(mpmath.floor((L[1] - q_prev) / q)))
            while a_min * q + q_prev <= L[1]:
                a_min += 1
            while a_min > 1 and (a_min - 1) * q + q_prev > L[1]:
                a_min -= 1
            if U is None:
                return a_min, None
            a_max = int(mpmath.floor((U[0] - q_prev) / q)) + 1
            while a_max >= 1 and a_max * q + q_prev >= U[0]:
                a_max -= 1
            while (a_max + 1) * q + q_prev < U[0]:
                a_max += 1
        return a_min, a_max

    def choose_digit(self, q: int, q_prev: int) -> int:
        a_min, a_max = self.admissible_digits(q, q_prev)
        if a_max is None:
            return a_min
        if a_max < a_min:
            raise ConstructionError(f"no admissible digit at q={q}: window holds no a q + q_prev")
        L, U = self.bounds(q)
        with mpmath.workdps(30):
            # geometric mean of the ratio bounds lower/q and upper/q
            mid = mpmath.sqrt((L[0] + L[1]) * (U[0] + U[1]) / 4) / q
            a = int(mpmath.ceil(mid))
        return min(max(a, a_min), a_max)

    def contains(self, q: int, q_next: int) -> bool:
        L, U = self.bounds(q)
        if not q_next > L[1]:
            return False
        return U is None or q_next < U[0]


def construct_alpha_in_window(window: GrowthWindow, seed: Sequence[int], depth: int,
                              tail: Sequence[int] = (1,)) -> CoefficientStream:
    """Extend ``seed`` by ``depth`` digits whose denominators stay in ``window``.

    The stream continues with the periodic ``tail`` so it stays irrational.
    """
    if depth < 1:
        raise ValidationError("depth must be positive")
    if not seed:
        raise ValidationError("seed digits required")
    digits = list(seed)
    t = convergents(CoefficientStream(tuple(digits), tuple(tail), RULE), len(digits))
    q_prev, q = t.q[-2], t.q[-1]
    for _ in range(depth):
        a = window.choose_digit(q, q_prev)
        q_next = a * q + q_prev
        if not window.contains(q, q_next):
            raise ConstructionError(f"post-check failed at q={q}")
        digits.append(a)
        q_prev, q = q, q_next
    label = f"window(lower={window.lower},upper={window.upper})"
    return CoefficientStream(tuple(digits), tuple(tail), RULE, label)


# Sublinear budgets and the Liouville-type construction


@dataclass(frozen=True)
class SublinearRule:
    """``l(N) = ceil(g(N))`` for a named sublinear ``g``."""

    name: str
    param: float = 0.0

    def __post_init__(self):
        if self.name == "linear":
            raise DomainError("l(N) = N is not o(N)")
        if self.name not in ("zero", "const", "pow", "nlog"):
            raise ValidationError(f"unknown sublinear rule {self.name!r}")
        if self.name == "pow" and not (0 <= self.param < 1):
            raise DomainError("pow rule needs exponent in [0, 1) to be o(N)")

    def g(self, m):
        if self.name == "zero":
            return 0 * m
        if self.name == "const":
            return self.param + 0 * m
        if self.name == "pow":
            return np.power(m, self.param)
        return m / np.log(np.maximum(m, 2))

    def __call__(self, m: int) -> int:
        if self.name == "nlog" and m < 2:
            return 1
        return int(math.ceil(float(self.g(np.float64(m)))))


def u_scan(rule: SublinearRule, eps: Fraction, budget: int = DEFAULT_SCAN_BUDGET) -> int:
    """Smallest ``N`` with ``l(m) < eps m`` for all ``m >= N``.

    ``(g(m) + 1)/m`` bounds ``l(m)/m`` and decreases for ``m >= 3`` for every
    supported rule, so past its first crossing below ``eps`` nothing can fail.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise DomainError("eps must be positive")

    def h(m):
        return (float(rule.g(np.float64(m))) + 1) / m

    ef = float(eps)
    hi = 3
    while h(hi) >= ef * (1 - 1e-12):
        hi *= 2
        if hi > 4 * budget:
            raise BudgetError(f"u({eps}) scan exceeds budget {budget}")
    lo = max(3, hi // 2)
    while lo < hi:
        mid = (lo + hi) // 2
        if h(mid) < ef * (1 - 1e-12):
            hi = mid
        else:
            lo = mid + 1
    m0 = hi
    if m0 > budget:
        raise BudgetError(f"u({eps}) scan exceeds budget {budget}")
    last_bad = 0
    block = 1 << 20
    for start in range(1, m0 + 1, block):
        m = np.arange(start, min(m0 + 1, start + block), dtype=np.float64)
        g = rule.g(m)
        if rule.name == "nlog":
            g = np.where(m < 2, 1.0, g)
        lv = np.ceil(g)
        # l(m) >= eps m  <=>  l(m) * den >= num * m, decided exactly below
        bad = lv * eps.denominator >= eps.numerator * m - 0.5
        idx = np.nonzero(bad)[0]
        for i in idx[::-1]:
            mm = int(m[i])
            if rule(mm) * eps.denominator >= eps.numerator * mm:
                last_bad = max(last_bad, mm)
                break
    return last_bad + 1


def construct_alpha_seq1xrem(rule: SublinearRule, seed: Sequence[int], depth: int,
                             tail: Sequence[int] = (1,), budget: int = DEFAULT_SCAN_BUDGET) -> CoefficientStream:
    """Digits forcing ``q_{n+1} > q_n^2 u(1/q_n^2)`` at each constructed level."""
    if depth < 1 or not seed:
        raise ValidationError("need a non-empty seed and positive depth")
    digits = list(seed)
    t = convergents(CoefficientStream(tuple(digits), tuple(tail), RULE), len(digits))
    q_prev, q = t.q[-2], t.q[-1]
    for _ in range(depth):
        u = u_scan(rule, Fraction(1, q * q), budget)
        target = q * q * u
        a = max(1, (target - q_prev) // q + 1)
        q_next = a * q + q_prev
        if not q_next > target:
            raise ConstructionError("post-check failed")
        digits.append(a)
        q_prev, q = q, q_next
    return CoefficientStream(tuple(digits), tuple(tail), RULE, f"liouville(l={rule.name}:{rule.param})")


# Profiles and condition checks


@dataclass(frozen=True)
class RothProfile:
    levels: tuple[int, ...]
    ratios: tuple[float, ...]
    roth_consistent: bool
    bounded_on_prefix: bool
    max_digit: int
    tol: float
    digit_bound: int


def roth_profile(table: ConvergentTable, tol: float = 0.5, digit_bound: int = 100) -> RothProfile:
    """Ratios ``ln q_{n+1} / ln q_n`` over the prefix with heuristic verdicts.

    Roth-consistent means every ratio over the last half of the levels with
    ``q_n >= 16`` is at most ``1 + tol``.  Bounded means every digit is at most
    ``digit_bound``.  Both refer only to the materialized prefix.
    """
    if table.stream is not None and table.stream.finite:
        raise DomainError("rational angles have no Diophantine profile")
    if table.depth < 3:
        raise ValidationError("need at least three levels")
    levels, ratios = [], []
    for n in range(2, len(table.q) - 1):
        if table.q[n] >= 2:
            levels.append(n)
            ratios.append(math.log(table.q[n + 1]) / math.log(table.q[n]))
    tail = [r for n, r in zip(levels, ratios) if table.q[n] >= 16]
    tail = tail[len(tail) // 2:]
    consistent = all(r <= 1 + tol for r in tail) if tail else True
    mx = max(table.digits)
    return RothProfile(tuple(levels), tuple(ratios), consistent, mx <= digit_bound, mx, tol, digit_bound)


@dataclass(frozen=True)
class ConditionReport:
    name: str
    Ns: tuple[int, ...]
    values: tuple[float, ...]
    head_min: float
    tail_min: float
    holds: bool
    extra: dict = field(default_factory=dict)


def _grows(values: Sequence[float]) -> tuple[float, float, bool]:
    """Compare the minimum over the last quarter with the second quarter.

    The first quarter is skipped so start-up effects such as ``k(N) = min(c, N)``
    do not count as growth.
    """
    m = len(values)
    if m < 4:
        v = min(values) if values else math.nan
        return v, v, False
    head = min(values[m // 4: m // 2])
    tail = min(values[3 * m // 4:])
    return head, tail, tail > head


def condition_III(k: TrimmingSequence, table: ConvergentTable, Ns: Iterable[int]) -> ConditionReport:
    """``c(N) = k(N) / max(b_n, max_{j<n} a_j)``; holds when the tail minimum grows."""
    Ns = tuple(Ns)
    prefix_max = [0]
    for a in table.digits:
        prefix_max.append(max(prefix_max[-1], a))
    vals = []
    for N in Ns:
        kN = k(N)
        if kN > N:
            raise ValidationError(f"k({N}) > N")
        n = table.level(N)
        b = N // table.q[n]
        vals.append(kN / max(b, prefix_max[n - 1]))
    head, tail, ok = _grows(vals)
    return ConditionReport("III", Ns, tuple(vals), head, tail, ok)


def canonical_subsequence(table: ConvergentTable) -> tuple[int, ...]:
    """``{c q_n : 1 <= c <= ceil(a_n/2)}`` over levels with ``a_n > 2``.

    These stay below ``(2/3) q_{n+1}``.  Prefixes with no digit above 2 fall
    back to the denominators ``q_n`` themselves.
    """
    out = []
    for n in range(2, table.depth + 1):
        a = table.a(n)
        if a > 2:
            out.extend(c * table.q[n] for c in range(1, -(-a // 2) + 1))
    if not out:
        out = sorted({table.q[n] for n in range(2, table.depth + 1) if table.q[n] >= 1})
    return tuple(sorted(set(out)))


def condition_D(k: TrimmingSequence, table: ConvergentTable, subsequence: Iterable[int] | None = None,
                margin: float = 1 / 3) -> ConditionReport:
    """Ratios ``k(N_l)/b_n`` along a subsequence kept away from ``q_{n+1}``."""
    seq = tuple(canonical_subsequence(table) if subsequence is None else subsequence)
    if not (0 < margin < 1):
        raise ValidationError("margin must be in (0, 1)")
    vals = []
    for N in seq:
        n = table.level(N)
        if N > (1 - margin) * table.q[n + 1]:
            raise PreconditionError(f"N={N} too close to q_{n + 1}={table.q[n + 1]}")
        vals.append(k(N) / (N // table.q[n]))
    head, tail, ok = _grows(vals)
    return ConditionReport("D", seq, tuple(vals), head, tail, ok, {"margin": margin})


@dataclass(frozen=True)
class LogPropTrajectory:
    Ns: tuple[int, ...]
    ratios: tuple[float, ...]
    witnesses: tuple[tuple[int, float], ...]


def logprop_trajectory(table: ConvergentTable, Ns: Iterable[int], jump_tol: float = 0.5) -> LogPropTrajectory:
    """``N ln N / sum b_j q_j ln q_j`` along ``Ns`` plus jump-level witnesses."""
    out_N, out_r = [], []
    for N in Ns:
        if N < 2:
            continue
        main, _, _ = weighted_log_sums(ostrowski_expand(N, table), table)
        if main == 0:
            continue  # all weight on denominators equal to 1
        out_N.append(N)
        out_r.append(N * math.log(N) / main)
    wit = []
    for n in range(2, len(table.q) - 2):
        if table.q[n] >= 2 and math.log(table.q[n + 1]) / math.log(table.q[n]) > 1 + jump_tol:
            N = table.a(n) * table.q[n]
            main, _, _ = weighted_log_sums(ostrowski_expand(N, table), table)
            wit.append((N, N * math.log(N) / main))
    return LogPropTrajectory(tuple(out_N), tuple(out_r), tuple(wit))


@dataclass(frozen=True)
class DiophantineReport:
    digits: tuple[int, ...]
    q: tuple[int, ...]
    profile: RothProfile | None
    condition_III: ConditionReport | None
    condition_D: ConditionReport | None


def diophantine_report(table: ConvergentTable, k: TrimmingSequence | None = None,
                       Ns: Iterable[int] | None = None) -> DiophantineReport:
    prof = roth_profile(table) if table.stream is None or not table.stream.finite else None
    c3 = cd = None
    if k is not None:
        if Ns is None:
            Ns = range(1, table.q[-1])
        c3 = condition_III(k, table, Ns)
        cd = condition_D(k, table)
    return DiophantineReport(table.digits, table.q, prof, c3, cd)

