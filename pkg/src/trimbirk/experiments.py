"""Verification campaigns: strong/weak law runs and the oscillation constructions.

Every run is deterministic given its arguments and seed.  Sample points are
exact rationals; stratified offsets come from ``numpy.random.default_rng(seed)``
and are stored in the report so the run can be repeated bit for bit.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np

from .contfrac import ConvergentTable
from .diophantine import TrimmingSequence, iterated_log, logprop_trajectory
from .errors import BudgetError, PreconditionError, ValidationError
from .observables import PowerObservable, normalizer_beta
from .orbit import (
    RotationContext,
    iota,
    k_smallest_positive,
    last_point,
    position,
    x_min,
)
from .trimsum import qn_bound_suite, trimmed_profile, trimmed_sums_multi

DEFAULT_BUDGET = 5 * 10**8
DEFAULT_EPS = (0.5, 0.25, 0.1, 0.05)
OFFSET_BITS = 32

__all__ = [
    "LawReport", "OscillationReport", "default_normalizer", "stratified_points", "strong_law_run",
    "weak_law_run", "oscillation_1x", "oscillation_beta", "point_osc", "qn_bound_run", "logprop_run",
]


def check_budget(estimate: int, budget: int) -> None:
    if estimate > budget:
        raise BudgetError(f"estimated {estimate} orbit-point evaluations exceed budget {budget}")


def default_normalizer(obs: PowerObservable) -> Callable[[int, int], float]:
    """``d(N, k)``: ``(c1 + c2) N ln N`` for beta = 1, else ``C N^beta k^(1-beta)/(beta-1)``.

    For beta > 1 the constant is ``C = (c1^(1/beta) + c2^(1/beta))^beta``, the
    tail constant of ``f``; it reduces to ``c1`` for one-sided observables.
    """
    if obs.beta == 1:
        c = obs.c1 + obs.c2
        return lambda N, k: c * N * math.log(N) if N > 1 else math.nan
    C = (obs.c1 ** (1 / obs.beta) + obs.c2 ** (1 / obs.beta)) ** obs.beta
    return lambda N, k: C * normalizer_beta(N, max(k, 1), obs.beta)


def stratified_points(ctx: RotationContext, G: int, seed: int, avoid_N: int = 0) -> tuple[list[Fraction], list[Fraction]]:
    """One exact point per stratum ``[i/G, (i+1)/G)`` at a seeded offset."""
    if G < 1:
        raise ValidationError("grid size must be positive")
    rng = np.random.default_rng(seed)
    raw = rng.integers(0, 2**OFFSET_BITS, size=G, dtype=np.uint64)
    offsets = [Fraction(int(r), 2**OFFSET_BITS) for r in raw]
    return [ctx.grid_point(i, G, offsets[i], avoid_N=avoid_N) for i in range(G)], offsets


def _profile_ratios(args):
    ctx, obs, x, Ns, k, d = args
    return [r.ratio for r in trimmed_profile(ctx, obs, x, Ns, k, d=d)]


def _run_profiles(ctx, obs, xs, Ns, k, d, workers: int):
    jobs = [(ctx, obs, x, Ns, k, d) for x in xs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_profile_ratios, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_profile_ratios(j) for j in jobs]


@dataclass
class LawReport:
    kind: str
    angle: str
    fingerprint: str
    observable: str
    trimming: str
    normalizer: str
    Ns: list[int]
    ks: list[int]
    ratios: list[list[float]]  # ratios[x_index][N_index]
    eps: list[float]
    lam_hat: dict[float, list[float]]
    max_dev: list[float]
    design: dict
    wall_clock: float = field(default=0.0, compare=False)

    def deviations_shrink(self) -> bool:
        return len(self.max_dev) >= 2 and self.max_dev[-1] < self.max_dev[0]


def _k_of(trim) -> Callable[[int], int]:
    if isinstance(trim, TrimmingSequence):
        return trim
    if isinstance(trim, int):
        return lambda N: min(trim, N)
    raise ValidationError("trimming must be a TrimmingSequence or an int")


def _describe_trim(trim) -> str:
    return trim.describe() if isinstance(trim, TrimmingSequence) else f"const:{trim}"


def _law(kind, ctx, obs, trim, Ns, xs, offsets, G, seed, eps, d, d_label, workers):
    Ns = sorted(set(int(N) for N in Ns))
    if not Ns:
        raise ValidationError("empty N grid")
    ctx.check_N(Ns[-1])
    kf = _k_of(trim)
    ks = [kf(N) for N in Ns]
    if d == "self":
        dfun, d_label = None, "self"
    else:
        dfun = d or default_normalizer(obs)
    t0 = time.perf_counter()
    ratios = _run_profiles(ctx, obs, xs, Ns, kf, dfun, workers)
    wall = time.perf_counter() - t0
    arr = np.array(ratios, dtype=np.float64).reshape(len(xs), len(Ns))
    dev = np.abs(arr - 1.0)
    lam = {}
    for e in eps:
        if math.isinf(e):
            lam[e] = [0.0] * len(Ns)
        else:
            lam[e] = [float(np.count_nonzero(~(dev[:, i] <= e))) / len(xs) for i in range(len(Ns))]
    design = {"G": G, "seed": seed, "offsets": offsets, "points": xs}
    label = ctx.stream.label if ctx.stream is not None and ctx.stream.label else "digits:" + ",".join(
        map(str, ctx.table.digits[:12]))
    return LawReport(kind, label, ctx.fingerprint(), obs.describe(), _describe_trim(trim), d_label, Ns, ks,
                     arr.tolist(), list(eps), lam, [float(v) for v in dev.max(axis=0)], design, wall)


def strong_law_run(ctx: RotationContext, obs: PowerObservable, trim, Ns: Sequence[int], samples: int = 20,
                   seed: int = 0, d=None, eps: Sequence[float] = DEFAULT_EPS, budget: int = DEFAULT_BUDGET,
                   workers: int = 1) -> LawReport:
    """Per-point ratio trajectories ``S_N^{k(N)}(x)/d_N`` on a stratified sample.

    ``d`` is a callable ``(N, k) -> float``, ``"self"`` for self-normalization
    or None for :func:`default_normalizer`.
    """
    Ns = list(Ns)
    check_budget(samples * max(Ns, default=0), budget)
    xs, offsets = stratified_points(ctx, samples, seed, avoid_N=max(Ns))
    return _law("strong", ctx, obs, trim, Ns, xs, offsets, samples, seed, eps, d, "default", workers)


def weak_law_run(ctx: RotationContext, obs: PowerObservable, trim, Ns: Sequence[int], G: int = 1000,
                 eps: Sequence[float] = DEFAULT_EPS, seed: int = 0, d=None, budget: int = DEFAULT_BUDGET,
                 workers: int = 1) -> LawReport:
    """Empirical violation measure ``lambda(|S/d - 1| > eps)`` over ``G`` strata."""
    Ns = list(Ns)
    check_budget(G * max(Ns, default=0), budget)
    xs, offsets = stratified_points(ctx, G, seed, avoid_N=max(Ns))
    return _law("weak", ctx, obs, trim, Ns, xs, offsets, G, seed, eps, d, "default", workers)


# oscillation constructions


@dataclass
class OscillationReport:
    kind: str
    fingerprint: str
    params: dict
    n: int
    q_n: int
    q_next: int
    N: int
    ks: list[int]
    mirrored: bool
    sets: dict  # name -> {"measure": Fraction, "intervals": [(lo, hi), ...] or None, "count": int}
    samples: dict  # name -> list of exact points
    stats: dict
    thresholds: dict
    verdicts: dict
    notes: list[str] = field(default_factory=list)


def _positive_view(ctx: RotationContext, n: int) -> tuple[RotationContext, int]:
    """Context in which level ``n`` has ``q_n alpha - p_n > 0``, plus its level index there."""
    if ctx.sign(n) > 0:
        return ctx, n
    m = ctx.mirror()
    qn, qn1 = ctx.table.q[n], ctx.table.q[n + 1]
    for j in range(2, len(m.table.q) - 1):
        if m.table.q[j] == qn and m.table.q[j + 1] == qn1 and m.sign(j) > 0:
            return m, j
    raise PreconditionError(f"level with q_n={qn} not found in the mirrored expansion")


def _union(ctx: RotationContext, lo: Fraction, hi: Fraction, count: int, list_limit: int = 5000):
    """Exact union of ``(lo, hi) - j alpha`` on the circle for ``j < count``.

    ``lo < hi`` are signed coordinates with ``hi - lo < 1``.  Returns the
    measure and, for small unions, the merged intervals in ``[0, 1]``.
    """
    L = math.lcm(ctx.q, lo.denominator, hi.denominator)
    w = int((hi - lo) * L)
    base = int(lo * L) % L
    step = ctx.p * (L // ctx.q)
    starts = sorted((base - j * step) % L for j in range(count))
    merged = []
    for s in starts:
        if merged and s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], s + w)
        else:
            merged.append([s, s + w])
    # wrap-around overlap with the first interval
    if len(merged) > 1 and merged[-1][1] - L >= merged[0][0]:
        last = merged.pop()
        merged[0] = [last[0] - L, max(merged[0][1], last[1] - L)]
    measure = Fraction(min(L, sum(b - a for a, b in merged)), L)
    intervals = None
    if len(merged) <= list_limit:
        intervals = []
        for a, b in merged:
            if a < 0:
                intervals.append((Fraction(a + L, L), Fraction(1)))
                intervals.append((Fraction(0), Fraction(b, L)))
            elif b > L:
                intervals.append((Fraction(a, L), Fraction(1)))
                intervals.append((Fraction(0), Fraction(b - L, L)))
            else:
                intervals.append((Fraction(a, L), Fraction(b, L)))
        intervals.sort()
    return measure, intervals, len(merged)


def _sample_in(ctx, lo, hi, count, samples, rng):
    """Points ``u - j alpha`` with ``u`` stratified inside ``(lo, hi)`` and ``j`` drawn from ``rng``."""
    js = rng.integers(0, count, size=samples)
    out = []
    for s in range(samples):
        u = lo + (hi - lo) * Fraction(2 * s + 1, 2 * samples)
        out.append((u - int(js[s]) * ctx.proxy) % 1)
    return out


def _pow_gt(a: int, b: int, e: Fraction) -> bool:
    """``a > b^e`` decided at high precision (exactly when ``e`` is an integer)."""
    if e.denominator == 1:
        return a > b ** int(e)
    with mpmath.workdps(60):
        return mpmath.mpf(a) > mpmath.power(b, mpmath.mpf(e.numerator) / e.denominator)


def oscillation_1x(ctx: RotationContext, gamma, n: int, samples: int = 200, ks: Sequence[int] | None = None,
                   seed: int = 0, budget: int = DEFAULT_BUDGET) -> OscillationReport:
    """Build the sets ``A`` and ``B`` at level ``n`` and check both thresholds on samples.

    With ``N = ceil(gamma q_{n+1}/250)`` every sampled ``x`` in ``A`` should
    have ``S_N^k > gamma/4 q_{n+1} ln q_n`` and every ``y`` in ``B`` should have
    ``S_N^k < gamma/100 q_{n+1} ln q_n`` for all ``k <= q_{n+1} q_n^-(1+gamma/2)``.
    """
    gamma = Fraction(gamma)
    if not (0 < gamma <= 1):
        raise PreconditionError("gamma must lie in (0, 1]")
    t = ctx.table
    if n + 1 >= len(t.q):
        raise PreconditionError("level beyond the materialized table")
    qn, qn1 = t.q[n], t.q[n + 1]
    if not _pow_gt(qn1, qn, 1 + gamma):
        raise PreconditionError(f"q_(n+1) > q_n^(1+gamma) fails: {qn1} vs {qn}^{1 + gamma}")
    with mpmath.workdps(60):
        lhs = mpmath.power(qn, mpmath.mpf(gamma.numerator) / gamma.denominator)
        if not lhs > mpmath.mpf(1000 * gamma.denominator) / gamma.numerator:
            raise PreconditionError(f"q_n^gamma > 1000/gamma fails at q_n={qn}")
        kmax = int(mpmath.floor(qn1 * mpmath.power(qn, -(1 + mpmath.mpf(gamma.numerator) / (2 * gamma.denominator)))))
    N = math.ceil(gamma * qn1 / 250)
    ctx.check_N(N)
    ks = list(range(kmax + 1)) if ks is None else sorted(set(int(k) for k in ks))
    if ks and (ks[0] < 0 or ks[-1] > kmax):
        raise PreconditionError(f"k must satisfy 0 <= k <= q_(n+1) q_n^-(1+gamma/2), here {kmax}")
    check_budget(2 * samples * N, budget)

    w, nw = _positive_view(ctx, n)
    a_lo, a_hi = -gamma / (1000 * qn), Fraction(0)
    b_lo, b_hi = -(Fraction(1, 4) + gamma / 1000) / qn, -Fraction(1, 4 * qn)
    mA, intA, cA = _union(w, a_lo, a_hi, qn)
    mB, intB, cB = _union(w, b_lo, b_hi, qn)

    rng = np.random.default_rng(seed)
    xs = _sample_in(w, a_lo, a_hi, qn, samples, rng)
    ys = _sample_in(w, b_lo, b_hi, qn, samples, rng)

    def member(z, lo, hi):
        s = iota(position(w, z, last_point(w, z, qn)))
        return lo < s < hi

    contained = all(member(z, a_lo, a_hi) for z in xs) and all(member(z, b_lo, b_hi) for z in ys)
    if not contained:
        raise PreconditionError("a sampled point failed the exact containment test")

    f = PowerObservable(1.0)
    SA = np.array([[v for _, v in sorted(trimmed_sums_multi(w, f, z, N, ks).items())] for z in xs])
    SB = np.array([[v for _, v in sorted(trimmed_sums_multi(w, f, z, N, ks).items())] for z in ys])
    hi_thr = float(gamma) / 4 * qn1 * math.log(qn)
    lo_thr = float(gamma) / 100 * qn1 * math.log(qn)
    a_viol = int(np.count_nonzero(~(SA > hi_thr)))
    b_viol = int(np.count_nonzero(~(SB < lo_thr)))
    stats = {
        "A_min_per_k": SA.min(axis=0).tolist(),
        "B_max_per_k": SB.max(axis=0).tolist(),
        "A_violations": a_viol,
        "B_violations": b_viol,
        "b_n": N // qn,
        "k_max": kmax,
    }
    verdicts = {
        "A_above": a_viol == 0,
        "B_below": b_viol == 0,
        "measures_exact": mA == gamma / 1000 and mB == gamma / 1000,
        "containment": contained,
    }
    verdicts["pass"] = all(verdicts.values())
    notes = []
    if w is not ctx:
        notes.append("negative level sign: sets and sums are taken for the rotation by 1 - alpha")
    return OscillationReport(
        "1x", ctx.fingerprint(), {"gamma": gamma, "samples": samples, "seed": seed}, n, qn, qn1, N, ks,
        w is not ctx,
        {"A": {"measure": mA, "intervals": intA, "count": cA}, "B": {"measure": mB, "intervals": intB, "count": cB}},
        {"A": xs, "B": ys}, stats, {"A_above": hi_thr, "B_below": lo_thr}, verdicts, notes)


def oscillation_beta(ctx: RotationContext, beta: float, eps, n: int, k: int | None = None, N: int | None = None,
                     k_hat=None, samples: int = 200, seed: int = 0, budget: int = DEFAULT_BUDGET) -> OscillationReport:
    """Gap between ``S_N^k`` on ``A'`` and on its translate ``A' + eps delta_n / 4``.

    ``N`` defaults to the largest multiple of ``q_n`` in ``[q_n, (1-eps) q_{n+1}]``.
    Give either ``k`` or ``k_hat``; ``k = k_hat N / q_n`` must be an integer.
    The unknown constant is reported as quantiles of ``gap / scale``.
    """
    eps = Fraction(eps)
    if not (0 < eps < Fraction(1, 100)):
        raise PreconditionError("eps must lie in (0, 1/100)")
    obs = PowerObservable(beta)
    t = ctx.table
    if n + 1 >= len(t.q) or n < 2:
        raise PreconditionError("level outside the materialized table")
    qn, qn1, qprev = t.q[n], t.q[n + 1], t.q[n - 1]
    top = math.floor((1 - eps) * qn1)
    if N is None:
        N = (top // qn) * qn
    if not (qn <= N <= top):
        raise PreconditionError(f"N must lie in [q_n, (1-eps) q_(n+1)] = [{qn}, {top}]")
    if k is None:
        if k_hat is None:
            raise ValidationError("give k or k_hat")
        kk = Fraction(k_hat) * N / qn
        if kk.denominator != 1:
            raise PreconditionError("k_hat N / q_n is not an integer")
        k = int(kk)
    k_hat = Fraction(k * qn, N)
    ctx.check_N(N)
    check_budget(2 * samples * N, budget)

    w, nw = _positive_view(ctx, n)
    dn = w.delta(nw)
    if (1 - eps / 2) * qn > qprev:
        lo, hi, count, variant = Fraction(0), eps * dn / 10, qn - qprev, "main"
    else:
        lo, hi, count, variant = Fraction(0), eps * w.delta(nw - 1) / 20, qn, "alternate"
    shift = eps * dn / 4
    mA, intA, cA = _union(w, lo, hi, count)
    mB, intB, cB = _union(w, lo + shift, hi + shift, count)

    rng = np.random.default_rng(seed)
    xs = _sample_in(w, lo, hi, count, samples, rng)
    for z in xs:
        j1, p1 = k_smallest_positive(w, z, qn, 1)[0]
        if not (0 < p1 < hi) or (variant == "main" and j1 > qn - qprev - 1):
            raise PreconditionError("a sampled point failed the exact containment test")
    ys = [(z + shift) % 1 for z in xs]
    SA = np.array([trimmed_sums_multi(w, obs, z, N, [k])[k] for z in xs])
    SB = np.array([trimmed_sums_multi(w, obs, z, N, [k])[k] for z in ys])
    gaps = SA - SB
    first = N * float(qn) ** (beta - 1)
    scale = float(eps) * (first if k == 0 else min(first, float(k_hat) ** -2 * N ** beta * k ** (1 - beta)))
    fit = gaps / scale
    q05, q50, q95 = (float(v) for v in np.quantile(fit, [0.05, 0.5, 0.95]))
    stats = {
        "gap_min": float(gaps.min()),
        "gap_median": float(np.median(gaps)),
        "set_gap": float(SA.min() - SB.max()),
        "scale": scale,
        "c_fit": {"min": float(fit.min()), "q05": q05, "median": q50, "q95": q95},
        "k_hat": k_hat,
        "variant": variant,
    }
    verdicts = {
        "pointwise_gap_positive": bool((gaps > 0).all()),
        "measure_bound": mA >= eps * eps / 1000 and mA == mB,
        "containment": True,
    }
    verdicts["pass"] = all(verdicts.values())
    return OscillationReport(
        "beta", ctx.fingerprint(), {"beta": beta, "eps": eps, "k": k, "samples": samples, "seed": seed}, n, qn,
        qn1, N, [k], w is not ctx,
        {"A": {"measure": mA, "intervals": intA, "count": cA}, "B": {"measure": mB, "intervals": intB, "count": cB}},
        {"A": xs, "B": ys}, stats, {"measure_floor": eps * eps / 1000}, verdicts,
        ["the constant c is fitted, never asserted"])


def _psi(spec) -> Callable[[float], float]:
    if callable(spec):
        return spec
    s = str(spec).strip()
    if s.startswith("log_"):
        order = int(s[4:])
        return lambda v: iterated_log(order, v)
    raise ValidationError(f"unknown psi {spec!r}; use log_<k> or a callable")


def point_osc(ctx: RotationContext, n: int, psi="log_2", x=None, N: int | None = None) -> dict:
    """Cluster gap ``S_N^1 - S_N^{b_n+1}`` at a generalized scale.

    The hypothesis ``x_min^{q_n} < 1/(q_n ln q_n psi(q_n))`` gates the verdict;
    when it fails, or the level sign is negative, or ``b_n <= 1``, the result is
    report-only.  ``N`` defaults to ``max(q_n, ceil(q_{n+1}/ln q_n))``.
    """
    t = ctx.table
    qn, qn1 = t.q[n], t.q[n + 1]
    if qn < 2:
        raise PreconditionError(f"point oscillation needs q_n >= 2, got {qn}")
    psif = _psi(psi)
    x = ctx.proxy if x is None else Fraction(x)
    if N is None:
        N = max(qn, math.ceil(qn1 / math.log(qn)))
    N = min(N, qn1 - 1)
    ctx.check_N(N)
    b = N // qn
    out = {"label": "generalized-scale", "n": n, "q_n": qn, "q_next": qn1, "N": N, "b_n": b, "x": x,
           "fingerprint": ctx.fingerprint()}
    thr = 1 / (qn * math.log(qn) * psif(qn))
    xm = x_min(ctx, x, qn)
    out["x_min"] = xm
    out["threshold"] = thr
    reasons = []
    if ctx.sign(n) <= 0:
        reasons.append("level sign negative")
    if b <= 1:
        reasons.append("b_n <= 1 (degenerate)")
    if not float(xm) < thr:
        reasons.append("x_min hypothesis unmet")
    sums = trimmed_sums_multi(ctx, PowerObservable(1.0), x, N, [1, b + 1])
    gap = sums[1] - sums[b + 1]
    out["gap"] = gap
    out["half_NlogN"] = 0.5 * N * math.log(N)
    if reasons:
        out.update(report_only=True, reasons=reasons, pass_=None)
        return out
    # cluster points j1 + i q_n (i < m) sit at eps + i delta_{n+1} < eps + i/q_{n+1}
    j1 = k_smallest_positive(ctx, x, qn, 1)[0][0]
    m = (N - 1 - j1) // qn + 1
    e = float(xm)
    bound = math.fsum(1 / (e + i / qn1) for i in range(1, min(m, b + 1)))
    out["cluster_points"] = m
    out["harmonic_bound"] = bound
    out["harmonic_gate"] = gap >= bound * (1 - 1e-9)
    out["report_only"] = False
    out["pass_"] = gap >= out["half_NlogN"]
    return out


def qn_bound_run(ctx: RotationContext, q_limit: int, samples: int = 100, seed: int = 0, factor: float = 7.0,
                 budget: int = DEFAULT_BUDGET) -> dict:
    """Level-``q_n`` bound table on a stratified sample; failures keep their exact instance."""
    t = ctx.table
    levels = [q for q in t.q if 2 <= q <= q_limit]
    check_budget(samples * max(levels, default=0), budget)
    xs, offsets = stratified_points(ctx, samples, seed, avoid_N=max(levels, default=0))
    rows = qn_bound_suite(ctx, xs, q_limit, factor)
    failures = [dict(r, x=xs[r["x_index"]]) for r in rows if not r["pass"]]
    return {"fingerprint": ctx.fingerprint(), "factor": factor, "q_limit": q_limit, "rows": rows,
            "failures": failures, "pass": not failures, "design": {"G": samples, "seed": seed, "offsets": offsets}}


def logprop_run(table: ConvergentTable, Ns: Sequence[int]) -> dict:
    traj = logprop_trajectory(table, Ns)
    return {"Ns": list(traj.Ns), "ratios": list(traj.ratios), "witnesses": [list(w) for w in traj.witnesses]}
