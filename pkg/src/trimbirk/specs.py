"""Text grammars shared by the CLI and config files.

angle        rational:p/q | surd:(a+b*sqrt(d))/c | digits:[a1,a2,...](period) | golden
             | window:lower;upper;seed=1,2;depth=3 | liouville:rule(param);seed=1,2;depth=1
observable   pow:beta=1,c1=1,c2=0
trimming     const:k | log:c | pow:theta | table:k1,k2,...
grid         start:stop:log[:count] | start:stop:lin:count | N1,N2,...
point        a/q | auto:i/G
"""

from __future__ import annotations

import math
import re
from fractions import Fraction

from .contfrac import (FINITE, CoefficientStream, canonical_digits, cfe_of_quadratic, cfe_of_rational, golden,
                       periodic_stream)
from .diophantine import (GrowthWindow, SublinearRule, TrimmingSequence, construct_alpha_in_window,
                          construct_alpha_seq1xrem)
from .errors import ValidationError
from .observables import PowerObservable
from .orbit import RotationContext

_INT = r"[+-]?\d+"
_SURD = re.compile(rf"^\(\s*({_INT})\s*([+-])\s*(\d+)\s*\*\s*sqrt\(\s*(\d+)\s*\)\s*\)\s*/\s*(\d+)$")
_DIGITS = re.compile(r"^\[([\d,\s]*)\](?:\(([\d,\s]+)\))?$")
_RULE = re.compile(r"^(\w+)(?:\(([^)]*)\))?$")


def _ints(text: str) -> tuple[int, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        return tuple(int(p) for p in parts)
    except ValueError as exc:
        raise ValidationError(f"expected integers, got {text!r}") from exc


def _options(parts):
    out = {}
    for p in parts:
        if "=" not in p:
            raise ValidationError(f"expected key=value, got {p!r}")
        k, v = p.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_angle(text: str) -> CoefficientStream:
    if text is None or not str(text).strip():
        raise ValidationError("angle spec is empty")
    text = str(text).strip()
    kind, _, body = text.partition(":")
    kind = kind.strip().lower()
    if kind == "golden" and not body:
        return golden()
    if kind == "rational":
        try:
            f = Fraction(body.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"bad rational {body!r}") from exc
        return cfe_of_rational(f.numerator, f.denominator)
    if kind == "surd":
        m = _SURD.match(body.strip())
        if not m:
            raise ValidationError(f"surd must look like (a+b*sqrt(d))/c, got {body!r}")
        a, sgn, b, d, c = m.groups()
        b = int(b) if sgn == "+" else -int(b)
        return cfe_of_quadratic(int(a), b, int(d), int(c))
    if kind == "digits":
        m = _DIGITS.match(body.strip())
        if not m:
            raise ValidationError(f"digits must look like [a1,a2,...] or [prefix](period), got {body!r}")
        prefix = _ints(m.group(1))
        period = _ints(m.group(2)) if m.group(2) else ()
        if not period:
            return CoefficientStream(canonical_digits(prefix), (), FINITE)
        return periodic_stream(prefix, period)
    if kind == "window":
        parts = [p.strip() for p in body.split(";")]
        if len(parts) < 2:
            raise ValidationError("window needs lower;upper[;seed=..;depth=..;tail=..]")
        opts = _options(parts[2:])
        w = GrowthWindow(parts[0], parts[1])
        return construct_alpha_in_window(w, _ints(opts.get("seed", "1")), int(opts.get("depth", "1")),
                                         _ints(opts.get("tail", "1")))
    if kind == "liouville":
        parts = [p.strip() for p in body.split(";")]
        m = _RULE.match(parts[0])
        if not m:
            raise ValidationError(f"bad sublinear rule {parts[0]!r}")
        rule = SublinearRule(m.group(1), float(m.group(2)) if m.group(2) else 0.0)
        opts = _options(parts[1:])
        return construct_alpha_seq1xrem(rule, _ints(opts.get("seed", "1")), int(opts.get("depth", "1")),
                                        _ints(opts.get("tail", "1")))
    raise ValidationError(f"unknown angle kind {kind!r}")


def parse_observable(text: str) -> PowerObservable:
    kind, _, body = str(text).strip().partition(":")
    if kind != "pow":
        raise ValidationError(f"unknown observable kind {kind!r}")
    opts = _options([p for p in body.split(",") if p.strip()]) if body else {}
    unknown = set(opts) - {"beta", "c1", "c2"}
    if unknown:
        raise ValidationError(f"unknown observable fields {sorted(unknown)}")
    try:
        vals = [float(opts.get(k, dv)) for k, dv in (("beta", 1), ("c1", 1), ("c2", 0))]
    except ValueError as exc:
        raise ValidationError(f"bad observable {text!r}") from exc
    return PowerObservable(*vals)


def parse_trimming(text: str) -> TrimmingSequence:
    kind, _, body = str(text).strip().partition(":")
    kind = kind.strip()
    if kind == "table":
        return TrimmingSequence("table", table=_ints(body))
    if kind in ("const", "log", "pow"):
        try:
            param = Fraction(body.strip()) if kind == "pow" else float(body)
        except ValueError as exc:
            raise ValidationError(f"bad trimming parameter {body!r}") from exc
        if kind == "const":
            if param != int(param):
                raise ValidationError("const trimming needs an integer")
            param = int(param)
        return TrimmingSequence(kind, param)
    raise ValidationError(f"unknown trimming rule {kind!r}")


def parse_grid(text: str) -> list[int]:
    text = str(text).strip()
    if ":" not in text:
        Ns = [int(float(v)) for v in text.split(",") if v.strip()]
    else:
        parts = text.split(":")
        if len(parts) < 3:
            raise ValidationError("grid must be start:stop:log[:count] or start:stop:lin:count")
        start, stop = int(float(parts[0])), int(float(parts[1]))
        if not (1 <= start <= stop):
            raise ValidationError("grid needs 1 <= start <= stop")
        mode = parts[2]
        if mode == "log":
            if len(parts) > 3:
                count = int(parts[3])
                Ns = [round(start * (stop / start) ** (i / max(1, count - 1))) for i in range(count)]
            else:
                lo, hi = math.log10(start), math.log10(stop)
                Ns = [round(10 ** e) for e in range(math.ceil(lo - 1e-12), math.floor(hi + 1e-12) + 1)]
                Ns = sorted(set([start] + Ns + [stop]))
        elif mode == "lin":
            count = int(parts[3]) if len(parts) > 3 else 2
            Ns = [start + (stop - start) * i // max(1, count - 1) for i in range(count)]
        else:
            raise ValidationError(f"unknown grid mode {mode!r}")
    Ns = sorted(set(Ns))
    if not Ns or Ns[0] < 1:
        raise ValidationError("grid values must be positive")
    return Ns


def parse_point(text: str, ctx: RotationContext, avoid_N: int = 0) -> Fraction:
    text = str(text).strip()
    if text.startswith("auto:"):
        i, _, G = text[5:].partition("/")
        return ctx.grid_point(int(i), int(G), avoid_N=avoid_N)
    try:
        x = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"bad point {text!r}") from exc
    if not (0 <= x < 1):
        raise ValidationError("point must lie in [0, 1)")
    return x
