"""``trimbirk`` command line.

Exit codes: 0 success, 1 a verification or replay check failed, 2 invalid input
or unmet precondition, 3 budget exceeded, 64 usage error (unknown flag or
subcommand).  Reports go to ``--out`` or stdout.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from . import acceptance
from .contfrac import convergents, deltas, ostrowski_expand, ostrowski_value
from .diophantine import diophantine_report
from .errors import BudgetError, TrimbirkError, ValidationError
from .experiments import (
    DEFAULT_BUDGET,
    DEFAULT_EPS,
    oscillation_1x,
    oscillation_beta,
    point_osc,
    strong_law_run,
    weak_law_run,
)
from .orbit import RotationContext, k_smallest_fast, last_point, make_context, x_min
from .reports import dumps, envelope, export_report, law_csv
from .specs import parse_angle, parse_grid, parse_observable, parse_point, parse_trimming
from .trimsum import trimmed_sum

log = logging.getLogger("trimbirk")

EXIT_FAIL = 1
EXIT_USAGE = 64
SUITES = {
    "contfrac": ("A1", "A2"),
    "orbit": ("A8",),
    "qn": ("A3",),
    "laws": ("A4", "A5", "A7"),
    "oscillation": ("A6",),
    "acceptance": tuple(acceptance.CRITERIA),
}
CONFIG_KEYS = {"angle": "alpha", "observable": "obs", "trimming": "k", "grid": "grid"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="INI file with [angle] [observable] [trimming] [grid] [budget]")
    common.add_argument("--alpha", help="angle spec, e.g. golden or surd:(-1+1*sqrt(5))/2")
    common.add_argument("--budget", type=float, help="max orbit-point evaluations")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = _Parser(prog="trimbirk", description="Trimmed Birkhoff sums over circle rotations")
    p.add_argument("--version", action="version", version=f"trimbirk {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("cfe", parents=[common], help="digits, convergents and remainders")
    s.add_argument("--depth", type=int, default=10)

    s = sub.add_parser("ostrowski", parents=[common], help="Ostrowski expansion of N or value of digits")
    s.add_argument("--N", type=int)
    s.add_argument("--digits", help="b_1,...,b_n to decode")

    s = sub.add_parser("diophantine", parents=[common], help="growth profile and trimming conditions")
    s.add_argument("--depth", type=int, default=30)
    s.add_argument("--k", help="trimming rule")
    s.add_argument("--grid", help="N grid for condition (III)")

    s = sub.add_parser("orbit", parents=[common], help="smallest positive orbit points")
    s.add_argument("--x", default="0")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--kk", type=int, default=1, help="number of smallest points")

    s = sub.add_parser("sum", parents=[common], help="one trimmed Birkhoff sum")
    s.add_argument("--obs", help="observable spec")
    s.add_argument("--x", default="auto:0/1")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--k", help="trimming rule, e.g. const:1")

    s = sub.add_parser("law", parents=[common], help="strong or weak law experiment")
    s.add_argument("--kind", choices=("strong", "weak"), required=True)
    s.add_argument("--obs")
    s.add_argument("--k")
    s.add_argument("--grid")
    s.add_argument("--samples", type=int, default=20, help="points for strong runs")
    s.add_argument("--G", type=int, default=1000, help="strata for weak runs")
    s.add_argument("--eps", help="comma separated eps list")
    s.add_argument("--normalizer", choices=("default", "self"), default="default")
    s.add_argument("--workers", type=int, default=1)

    s = sub.add_parser("oscillate", parents=[common], help="oscillation constructions")
    s.add_argument("--kind", choices=("1x", "beta", "point"), required=True)
    s.add_argument("--n", type=int, required=True, help="level")
    s.add_argument("--gamma", default="1")
    s.add_argument("--beta", type=float, default=2.0)
    s.add_argument("--eps", default="9/1000")
    s.add_argument("--khat")
    s.add_argument("--kk", type=int, help="trimming count for --kind beta")
    s.add_argument("--N", type=int)
    s.add_argument("--psi", default="log_2")
    s.add_argument("--x")
    s.add_argument("--samples", type=int, default=200)

    s = sub.add_parser("verify", parents=[common], help="run an acceptance suite")
    s.add_argument("suite", choices=tuple(SUITES))

    s = sub.add_parser("replay", parents=[common], help="re-run a report from its config echo")
    s.add_argument("report")
    return p


# configuration


def _load_config(path):
    cfg = {}
    if not path:
        return cfg
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ValidationError(f"cannot read config file {path}")
    for section, key in CONFIG_KEYS.items():
        if cp.has_section(section):
            cfg[key] = cp[section].get("spec")
    if cp.has_section("budget"):
        cfg["budget"] = cp["budget"].getfloat("max")
    if cp.has_section("run") and "seed" in cp["run"]:
        cfg["seed"] = cp["run"].getint("seed")
    return cfg


def resolve(args, env) -> dict:
    """Merge defaults, config file, environment and flags into a config echo."""
    cfg = _load_config(getattr(args, "config", None))
    out = {k: v for k, v in vars(args).items() if k not in ("config", "out", "format")}
    for key, val in cfg.items():
        if out.get(key) is None:
            out[key] = val
    budget = DEFAULT_BUDGET
    if cfg.get("budget") is not None:
        budget = cfg["budget"]
    if env.get("TRIMBIRK_BUDGET"):
        try:
            budget = float(env["TRIMBIRK_BUDGET"])
        except ValueError as exc:
            raise ValidationError("TRIMBIRK_BUDGET must be a number") from exc
    if args.budget is not None:
        budget = args.budget
    out["budget"] = int(budget)
    if out.get("seed") is None:
        out["seed"] = 0
    return out


def _need(cfg, key, flag):
    if not cfg.get(key):
        raise ValidationError(f"missing {flag} (give it on the command line or in the config file)")
    return cfg[key]


def _context(cfg, N):
    stream = parse_angle(_need(cfg, "alpha", "--alpha"))
    if stream.finite:
        v = stream.value
        return stream, RotationContext.rational(v.numerator, v.denominator)
    return stream, make_context(stream, max(2, int(N)))


# handlers return (schema kind, report body, csv text or None, exit code)


def do_cfe(cfg):
    s = parse_angle(_need(cfg, "alpha", "--alpha"))
    depth = cfg["depth"]
    if s.finite:
        depth = min(depth, len(s.prefix))
    t = convergents(s, depth)
    body = {"digits": t.digits, "p": t.p, "q": t.q, "source": s.source, "label": s.label,
            "deltas": list(deltas(t, s.value, min(depth + 1, len(t.q) - 1)))}
    return "cfe", body, None, 0


def do_ostrowski(cfg):
    s = parse_angle(_need(cfg, "alpha", "--alpha"))
    if cfg.get("digits"):
        ds = tuple(int(v) for v in cfg["digits"].split(","))
        t = convergents(s, len(ds) + 2) if not s.finite else convergents(s, len(s.prefix))
        return "ostrowski", {"digits": ds, "N": ostrowski_value(ds, t)}, None, 0
    N = cfg.get("N")
    if N is None:
        raise ValidationError("give --N or --digits")
    t = convergents(s, 2)
    depth = 2
    while t.q[-1] <= N:
        depth *= 2
        if s.finite and depth > len(s.prefix):
            depth = len(s.prefix)
            t = convergents(s, depth)
            break
        t = convergents(s, depth)
    e = ostrowski_expand(N, t)
    return "ostrowski", {"N": N, "digits": e.digits, "level": e.level}, None, 0


def do_diophantine(cfg):
    s = parse_angle(_need(cfg, "alpha", "--alpha"))
    t = convergents(s, cfg["depth"] if not s.finite else min(cfg["depth"], len(s.prefix)))
    k = parse_trimming(cfg["k"]) if cfg.get("k") else None
    Ns = parse_grid(cfg["grid"]) if cfg.get("grid") else None
    if Ns is not None:
        Ns = [N for N in Ns if N < t.q[-1]]
    return "diophantine", diophantine_report(t, k, Ns), None, 0


def do_orbit(cfg):
    N = cfg["N"]
    _, ctx = _context(cfg, N)
    x = parse_point(cfg["x"], ctx, avoid_N=N)
    pts = k_smallest_fast(ctx, x, N, cfg["kk"])
    body = {"fingerprint": ctx.fingerprint(), "x": x, "N": N, "smallest": [{"j": j, "position": y} for j, y in pts],
            "x_min": x_min(ctx, x, N) if pts else None, "last_point": last_point(ctx, x, N)}
    return "orbit", body, None, 0


def do_sum(cfg):
    N = cfg["N"]
    if N > cfg["budget"]:
        raise BudgetError(f"N={N} exceeds budget {cfg['budget']}")
    _, ctx = _context(cfg, N)
    obs = parse_observable(_need(cfg, "obs", "--obs"))
    k = parse_trimming(cfg.get("k") or "const:0")(N)
    x = parse_point(cfg["x"], ctx, avoid_N=N)
    return "sum", trimmed_sum(ctx, obs, x, N, k), None, 0


def do_law(cfg):
    _need(cfg, "alpha", "--alpha")
    Ns = parse_grid(_need(cfg, "grid", "--grid"))
    _, ctx = _context(cfg, Ns[-1])
    obs = parse_observable(_need(cfg, "obs", "--obs"))
    trim = parse_trimming(cfg.get("k") or "const:0")
    eps = [float(v) for v in cfg["eps"].split(",")] if cfg.get("eps") else list(DEFAULT_EPS)
    d = "self" if cfg["normalizer"] == "self" else None
    if cfg["kind"] == "strong":
        r = strong_law_run(ctx, obs, trim, Ns, samples=cfg["samples"], seed=cfg["seed"], d=d, eps=eps,
                           budget=cfg["budget"], workers=cfg["workers"])
    else:
        r = weak_law_run(ctx, obs, trim, Ns, G=cfg["G"], eps=eps, seed=cfg["seed"], d=d, budget=cfg["budget"],
                         workers=cfg["workers"])
    return "law", r, law_csv(r), 0


def do_oscillate(cfg):
    stream = parse_angle(_need(cfg, "alpha", "--alpha"))
    n = cfg["n"]
    t = convergents(stream, n + 1)
    need = max(t.q[n + 1], cfg["N"] or 0)
    ctx = make_context(stream, need)
    kind = cfg["kind"]
    if kind == "1x":
        r = oscillation_1x(ctx, Fraction(cfg["gamma"]), n, samples=cfg["samples"], seed=cfg["seed"],
                           budget=cfg["budget"])
    elif kind == "beta":
        r = oscillation_beta(ctx, cfg["beta"], Fraction(cfg["eps"]), n, k=cfg["kk"], N=cfg["N"],
                             k_hat=Fraction(cfg["khat"]) if cfg.get("khat") else None, samples=cfg["samples"],
                             seed=cfg["seed"], budget=cfg["budget"])
    else:
        x = parse_point(cfg["x"], ctx) if cfg.get("x") else None
        r = point_osc(ctx, n, cfg["psi"], x=x, N=cfg["N"])
    return "oscillation", r, None, 0


def do_verify(cfg):
    results = acceptance.run(SUITES[cfg["suite"]])
    for r in results:
        print(acceptance.summary_line(r), file=sys.stderr)
    ok = all(r["pass"] for r in results)
    return "verify", {"suite": cfg["suite"], "results": results}, None, 0 if ok else EXIT_FAIL


HANDLERS = {"cfe": do_cfe, "ostrowski": do_ostrowski, "diophantine": do_diophantine, "orbit": do_orbit,
            "sum": do_sum, "law": do_law, "oscillate": do_oscillate, "verify": do_verify}


def render(cfg) -> tuple[str, str | None, int]:
    kind, body, csv_text, code = HANDLERS[cfg["command"]](cfg)
    return dumps(envelope(kind, body, cfg)), csv_text, code


def do_replay(path: str) -> tuple[str, int]:
    original = Path(path).read_text()
    try:
        doc = json.loads(original)
        cfg = dict(doc["config"])
    except (ValueError, KeyError, TypeError) as exc:
        raise ValidationError(f"{path} is not a trimbirk report") from exc
    text, _, _ = render(cfg)
    same = text == original
    log.info("replay %s", "identical" if same else "differs")
    return text, 0 if same else EXIT_FAIL


def _emit(text: str, out):
    if out:
        export_report(text, out)
    else:
        sys.stdout.write(text)


def main(argv=None, env=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    env = os.environ if env is None else env
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        if args.command == "replay":
            text, code = do_replay(args.report)
            _emit(text, args.out)
            return code
        cfg = resolve(args, env)
        text, csv_text, code = render(cfg)
        if args.format == "csv":
            if csv_text is None:
                raise ValidationError(f"{args.command} has no CSV form")
            text = csv_text
        _emit(text, args.out)
        return code
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except TrimbirkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
