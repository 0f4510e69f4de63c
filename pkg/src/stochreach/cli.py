"""Command-line front-end.

Every report is a list of records. ``--format tsv`` (default) writes one
tab-separated line per record; ``--format lines`` writes one ``key=value``
line per field with a blank line between records. Exit status is 0 on
success, 1 on a domain error and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction

from .bellman import SolveConfig, format_value, value_iterate
from .errors import ReachError
from .gallery import ExampleSpec
from .game import format_game, parse_game
from .ocssg import OCAutomaton, check_corollary_oc, format_oc, limit_values, parse_oc, termination_bounds
from .policies import format_strategy, parse_strategy
from .qualitative import safe_states
from .simulate import SimConfig, estimate_reach
from .strategy import (
    ThresholdQuery,
    evaluate_strategy_pair,
    extract_min_optimal,
    synthesize_max_optimal,
    threshold_winner,
)

DEFAULT_CAP = 32
DEFAULT_TOL = 1e-12
DEFAULT_LIMIT_TOL = 1e-3


class _Fail(Exception):
    """Domain failure after partial output; carries the message only."""


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, (float, Fraction)):
        return format_value(x)
    return str(x)


def _emit(out, fmt: str, records):
    first = True
    for rec in records:
        if fmt == "tsv":
            out.write("\t".join(_fmt(v) for v in rec.values()) + "\n")
        else:
            if not first:
                out.write("\n")
            for k, v in rec.items():
                out.write(f"{k}={_fmt(v)}\n")
        first = False


def _config(args) -> SolveConfig:
    return SolveConfig(tolerance=args.tol, max_iterations=args.max_iter)


def _solved(g, cfg):
    res = value_iterate(g, cfg)
    if not res.converged:
        raise _Fail(f"value iteration stopped after {res.iterations} steps, residual {res.residual:g}")
    return res


# --- subcommands -------------------------------------------------------------


def cmd_solve(args, out):
    g = parse_game(_read(args.game))
    res = value_iterate(g, _config(args))
    _emit(out, args.format, (
        {"state": name, "value": val, "residual": r} for name, val, r in res.rows(g)
    ))
    if not res.converged:
        raise _Fail(f"not converged after {res.iterations} iterations (residual {res.residual:g})")


def cmd_qualitative(args, out):
    g = parse_game(_read(args.game))
    _emit(out, args.format, ({"state": g.names[s]} for s in sorted(safe_states(g))))


def cmd_strategy(args, out):
    g = parse_game(_read(args.game))
    cfg = _config(args)
    if args.player == "min":
        strat = extract_min_optimal(g, _solved(g, cfg).valuation)
    else:
        strat = synthesize_max_optimal(g, cfg)
    out.write(format_strategy(g, strat))


def _strategy_pair(args, g):
    sigma = parse_strategy(g, _read(args.sigma))
    pi = parse_strategy(g, _read(args.pi))
    return sigma, pi


def cmd_evaluate(args, out):
    g = parse_game(_read(args.game))
    sigma, pi = _strategy_pair(args, g)
    p = evaluate_strategy_pair(g, sigma, pi, args.state)
    _emit(out, args.format, [{"state": args.state, "probability": p}])


def cmd_simulate(args, out):
    g = parse_game(_read(args.game))
    sigma, pi = _strategy_pair(args, g)
    cfg = SimConfig(args.replicas, args.max_steps, args.seed, args.confidence)
    est = estimate_reach(g, sigma, pi, args.state, cfg)
    _emit(out, args.format, [{
        "estimate": est.estimate,
        "half_width": est.half_width,
        "replicas": est.replicas,
        "truncated_fraction": est.truncated_fraction,
    }])


def cmd_threshold(args, out):
    g = parse_game(_read(args.game))
    verdict = threshold_winner(g, ThresholdQuery(args.state, args.nu, args.relation), _config(args))
    if args.format == "tsv":
        out.write(verdict.line() + "\n")
    else:
        out.write("\n".join(verdict.line().split()) + "\n")


def cmd_oc(args, out):
    a: OCAutomaton = parse_oc(_read(args.automaton))
    cfg = _config(args)
    if args.action == "solve":
        b = termination_bounds(a, args.cap, cfg)
        _emit(out, args.format, (
            {"control": c, "counter": n, "lower": lo, "upper": hi} for c, n, lo, hi in b.rows()
        ))
    elif args.action == "limits":
        rep = limit_values(a, args.limit_tol, args.cap, cfg, workers=args.workers)
        _emit(out, args.format, (
            {"control": c, "limit": lim, "stable": st} for c, lim, st in rep.rows()
        ))
    else:
        verdict = check_corollary_oc(a, args.limit_tol, args.cap, cfg)
        _emit(out, args.format, (
            {"control": c, "limit": lim, "stable": c not in verdict.inconclusive}
            for c, lim in verdict.limits.items()
        ))
        if args.format == "tsv":
            out.write(verdict.line() + "\n")
        else:
            out.write(f"\nverdict={str(verdict.holds).lower()}\n")
            if verdict.inconclusive:
                out.write(f"inconclusive={','.join(verdict.inconclusive)}\n")


def cmd_examples(args, out):
    model = ExampleSpec(args.example, depth=args.depth).build()
    if isinstance(model, OCAutomaton):
        out.write(format_oc(model))
    else:
        out.write(format_game(model))


# --- argument parsing --------------------------------------------------------


def _probability(text: str) -> Fraction:
    try:
        x = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0 <= x <= 1:
        raise argparse.ArgumentTypeError("threshold must lie in [0, 1]")
    return x


def _positive(kind):
    def conv(text):
        try:
            x = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}")
        if not x > 0:
            raise argparse.ArgumentTypeError("must be positive")
        return x
    return conv


def _confidence(text):
    x = _positive(float)(text)
    if not x < 1:
        raise argparse.ArgumentTypeError("confidence must lie in (0, 1)")
    return x


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("tsv", "lines"), default="tsv")
    common.add_argument("--tol", type=_positive(float), default=DEFAULT_TOL,
                        help="value-iteration residual tolerance")
    common.add_argument("--max-iter", type=_positive(int), default=10_000_000)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="stochreach", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="game values by value iteration")
    s.add_argument("game")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("qualitative", parents=[common], help="list the safe states")
    s.add_argument("game")
    s.set_defaults(func=cmd_qualitative)

    s = sub.add_parser("strategy", parents=[common], help="optimal strategy for one player")
    s.add_argument("player", choices=("min", "max"))
    s.add_argument("game")
    s.set_defaults(func=cmd_strategy)

    for name, func, helptext in (
        ("evaluate", cmd_evaluate, "exact probability under a strategy pair"),
        ("simulate", cmd_simulate, "Monte Carlo estimate under a strategy pair"),
    ):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("game")
        s.add_argument("sigma", help="Max strategy file")
        s.add_argument("pi", help="Min strategy file")
        s.add_argument("state")
        s.set_defaults(func=func)
        if name == "simulate":
            s.add_argument("--replicas", type=_positive(int), default=10_000)
            s.add_argument("--seed", type=int, default=0)
            s.add_argument("--max-steps", type=_positive(int), default=10_000)
            s.add_argument("--confidence", type=_confidence, default=0.99)

    s = sub.add_parser("threshold", parents=[common], help="who wins Pr >= nu or Pr > nu")
    s.add_argument("game")
    s.add_argument("state")
    s.add_argument("nu", type=_probability)
    s.add_argument("relation", choices=("ge", "gt"))
    s.set_defaults(func=cmd_threshold)

    s = sub.add_parser("oc", parents=[common], help="one-counter automaton analyses")
    s.add_argument("action", choices=("solve", "limits", "check"))
    s.add_argument("automaton")
    s.add_argument("--cap", type=_positive(int), default=DEFAULT_CAP,
                   help="counter cap (largest cap for limits and check)")
    s.add_argument("--limit-tol", type=_positive(float), default=DEFAULT_LIMIT_TOL,
                   help="stabilization tolerance for limit estimates")
    s.add_argument("--workers", type=_positive(int), default=1)
    s.set_defaults(func=cmd_oc)

    s = sub.add_parser("examples", help="write a built-in example model")
    s.add_argument("verb", choices=("emit",))
    s.add_argument("example", choices=("fig1", "fig2", "solvency"))
    s.add_argument("--depth", type=_positive(int), default=10, help="depth of the fig1 game")
    s.set_defaults(func=cmd_examples, format="tsv", verbose=False)
    return p


def run_cli(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=err)
    try:
        args.func(args, out)
    except (ReachError, _Fail, OSError, ValueError) as exc:
        err.write(f"stochreach: error: {exc}\n")
        return 1
    return 0


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
