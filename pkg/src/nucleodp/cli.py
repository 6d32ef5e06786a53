"""Command-line front end: ``nucleo solve | leastcore | min-excess | validate | verify``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .games.bmatching import BMatchingGame
from .games.decomposition import validate_decomposition
from .hyperdp import HypergraphError, dump, evaluate, no_common_descendants, validate
from .io import InstanceError, dumps, load_instance, members, nucleolus_report, parse_allocation, rationals
from .nucleolus import NoImputation, SolverOptions, brute_force_nucleolus, compute_nucleolus, least_core
from .ratmath import format_rational
from .subspace import PRIME_POLICIES

EXIT_OK, EXIT_INPUT, EXIT_MISMATCH = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    input_path: str
    trace_cuts: bool = False
    dump_dp: bool = False
    brute_force_max_n: int = 8
    width_budget: int | None = None
    allocation: str | None = None
    timing: bool = False
    prime_policy: str = "factorial"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nucleo", description="Exact nucleolus of compact cooperative games.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--trace-cuts", action="store_true", help="log every separated cut to stderr")
    common.add_argument("--dump-dp", action="store_true", help="dump the min-excess DP to stderr")
    common.add_argument("--brute-force-max-n", type=int, default=8)
    common.add_argument("--width-budget", type=int, default=None,
                        help="reject tree decompositions wider than this")
    common.add_argument("--timing", action="store_true", help="include wall time in reports")
    common.add_argument("--prime-policy", choices=PRIME_POLICIES, default="factorial")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "leastcore", "validate"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("input_path")
    p = sub.add_parser("min-excess", parents=[common])
    p.add_argument("input_path")
    p.add_argument("--allocation", required=True, help='JSON list of rationals, e.g. \'["1/3","1/3","1/3"]\'')
    p = sub.add_parser("verify", parents=[common])
    p.add_argument("input_path", help="instance file or directory of *.json instances")
    return parser


def _options(cfg: RunConfig) -> SolverOptions:
    return SolverOptions(prime_policy=cfg.prime_policy)


def _dump(game, x) -> None:
    F = game.build_min_excess_dp(x, "admissible")
    for line in dump(F):
        print(line, file=sys.stderr)


def _solve(cfg: RunConfig, out) -> int:
    game = load_instance(cfg.input_path, cfg.width_budget)
    result = compute_nucleolus(game, _options(cfg))
    if cfg.dump_dp:
        _dump(game, result.allocation)
    print(dumps(nucleolus_report(result, cfg.timing)), file=out)
    return EXIT_OK


def _leastcore(cfg: RunConfig, out) -> int:
    game = load_instance(cfg.input_path, cfg.width_budget)
    lc = least_core(game, _options(cfg))
    if cfg.dump_dp:
        _dump(game, lc.allocation)
    report = {"epsilon": format_rational(lc.epsilon), "allocation": rationals(lc.allocation),
              "stats": {"cuts": lc.cuts, "oracle_calls": lc.oracle_calls}}
    print(dumps(report), file=out)
    return EXIT_OK


def _min_excess(cfg: RunConfig, out) -> int:
    game = load_instance(cfg.input_path, cfg.width_budget)
    x = parse_allocation(cfg.allocation, game.n)
    F = game.build_min_excess_dp(x, "admissible")
    if cfg.dump_dp:
        for line in dump(F):
            print(line, file=sys.stderr)
    ev = evaluate(F)
    if ev is None:
        report = {"status": "infeasible"}
    else:
        sol = F.g.apply(ev.witness.arcs)
        coalition = [int(sol[i]) for i in game.coalition_coordinates]
        report = {"status": "optimal", "coalition": members(coalition),
                  "excess": format_rational(-ev.value)}
    print(dumps(report), file=out)
    return EXIT_OK


def _validate(cfg: RunConfig, out) -> int:
    game = load_instance(cfg.input_path, None)
    report: dict = {"type": type(game).__name__}
    if isinstance(game, BMatchingGame):
        td = game.tree_decomposition()
        rep = validate_decomposition(game.n, game.edge_pairs, td)
        report["decomposition"] = {"valid": rep.valid, "width": rep.width,
                                   "given": game.decomposition is not None,
                                   "violations": rep.violations}
        if cfg.width_budget is not None and rep.width > cfg.width_budget:
            report["decomposition"]["violations"].append(
                f"width {rep.width} exceeds budget {cfg.width_budget}")
            print(dumps(report), file=out)
            return EXIT_INPUT
    F = game.build_min_excess_dp([Fraction(0)] * game.n, "admissible")
    try:
        vr = validate(F.hypergraph) if F.hypergraph.starts else None
        report["dp"] = {
            "vertices": F.hypergraph.vertex_count,
            "arcs": len(F.hypergraph.arcs),
            "max_heads": F.hypergraph.max_heads,
            "acyclic": True,
            "start_consistency": vr is None or vr.start_consistency,
            "reachability": vr is None or vr.reachability,
            "no_common_descendants": no_common_descendants(F.hypergraph),
        }
    except HypergraphError as exc:
        report["dp"] = {"error": str(exc)}
        print(dumps(report), file=out)
        return EXIT_INPUT
    print(dumps(report), file=out)
    return EXIT_OK


def _verify(cfg: RunConfig, out) -> int:
    path = Path(cfg.input_path)
    if path.is_dir():
        files = sorted(path.glob("*.json"))
        if not files:
            raise InstanceError(f"no *.json instances in {path}")
    elif path.exists():
        files = [path]
    else:
        raise InstanceError(f"no such file or directory: {path}")
    rows = []
    mismatches = 0
    for f in files:
        game = load_instance(f, cfg.width_budget)
        entry = {"instance": f.name, "n": game.n}
        if game.n > cfg.brute_force_max_n:
            entry["status"] = "skipped"
            rows.append(entry)
            continue
        got = compute_nucleolus(game, _options(cfg)).allocation
        want = brute_force_nucleolus(game.n, game.explicit_table())
        entry["allocation"] = rationals(got)
        if tuple(got) == tuple(want):
            entry["status"] = "match"
        else:
            entry["status"] = "mismatch"
            entry["brute_force"] = rationals(want)
            mismatches += 1
        rows.append(entry)
    summary = {"instances": rows, "checked": sum(r["status"] != "skipped" for r in rows),
               "mismatches": mismatches}
    print(dumps(summary), file=out)
    return EXIT_MISMATCH if mismatches else EXIT_OK


COMMANDS = {"solve": _solve, "leastcore": _leastcore, "min-excess": _min_excess,
            "validate": _validate, "verify": _verify}


def run(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    if cfg.trace_cuts:
        logger = logging.getLogger("nucleodp.cuts")
        if not logger.handlers:
            handler = logging.StreamHandler(sys.stderr)
            handler.setFormatter(logging.Formatter("%(message)s"))
            logger.addHandler(handler)
        logger.setLevel(logging.INFO)
    try:
        return COMMANDS[cfg.command](cfg, out)
    except (InstanceError, NoImputation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:  # game-level limits such as state budgets
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(
        command=args.command,
        input_path=args.input_path,
        trace_cuts=args.trace_cuts,
        dump_dp=args.dump_dp,
        brute_force_max_n=args.brute_force_max_n,
        width_budget=args.width_budget,
        allocation=getattr(args, "allocation", None),
        timing=args.timing,
        prime_policy=args.prime_policy,
    )
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
