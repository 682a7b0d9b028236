"""Command-line driver: ``gnepconv {gen,solve,check,bench,oracle}``.

Exit codes: 0 ok/holds, 1 no equilibrium (certified), 2 input error,
3 check fails, 4 undecided or budget exhausted, 5 timeout.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import BenchConfig, generator_args, parse_type, run_benchmark
from .convexify import (FAILS, HOLDS, check_k_restrictive_closed, check_restrictive_closed,
                        check_zero_one_sufficiency, finite_game)
from .flowgame import CdfgInstance, GenerationError, generate_instance
from .io import FormatError, dumps_instance, load_any
from .nikaido import ALPHA, BETA
from .solvers import (BUDGET, GNE_FOUND, METHODS, NO_GNE, TIMEOUT, EnumerationCapExceeded, SolveConfig,
                      solve, solve_reformulation_exhaustive)

EXIT_OK = 0
EXIT_NO_GNE = 1
EXIT_INPUT = 2
EXIT_FAILS = 3
EXIT_UNDECIDED = 4
EXIT_TIMEOUT = 5

STATUS_EXIT = {GNE_FOUND: EXIT_OK, NO_GNE: EXIT_NO_GNE, BUDGET: EXIT_UNDECIDED, TIMEOUT: EXIT_TIMEOUT}


class InputError(Exception):
    pass


def _fmt(c):
    return str(c)


def _fmt_profile(x) -> str:
    return "(" + ", ".join("(" + ", ".join(_fmt(c) for c in b) + ")" for b in x.blocks) + ")"


def _plain_profile(x):
    return None if x is None else [[c if isinstance(c, int) else str(c) for c in b] for b in x.blocks]


def _write(out, text: str) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(path, want=None):
    try:
        obj = load_any(path)
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except FormatError as exc:
        raise InputError(f"{path}: {exc}") from None
    if want is not None and not isinstance(obj, want):
        raise InputError(f"{path}: expected a flow-game instance")
    return obj


# -- subcommands --------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.type:
        try:
            kw = generator_args(parse_type(args.type))
        except ValueError as exc:
            raise InputError(str(exc)) from None
    else:
        kw = {"n_nodes": args.nodes, "n_players": args.players,
              "source_mode": args.sources, "weight_mode": args.weights}
    try:
        inst = generate_instance(seed=args.seed, **kw)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    except GenerationError as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return EXIT_UNDECIDED
    _write(args.out, dumps_instance(inst))
    return EXIT_OK


def _solve_config(args, method=None) -> SolveConfig:
    try:
        return SolveConfig(method=method or args.method, penalized=args.penalized, alpha=args.alpha,
                           beta=args.beta, starts=args.starts, seed=args.seed,
                           time_limit=args.time_limit, enum_cap=args.enum_cap)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _report_result(res, args) -> int:
    print(f"status: {res.status}")
    if res.profile is not None:
        label = "equilibrium" if res.found else "best profile"
        print(f"{label}: {_fmt_profile(res.profile)}")
    if res.value is not None:
        print(f"value: {res.value}")
    if res.starts_used:
        print(f"starts used: {res.starts_used}")
    if res.message:
        print(res.message)
    if args.out:
        doc = {"status": res.status, "profile": _plain_profile(res.profile),
               "value": None if res.value is None else str(res.value),
               "starts_used": res.starts_used, "evaluations": res.evaluations, "message": res.message}
        Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return STATUS_EXIT[res.status]


def cmd_solve(args) -> int:
    inst = _load(args.instance, CdfgInstance)
    cfg = _solve_config(args)
    try:
        res = solve(inst, cfg)
    except EnumerationCapExceeded as exc:
        print(f"status: cap_exceeded\n{exc}")
        return EXIT_UNDECIDED
    return _report_result(res, args)


def cmd_oracle(args) -> int:
    inst = _load(args.instance, CdfgInstance)
    try:
        res = solve_reformulation_exhaustive(inst, args.enum_cap, stop_at_zero=not args.all,
                                             time_limit=args.time_limit or None)
    except EnumerationCapExceeded as exc:
        print(f"status: cap_exceeded\n{exc}")
        return EXIT_UNDECIDED
    print(f"profiles enumerated: {res.extra.get('profiles', 0)}")
    if args.all:
        for x in res.extra.get("zeros", []):
            print(f"zero: {_fmt_profile(x)}")
    return _report_result(res, args)


def _describe_witness(w) -> str:
    rivals = ", ".join("(" + ", ".join(_fmt(c) for c in b) + ")" for b in w.rivals)
    if w.j is None:
        return (f"player {w.i + 1}, rivals [{rivals}]: slice vertex {_fmt_profile(w.point)} "
                f"is not an original strategy profile")
    return (f"players i={w.i + 1}, j={w.j + 1}, rivals of j [{rivals}]: {_fmt_profile(w.point)} is "
            f"prescribed by player {w.i + 1} but outside conv(X_{w.j + 1})")


def cmd_check(args) -> int:
    obj = _load(args.file)
    game = finite_game(obj) if isinstance(obj, CdfgInstance) else obj
    if args.check == "zero-one":
        ok = check_zero_one_sufficiency(game)
        print(f"zero-one sufficiency: {'holds' if ok else 'fails'}")
        return EXIT_OK if ok else EXIT_FAILS
    if args.check == "krc":
        report = check_k_restrictive_closed(game)
    else:
        report = check_restrictive_closed(game, samples=args.samples, seed=args.seed)
    print(f"{args.check}: {report.verdict} ({report.method})")
    if report.witness is not None:
        print("witness: " + _describe_witness(report.witness))
    for k, v in sorted(report.evidence.items()):
        print(f"  {k}: {v}")
    return {HOLDS: EXIT_OK, FAILS: EXIT_FAILS}.get(report.verdict, EXIT_UNDECIDED)


def cmd_bench(args) -> int:
    try:
        cfg = BenchConfig.load(args.config)
    except FileNotFoundError:
        raise InputError(f"{args.config}: no such file") from None
    except (ValueError, TypeError) as exc:
        raise InputError(f"{args.config}: {exc}") from None
    if args.workers:
        cfg.workers = args.workers
    out = args.out or "bench.csv"
    records, agg = run_benchmark(cfg, out)
    for row in agg:
        mean = row["time"] or "-"
        print(f"{row['type']:>14} {row['method']:<26} pen={row['penalized']} "
              f"gne={row['successes']}/{row['runs']} mean_time={mean}")
    print(f"wrote {len(records)} runs to {out}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def _add_solver_flags(p, method=True):
    if method:
        p.add_argument("--method", choices=METHODS, default="valpha")
    p.add_argument("--penalized", action="store_true", help="multiply the gap by the sin^2 penalizer")
    p.add_argument("--alpha", type=float, default=ALPHA)
    p.add_argument("--beta", type=float, default=BETA)
    p.add_argument("--starts", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time-limit", type=float, default=60.0)
    p.add_argument("--enum-cap", type=int, default=10 ** 6)
    p.add_argument("--out", help="write a JSON result here")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gnepconv", description="Equilibria of discrete flow games.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random flow-game instance")
    p.add_argument("--type", help="instance type 'players,nodes,a,b', e.g. 2,10,s,1")
    p.add_argument("--nodes", type=int, default=10)
    p.add_argument("--players", type=int, default=2)
    p.add_argument("--sources", choices=("single", "multi"), default="single")
    p.add_argument("--weights", choices=("unit", "random"), default="unit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="search for an integral equilibrium")
    p.add_argument("instance")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="exhaustive reformulation oracle")
    p.add_argument("instance")
    p.add_argument("--all", action="store_true", help="enumerate every equilibrium")
    _add_solver_flags(p, method=False)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("check", help="structural checks on a finite game or small instance")
    p.add_argument("file")
    p.add_argument("--check", choices=("krc", "rc", "zero-one"), required=True)
    p.add_argument("--samples", type=int, default=200, help="sampled slice vertices for large blocks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bench", help="run a benchmark sweep from a JSON config")
    p.add_argument("config")
    p.add_argument("--out", help="CSV output (default bench.csv)")
    p.add_argument("--workers", type=int, default=0)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
