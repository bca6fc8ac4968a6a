"""Command-line entry point.

Exit codes: 0 run complete or verdict pass, 2 verdict fail, 3 configuration
error, 4 solver fault.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import load_config
from .driver import (
    run_branch,
    run_direction,
    run_eig,
    run_hypotheses,
    run_verify,
    write_json,
)
from .errors import ConfigurationError, HypothesisViolation, SolverError

EXIT_OK = 0
EXIT_FAIL = 2
EXIT_CONFIG = 3
EXIT_SOLVER = 4

COMMANDS = ("eig", "verify", "branch", "direction", "hypotheses")


def _u64(text: str) -> int:
    val = int(text, 0)
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return val


def _positive(text: str) -> int:
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError("mesh scale must be >= 1")
    return val


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nonlocal-logistic",
        description="Positive steady states of a nonlocal logistic system with advection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "eig": "principal eigenvalues, coupling eigen-data and the threshold t1",
        "verify": "sweep t across the threshold and judge existence/nonexistence",
        "branch": "continue the positive branch from (t1, 0) and write a CSV",
        "direction": "compare the onset direction with the closed-form limits",
        "hypotheses": "check kernel, reaction and advection hypotheses",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True, type=Path, help="scenario TOML file")
        p.add_argument("--out", type=Path, default=None, help="output directory (default: output.dir of the config)")
        p.add_argument("--seed", type=_u64, default=None, help="seed for random fields")
        p.add_argument("--mesh-scale", type=_positive, default=1, help="multiply every grid dimension by k")
    return parser


def _kind_for(command: str, path: Path) -> str | None:
    if command != "hypotheses":
        return command
    # keep an identity-check file's kind; anything else runs as hypotheses
    return None if "identity-check" in path.read_text() else "hypotheses"


def _execute(args) -> int:
    cfg = load_config(args.config, mesh_scale=args.mesh_scale, seed=args.seed, kind=_kind_for(args.command, args.config))
    out = Path(args.out) if args.out is not None else Path(cfg.out_dir)
    stem = cfg.name
    if args.command == "eig":
        rep = run_eig(cfg)
        write_json(out / f"{stem}.eig.json", rep)
        print(f"{stem}: {rep['threshold_eigenvalue']} = {rep[rep['threshold_eigenvalue']]:.10g}, "
              f"lambda_A = {rep['lambda_A']:.10g}, t1 = {rep['t1']:.10g}")
        return EXIT_OK
    if args.command == "verify":
        rep = run_verify(cfg)
        write_json(out / f"{stem}.verify.json", rep.as_dict())
        for s in rep.sweep:
            print(f"t/t1 = {s.multiplier:g}: {s.outcome} (amplitude {s.amplitude:.6g})")
        if rep.t_one is not None:
            print(f"t = 1: {rep.t_one.outcome} (expected {rep.t_one_expected})")
        print(f"verdict: {rep.verdict}")
        for msg in rep.failures:
            print(f"  {msg}")
        return EXIT_OK if rep.passed else EXIT_FAIL
    if args.command == "branch":
        _, csv_text, summary = run_branch(cfg)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"{stem}.branch.csv", "w", newline="\n") as fh:
            fh.write(csv_text)
        write_json(out / f"{stem}.branch.json", summary)
        print(f"{summary['points']} points, {summary['direction']}, stop: {summary['stop_reason']}")
        return EXIT_OK
    if args.command == "direction":
        rep, text, _ = run_direction(cfg)
        write_json(out / f"{stem}.direction.json", rep.as_dict())
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"{stem}.direction.txt", "w", newline="\n") as fh:
            fh.write(text)
        sys.stdout.write(text)
        return EXIT_FAIL if rep.verdict == "inconsistent" else EXIT_OK
    rep = run_hypotheses(cfg)
    write_json(out / f"{stem}.hypotheses.json", rep)
    for c in rep["checks"]:
        print(f"{'pass' if c['passed'] else 'FAIL'}  {c['name']}")
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _execute(args)
    except (ConfigurationError, HypothesisViolation) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver fault: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
