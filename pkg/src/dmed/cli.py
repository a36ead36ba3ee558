"""Command-line entry point: ``dmed <command> ...``.

Exit codes: 0 success, 1 runtime or property failure, 2 bad input.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .bounds import InfeasibleParameterError, optimize_bound_params, regret_bound
from .config import ConfigError, load_document, parse_arms, parse_experiment, parse_ldp
from .divergence import solve_nu_star
from .empirical import EmpiricalDist
from .simulation import run_experiment, verify_lower_deviation, verify_upper_deviation

SCHEMA_VERSION = 1


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default)


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_simulate(args) -> int:
    try:
        doc = load_document(args.config)
        config = parse_experiment(doc)
    except ConfigError as exc:
        return _fail(2, str(exc))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary, records = run_experiment(config, workers=args.workers)
    K = config.n_arms
    with open(out / "regret.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["replication", "checkpoint_n", "cum_pseudo_regret"] + [f"T_{k + 1}" for k in range(K)])
        for rec in records:
            for n, reg, counts in zip(rec.checkpoints, rec.regret, rec.counts):
                w.writerow([rec.replication, n, fmt(reg)] + counts)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "seed": config.seed,
        "config": doc,
        "summary": summary.to_dict(),
    }
    (out / "summary.json").write_text(_dump(payload) + "\n")
    return 0


def cmd_bound(args) -> int:
    try:
        truth = parse_arms(load_document(args.config))
    except ConfigError as exc:
        return _fail(2, str(exc))
    i = args.arm - 1
    try:
        if args.epsilon is not None and args.delta is not None:
            rep = regret_bound(truth, i, args.n, args.epsilon, args.delta, args.r)
            chosen = "override"
        elif args.epsilon is None and args.delta is None:
            _, _, rep = optimize_bound_params(truth, i, args.n, args.r)
            chosen = "optimized"
        else:
            return _fail(2, "give both --epsilon and --delta, or neither")
    except InfeasibleParameterError as exc:
        return _fail(2, f"infeasible parameters: {exc}")
    d = rep.to_dict()
    d["arm_index"] = args.arm
    d["components"]["optimal_arm_argmin"] += 1
    d["params_source"] = chosen
    d["schema_version"] = SCHEMA_VERSION
    print(_dump(d))
    return 0


def cmd_verify_dinf(args) -> int:
    from .checks import run_all

    if args.trials < 1:
        return _fail(2, "trials must be >= 1")
    results = run_all(args.trials, args.seed)
    ok = True
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} {res.name} trials={res.trials} worst={res.worst:.3e}")
        for line in res.failures:
            print(f"  failing instance: {line}")
        ok &= res.passed
    return 0 if ok else 1


def cmd_verify_ldp(args) -> int:
    try:
        doc = load_document(args.config) if args.config else {}
        ldp = parse_ldp(doc)
    except ConfigError as exc:
        return _fail(2, str(exc))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for k, cell in enumerate(ldp["cells"]):
        verify = verify_lower_deviation if cell["kind"] == "lower" else verify_upper_deviation
        try:
            rows += verify(cell["model"], float(cell["mu"]), cell["t"], cell["thresholds"], ldp["trials"], seed=ldp["seed"] + k)
        except ValueError as exc:
            return _fail(2, f"ldp.cells[{k}]: {exc}")
    with open(out / "ldp.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "kind", "mu", "t", "threshold", "empirical_freq", "bound", "slack", "pass"])
        for r in rows:
            w.writerow([repr(r.model), r.kind, fmt(r.mu), r.t, fmt(r.threshold), fmt(r.frequency), fmt(r.bound), fmt(r.slack), int(r.passed)])
    failed = [r for r in rows if not r.passed]
    print(f"{len(rows) - len(failed)}/{len(rows)} cells within bound + 3 standard errors")
    for r in failed:
        print(f"FAIL {r.model!r} {r.kind} t={r.t} threshold={r.threshold} freq={r.frequency} bound={r.bound}")
    return 0 if not failed else 1


def cmd_show_index(args) -> int:
    path = Path(args.samples)
    if not path.is_file():
        return _fail(2, f"samples file not found: {path}")
    F = EmpiricalDist()
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            x = float(line)
        except ValueError:
            return _fail(2, f"line {lineno}: not a number: {line!r}")
        if not x <= 1.0:
            return _fail(2, f"line {lineno}: sample {line} exceeds 1")
        F.push(x)
    if F.total_weight == 0:
        return _fail(2, "no samples")
    if not args.mu < 1.0:
        return _fail(2, "mu must be < 1")
    sol = solve_nu_star(F, args.mu)
    print(_dump({
        "schema_version": SCHEMA_VERSION,
        "n_samples": int(F.total_weight),
        "mean": F.mean(),
        "mu": args.mu,
        "dinf": sol.dinf,
        "nu_star": sol.nu_star,
        "at_boundary": sol.at_boundary,
    }))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dmed", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run seeded replications and write regret.csv, summary.json")
    s.add_argument("config")
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int, default=None, help="default: $DMED_WORKERS or 1")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bound", help="finite-time bound on E[T_i(n)] as JSON")
    b.add_argument("config")
    b.add_argument("--arm", type=int, required=True, help="1-based arm index")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--epsilon", type=float)
    b.add_argument("--delta", type=float)
    b.add_argument("--r", type=float, default=0.1)
    b.set_defaults(func=cmd_bound)

    v = sub.add_parser("verify-dinf", help="randomized checks of the D_inf solver")
    v.add_argument("--trials", type=int, default=200)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify_dinf)

    l = sub.add_parser("verify-ldp", help="Monte Carlo check of the deviation bounds; writes ldp.csv")
    l.add_argument("config", nargs="?")
    l.add_argument("--out", required=True)
    l.set_defaults(func=cmd_verify_ldp)

    i = sub.add_parser("show-index", help="D_inf of a sample file at level mu")
    i.add_argument("samples")
    i.add_argument("--mu", type=float, required=True)
    i.set_defaults(func=cmd_show_index)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
