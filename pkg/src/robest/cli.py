"""Command-line entry point.

Subcommands::

    robest generate --config cfg.json --out DIR [--seed N]
        Emit the configured instance to disk: pose graphs as .g2o, point
        problems as .npz (arrays, ground truth, labels).  The config is the
        experiment schema's "problem" object plus optional "outlier_rate".

    robest run --config cfg.json --out DIR [--seed N] [--threads N]
        Run the Monte Carlo sweep described by the experiment config and
        write results.csv / summary.json.  --seed overrides base_seed.

    robest verify [--seed N]
        Seeded self-check suites: formulation-relationship clauses against
        exact enumeration, solver sub-optimality bounds against the oracle,
        and per-cycle cost bounds against full subset solves.  Prints one
        PASS/FAIL line per suite.

    robest bounds PATH.g2o [--out DIR]
        Per-loop-closure lower bounds and odometry-edge multiplicities for a
        pose graph file.

Exit codes: 0 success, 2 config/validation error, 1 runtime failure (a FAIL
line from `verify` is a runtime failure).
"""

import argparse
import itertools
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import generators
from .errors import ConfigError, InvalidBound, RobestError
from .experiment import (
    generate_instance,
    load_config,
    make_runner,
    run_experiment,
)
from .g2o import parse_g2o, write_g2o
from .oracle import min_norm_at_cardinality, suboptimality_bound, verify_relationship
from .posegraph import cycle_bounds, pgo_weighted_solve, pgo_cost
from .solvers import L2, residual_norm
from .stats import inlier_threshold


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc})") from exc


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

def _cmd_generate(args):
    raw = _load_json(args.config)
    problem = raw.get("problem", raw)  # bare problem objects accepted
    seed = args.seed if args.seed is not None else raw.get("seed", 0)
    rate = raw.get("outlier_rate", 0.0)
    instance = generate_instance(problem, seed)
    instance = generators.inject_outliers(instance, rate, seed + 1)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if instance.kind == generators.PGO:
        path = out / "instance.g2o"
        path.write_text(write_g2o(instance.problem))
    else:
        path = out / "instance.npz"
        arrays = {"outlier_labels": instance.outlier_labels}
        p = instance.problem
        if instance.kind == generators.LINEAR:
            arrays.update(A=p.A, y=p.y, x_true=instance.ground_truth)
        elif instance.kind == generators.REGISTRATION:
            R, t = instance.ground_truth
            arrays.update(source=p.source, target=p.target, R_true=R, t_true=t)
        else:
            s, R, t = instance.ground_truth
            arrays.update(model=p.model, image=p.image, s_true=s, R_true=R,
                          t_true=t)
        np.savez(path, **arrays)
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _cmd_run(args):
    raw = _load_json(args.config)
    if args.seed is not None:
        raw = dict(raw, base_seed=args.seed)
    config = load_config(raw)
    records = run_experiment(config, args.out, threads=args.threads)
    print(f"wrote {Path(args.out) / 'results.csv'} ({len(records)} rows)")
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _outlier_linear(m, seed):
    instance = generators.gen_linear(m, 1, 0.05, seed)
    return generators.inject_outliers(instance, 0.3, seed + 10_000)


def _suite_relationship(seed, count=20):
    epsilon = inlier_threshold(0.05, 1)
    failures = []
    for k in range(count):
        instance = _outlier_linear(8, seed + k)
        report = verify_relationship(instance.problem, epsilon)
        if not report.all_passed:
            bad = [c.name for c in report.clauses if c.checked and not c.passed]
            failures.append(f"seed {seed + k}: {bad}")
    return failures


def _suite_suboptimality(seed, count=20):
    sigma = 0.05
    failures = []
    for k in range(count):
        instance = _outlier_linear(10, seed + k)
        problem = instance.problem
        for entry in ({"name": "adapt"}, {"name": "gnc"}, {"name": "greedy"}):
            runner = make_runner(entry, sigma, problem.residual_dof,
                                 problem.measurement_count)
            try:
                result = runner(problem)
            except RobestError:
                continue
            n_out = problem.measurement_count - len(result.inlier_set)
            if n_out == 0:
                continue
            full = problem.weighted_solve(np.ones(problem.measurement_count))
            r_empty = residual_norm(problem.residuals(full), L2)
            keep = np.asarray(sorted(result.inlier_set), dtype=int)
            r_o = residual_norm(problem.residuals(result.estimate)[keep], L2)
            try:
                chi = suboptimality_bound(r_empty, r_o)
            except InvalidBound:
                failures.append(f"seed {seed + k} {entry['name']}: "
                                "rejections increased the residual")
                continue
            r_best, _ = min_norm_at_cardinality(problem, n_out)
            true_ratio = (r_o - r_best) / (r_empty - r_best)
            if chi < true_ratio - 1e-9:
                failures.append(f"seed {seed + k} {entry['name']}: "
                                f"chi {chi:.6g} < ratio {true_ratio:.6g}")
    return failures


def _suite_cycle_bounds(seed, count=5, tol=1e-6):
    failures = []
    for k in range(count):
        instance = generators.random_chain_se2(seed + k)
        graph = instance.problem
        cb = cycle_bounds(graph)
        n_lc = len(graph.loop_closures)
        for reject in itertools.product((0, 1), repeat=n_lc):
            weights = 1.0 - np.asarray(reject, dtype=float)
            poses = pgo_weighted_solve(graph, lc_weights=weights)
            kept = [e for e, r in zip(graph.loop_closures, reject) if not r]
            cost = pgo_cost(list(graph.odometry) + kept, poses)
            floor = sum(b for b, r in zip(cb.bounds, reject) if not r)
            if cost < floor - tol:
                failures.append(f"seed {seed + k} reject {reject}: "
                                f"cost {cost:.6g} < bound {floor:.6g}")
    return failures


def _cmd_verify(args):
    seed = args.seed if args.seed is not None else 0
    suites = (
        ("relationship-clauses", _suite_relationship),
        ("suboptimality-bounds", _suite_suboptimality),
        ("cycle-bounds", _suite_cycle_bounds),
    )
    failed = False
    for name, suite in suites:
        failures = suite(seed)
        if failures:
            failed = True
            print(f"FAIL {name}: {len(failures)} violation(s); first: {failures[0]}")
        else:
            print(f"PASS {name}")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

def _cmd_bounds(args):
    graph = parse_g2o(Path(args.path).read_text())
    cb = cycle_bounds(graph)
    for edge, bound in zip(graph.loop_closures, cb.bounds):
        print(f"loop {edge.i} {edge.j} b_k {bound:.17g}")
    for edge, mult in zip(graph.odometry, cb.multiplicities):
        shown = "inf" if math.isinf(mult) else str(int(mult))
        print(f"odometry {edge.i} {edge.j} multiplicity {shown}")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        payload = {
            "bounds": [{"i": int(e.i), "j": int(e.j), "b_k": float(b)}
                       for e, b in zip(graph.loop_closures, cb.bounds)],
            "multiplicities": [
                {"i": int(e.i), "j": int(e.j),
                 "n_ij": None if math.isinf(m) else int(m)}
                for e, m in zip(graph.odometry, cb.multiplicities)],
        }
        (out / "bounds.json").write_text(json.dumps(payload, indent=2) + "\n")
        print(f"wrote {out / 'bounds.json'}")
    return 0


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(prog="robest",
                                     description="robust estimation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="emit a synthetic instance to disk")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="out")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("run", help="run a Monte Carlo experiment sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="out")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("verify", help="run the seeded self-check suites")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("bounds", help="per-cycle bounds for a g2o file")
    p.add_argument("path")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_bounds)
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
