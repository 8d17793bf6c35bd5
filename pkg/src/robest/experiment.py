"""Monte Carlo experiment harness.

A JSON config describes a problem generator, an algorithm list, an outlier
rate sweep and a trial count::

    {
      "problem":  {"kind": "registration", "count": 100, "noise_sigma": 0.01},
      "algorithms": [{"name": "adapt"}, {"name": "gnc"},
                     {"name": "greedy", "norm": "linf"}],
      "outlier_rates": [0.0, 0.2, 0.4, 0.6, 0.8],
      "trials": 25,
      "base_seed": 0
    }

Problem kinds and their parameters:

==============  =============================================================
linear          m, n, noise_sigma
registration    count, noise_sigma
shape           count, noise_sigma, s (optional scale)
grid2d          rows, cols, noise_sigma_t, noise_sigma_r, loop_closure_prob
sphere3d        levels, points_per_level, noise
g2o             path (file on disk; metrics need stored ground truth)
==============  =============================================================

Algorithm entries take a `name` from {adapt, greedy, gnc, adapt_mint,
gnc_mint}, an optional display `label`, and optional parameter overrides;
anything not overridden is derived from the noise model: ``epsilon =
sigma*sqrt(chi2_inv(0.99, d))``, the ADAPT thresholds from the same quantile
recipes, and GNC-MinT's noise bounds as ``3*epsilon`` and ``epsilon/3``.
Pose-graph residuals are whitened by their information matrices, so their
default sigma is 1; point problems default to the generator's noise_sigma.

Trial (gen, inject) seeds are spawned from ``SeedSequence([base_seed,
rate_index, trial_index])`` so extending the rate list or trial count never
reshuffles existing trials.  The same instance is shared by every algorithm
at a given (rate, trial) cell.  Output is a CSV of per-trial rows (column
schema below) and a JSON summary of per-(algorithm, rate) means and medians;
both are deterministic apart from wall_time_s.
"""

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import generators
from .errors import ConfigError, InvalidBound, RobestError
from .g2o import parse_g2o
from .oracle import suboptimality_bound
from .posegraph import PoseGraphProblem
from .solvers import (
    L2,
    LINF,
    AdaptConfig,
    AdaptMintConfig,
    GncConfig,
    GncMintConfig,
    residual_norm,
    solve_adapt,
    solve_adapt_mint,
    solve_gnc_mint,
    solve_gnc_tls,
    solve_greedy,
)
from .metrics import metric_ate, metric_rotation_translation, metric_tp_fp, trajectory
from .stats import inlier_threshold, residual_norm_bound, sq_norm_change_bound

CSV_COLUMNS = ("algorithm", "rate", "trial", "seed", "rot_err_deg", "trans_err",
               "ate", "tp_rate", "fp_rate", "wall_time_s", "iterations",
               "converged", "chi_bound")

_POINT_KINDS = {"linear", "registration", "shape"}
_PGO_KINDS = {"grid2d", "sphere3d", "g2o"}
_KIND_DOF = {"linear": 1, "registration": 3, "shape": 2, "grid2d": 3, "sphere3d": 6}

_REQUIRED_PARAMS = {
    "linear": ("m", "n", "noise_sigma"),
    "registration": ("count", "noise_sigma"),
    "shape": ("count", "noise_sigma"),
    "grid2d": ("rows", "cols", "noise_sigma_t", "noise_sigma_r", "loop_closure_prob"),
    "sphere3d": ("levels", "points_per_level", "noise"),
    "g2o": ("path",),
}

_ALGORITHM_KEYS = {
    "greedy": {"norm", "bound"},
    "adapt": {"tau", "theta", "norm", "thr_discount", "samples_to_converge",
              "max_iterations"},
    "gnc": {"epsilon", "mu_update_factor", "max_iterations"},
    "adapt_mint": {"thr_discount", "samples_to_converge", "window_size",
                   "converg_thr", "max_iterations"},
    "gnc_mint": {"noise_up_bnd", "noise_low_bnd", "mu_update_factor",
                 "samples_to_converge", "max_iterations"},
}


@dataclass(frozen=True)
class ExperimentConfig:
    problem: dict
    algorithms: tuple
    outlier_rates: tuple
    trials: int
    base_seed: int


@dataclass(frozen=True)
class TrialRecord:
    """One CSV row; non-applicable metrics are nan."""

    algorithm: str
    rate: float
    trial: int
    seed: int
    rot_err_deg: float
    trans_err: float
    ate: float
    tp_rate: float
    fp_rate: float
    wall_time_s: float
    iterations: int
    converged: bool
    chi_bound: float

    def as_row(self):
        g = "%.17g"
        return ",".join([
            self.algorithm, g % self.rate, str(self.trial), str(self.seed),
            g % self.rot_err_deg, g % self.trans_err, g % self.ate,
            g % self.tp_rate, g % self.fp_rate, "%.6f" % self.wall_time_s,
            str(self.iterations), str(int(self.converged)), g % self.chi_bound,
        ])


# ---------------------------------------------------------------------------
# config validation
# ---------------------------------------------------------------------------

def _require(condition, field, reason):
    if not condition:
        raise ConfigError(f"{field}: {reason}")


def load_config(raw):
    """Validate a config dict; errors carry the offending field path."""
    _require(isinstance(raw, dict), "config", "must be a JSON object")
    for key in ("problem", "algorithms", "outlier_rates", "trials"):
        _require(key in raw, key, "missing required field")
    problem = raw["problem"]
    _require(isinstance(problem, dict), "problem", "must be an object")
    kind = problem.get("kind")
    _require(kind in _REQUIRED_PARAMS, "problem.kind",
             f"unknown kind {kind!r}; expected one of {sorted(_REQUIRED_PARAMS)}")
    for param in _REQUIRED_PARAMS[kind]:
        _require(param in problem, f"problem.{param}", "missing required field")
    if kind in _POINT_KINDS:
        sigma = problem.get("sigma", problem.get("noise_sigma"))
        _require(isinstance(sigma, (int, float)) and sigma > 0, "problem.sigma",
                 "a positive noise sigma is required (set problem.sigma when "
                 "noise_sigma is 0)")
    algorithms = raw["algorithms"]
    _require(isinstance(algorithms, list) and algorithms, "algorithms",
             "must be a non-empty list")
    for i, entry in enumerate(algorithms):
        _require(isinstance(entry, dict), f"algorithms[{i}]", "must be an object")
        name = entry.get("name")
        _require(name in _ALGORITHM_KEYS, f"algorithms[{i}].name",
                 f"unknown algorithm {name!r}; expected one of "
                 f"{sorted(_ALGORITHM_KEYS)}")
        allowed = _ALGORITHM_KEYS[name] | {"name", "label"}
        for key in entry:
            _require(key in allowed, f"algorithms[{i}].{key}",
                     f"unknown parameter for {name}")
    rates = raw["outlier_rates"]
    _require(isinstance(rates, list) and rates, "outlier_rates",
             "must be a non-empty list")
    for i, rate in enumerate(rates):
        _require(isinstance(rate, (int, float)) and 0.0 <= rate < 1.0,
                 f"outlier_rates[{i}]", "must lie in [0, 1)")
        if i:
            _require(rate > rates[i - 1], f"outlier_rates[{i}]",
                     "rates must be strictly increasing")
    trials = raw["trials"]
    _require(isinstance(trials, int) and trials >= 1, "trials",
             "must be an integer >= 1")
    base_seed = raw.get("base_seed", 0)
    _require(isinstance(base_seed, int) and base_seed >= 0, "base_seed",
             "must be a non-negative integer")
    return ExperimentConfig(problem=problem,
                            algorithms=tuple(algorithms),
                            outlier_rates=tuple(float(r) for r in rates),
                            trials=trials, base_seed=base_seed)


def trial_seeds(base_seed, rate_index, trial_index):
    """(generation seed, injection seed) for one experiment cell."""
    state = np.random.SeedSequence(
        [base_seed, rate_index, trial_index]).generate_state(2)
    return int(state[0]), int(state[1])


# ---------------------------------------------------------------------------
# instance production
# ---------------------------------------------------------------------------

def generate_instance(problem_cfg, seed):
    kind = problem_cfg["kind"]
    p = problem_cfg
    if kind == "linear":
        return generators.gen_linear(p["m"], p["n"], p["noise_sigma"], seed)
    if kind == "registration":
        return generators.gen_registration(p["count"], None, p["noise_sigma"], seed)
    if kind == "shape":
        return generators.gen_shape(p["count"], p.get("s", 1.0), None, None,
                                    p["noise_sigma"], seed)
    if kind == "grid2d":
        return generators.gen_grid_2d(p["rows"], p["cols"], p["noise_sigma_t"],
                                      p["noise_sigma_r"], p["loop_closure_prob"],
                                      seed)
    if kind == "sphere3d":
        return generators.gen_sphere_3d(p["levels"], p["points_per_level"],
                                        p["noise"], seed)
    if kind == "g2o":
        graph = parse_g2o(Path(p["path"]).read_text())
        labels = (graph.outlier_labels if graph.outlier_labels is not None
                  else np.zeros(len(graph.loop_closures), dtype=bool))
        return generators.LabeledInstance(generators.PGO, graph,
                                          graph.ground_truth, labels, seed,
                                          float(p.get("sigma", 1.0)))
    raise ConfigError(f"problem.kind: unknown kind {kind!r}")


def _noise_model(problem_cfg, instance):
    """(sigma, dof) governing residual magnitudes for this instance."""
    kind = problem_cfg["kind"]
    if kind == "g2o":
        dof = 3 if instance.problem.dim == 2 else 6
        return float(problem_cfg.get("sigma", 1.0)), dof
    if kind in _PGO_KINDS:
        return float(problem_cfg.get("sigma", 1.0)), _KIND_DOF[kind]
    return float(problem_cfg.get("sigma", problem_cfg["noise_sigma"])), _KIND_DOF[kind]


def make_runner(entry, sigma, dof, m):
    """Bind an algorithm config entry to a `problem -> RobustEstimate` callable."""
    name = entry["name"]
    epsilon = float(entry.get("epsilon", inlier_threshold(sigma, dof)))
    if name == "greedy":
        norm = entry.get("norm", L2)
        if "bound" in entry:
            bound = float(entry["bound"])
        else:
            bound = residual_norm_bound(sigma, dof)(m) if norm == L2 else epsilon
        return lambda problem: solve_greedy(problem, bound, norm=norm)
    if name == "adapt":
        cfg = AdaptConfig(
            tau=entry.get("tau", residual_norm_bound(sigma, dof)),
            theta=entry.get("theta", sq_norm_change_bound(sigma**2, dof)),
            norm=entry.get("norm", L2),
            thr_discount=entry.get("thr_discount", 0.99),
            samples_to_converge=entry.get("samples_to_converge", 3),
            max_iterations=entry.get("max_iterations", 1000))
        return lambda problem: solve_adapt(problem, cfg)
    if name == "gnc":
        cfg = GncConfig(epsilon=epsilon,
                        mu_update_factor=entry.get("mu_update_factor", 1.4),
                        max_iterations=entry.get("max_iterations", 1000))
        return lambda problem: solve_gnc_tls(problem, cfg)
    if name == "adapt_mint":
        cfg = AdaptMintConfig(
            thr_discount=entry.get("thr_discount", 0.99),
            samples_to_converge=entry.get("samples_to_converge", 5),
            window_size=entry.get("window_size", 3),
            converg_thr=entry.get("converg_thr", 1e-4),
            max_iterations=entry.get("max_iterations", 1000))
        return lambda problem: solve_adapt_mint(problem, cfg)
    if name == "gnc_mint":
        cfg = GncMintConfig(
            noise_up_bnd=float(entry.get("noise_up_bnd", 3.0 * epsilon)),
            noise_low_bnd=float(entry.get("noise_low_bnd", epsilon / 3.0)),
            mu_update_factor=entry.get("mu_update_factor", 1.96),
            samples_to_converge=entry.get("samples_to_converge", 2),
            max_iterations=entry.get("max_iterations", 1000))
        return lambda problem: solve_gnc_mint(problem, cfg)
    raise ConfigError(f"algorithms[].name: unknown algorithm {name!r}")


# ---------------------------------------------------------------------------
# per-trial evaluation
# ---------------------------------------------------------------------------

def _solver_problem(instance):
    if instance.kind == generators.PGO:
        return PoseGraphProblem(instance.problem)
    return instance.problem


def _accuracy(instance, estimate):
    rot = trans = ate = math.nan
    truth = instance.ground_truth
    if truth is None or estimate is None:
        return rot, trans, ate
    if instance.kind == generators.LINEAR:
        trans = float(np.linalg.norm(np.asarray(estimate) - np.asarray(truth)))
    elif instance.kind == generators.PGO:
        rot, trans = metric_rotation_translation(estimate, truth)
        if len(truth) >= 2:
            ate = metric_ate(trajectory(estimate), trajectory(truth))
    else:
        rot, trans = metric_rotation_translation(estimate, instance.ground_truth)
    return rot, trans, ate


def _chi_bound(problem, result):
    try:
        full = problem.weighted_solve(np.ones(problem.measurement_count))
        r_empty = residual_norm(problem.residuals(full), L2)
        keep = np.asarray(sorted(result.inlier_set), dtype=int)
        r_o = residual_norm(problem.residuals(result.estimate)[keep], L2)
        return suboptimality_bound(r_empty, r_o)
    except (InvalidBound, RobestError):
        return math.nan


def run_trial(instance, runner):
    """Solve one instance, returning (metrics dict, RobustEstimate or None)."""
    problem = _solver_problem(instance)
    start = time.perf_counter()
    try:
        result = runner(problem)
    except Exception:
        wall = time.perf_counter() - start
        return dict(rot_err_deg=math.nan, trans_err=math.nan, ate=math.nan,
                    tp_rate=math.nan, fp_rate=math.nan, wall_time_s=wall,
                    iterations=0, converged=False, chi_bound=math.nan), None
    wall = time.perf_counter() - start
    rot, trans, ate = _accuracy(instance, result.estimate)
    tp, fp = metric_tp_fp(result.inlier_set, instance.outlier_labels)
    iters = int(result.trace[-1].iteration) if result.trace else 0
    return dict(rot_err_deg=rot, trans_err=trans, ate=ate, tp_rate=tp,
                fp_rate=fp, wall_time_s=wall, iterations=iters,
                converged=bool(result.converged),
                chi_bound=_chi_bound(problem, result)), result


# ---------------------------------------------------------------------------
# the sweep
# ---------------------------------------------------------------------------

def _error_record(label, rate, trial, seed):
    return TrialRecord(label, rate, trial, seed, math.nan, math.nan, math.nan,
                       math.nan, math.nan, 0.0, 0, False, math.nan)


def run_experiment(config, out_dir, threads=1):
    """Run the sweep and write results.csv and summary.json under `out_dir`.

    Returns the list of TrialRecords in output order.  Per-trial failures
    (degenerate geometry, solver errors) become converged=0 rows with nan
    metrics; the sweep itself never aborts.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    cells = {}
    for ri, rate in enumerate(config.outlier_rates):
        for ti in range(config.trials):
            gen_seed, inject_seed = trial_seeds(config.base_seed, ri, ti)
            try:
                instance = generate_instance(config.problem, gen_seed)
                instance = generators.inject_outliers(instance, rate, inject_seed)
                cells[ri, ti] = (gen_seed, instance)
            except RobestError:
                cells[ri, ti] = (gen_seed, None)

    jobs = []
    for entry in config.algorithms:
        label = entry.get("label", entry["name"])
        for ri, rate in enumerate(config.outlier_rates):
            for ti in range(config.trials):
                jobs.append((label, entry, ri, rate, ti))

    def run_one(job):
        label, entry, ri, rate, ti = job
        seed, instance = cells[ri, ti]
        if instance is None:
            return _error_record(label, rate, ti, seed)
        try:
            sigma, dof = _noise_model(config.problem, instance)
            runner = make_runner(entry, sigma, dof,
                                 _solver_problem(instance).measurement_count)
            metrics, _ = run_trial(instance, runner)
        except Exception:
            return _error_record(label, rate, ti, seed)
        return TrialRecord(algorithm=label, rate=rate, trial=ti, seed=seed,
                           **metrics)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(run_one, jobs))
    else:
        records = [run_one(job) for job in jobs]

    csv_path = out_dir / "results.csv"
    csv_path.write_text("\n".join([",".join(CSV_COLUMNS)]
                                  + [r.as_row() for r in records]) + "\n")
    json_path = out_dir / "summary.json"
    json_path.write_text(json.dumps(summarize(records), indent=2, sort_keys=True)
                         + "\n")
    return records


_SUMMARY_FIELDS = ("rot_err_deg", "trans_err", "ate", "tp_rate", "fp_rate",
                   "wall_time_s", "chi_bound")


def _clean(value):
    return float(value) if math.isfinite(value) else None


def summarize(records):
    """Per-(algorithm, rate) means and medians, nan-aware."""
    groups = {}
    for r in records:
        groups.setdefault((r.algorithm, r.rate), []).append(r)
    out = []
    for (algorithm, rate), rows in sorted(groups.items()):
        entry = {"algorithm": algorithm, "rate": rate, "trials": len(rows),
                 "converged_rate": sum(r.converged for r in rows) / len(rows),
                 "mean": {}, "median": {}}
        for field in _SUMMARY_FIELDS:
            values = np.asarray([getattr(r, field) for r in rows])
            finite = values[np.isfinite(values)]
            entry["mean"][field] = _clean(float(finite.mean())) if finite.size else None
            entry["median"][field] = (_clean(float(np.median(finite)))
                                      if finite.size else None)
        out.append(entry)
    return out
