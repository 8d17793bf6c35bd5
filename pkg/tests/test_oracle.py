"""Exact enumeration oracles and the formulation-relationship checks."""

from itertools import combinations

import numpy as np
import pytest

from robest.errors import InvalidBound, TooLarge
from robest.generators import gen_linear, inject_outliers
from robest.linear import LinearProblem
from robest.oracle import (
    min_norm_at_cardinality,
    oracle_enumerate,
    suboptimality_bound,
    verify_relationship,
)
from robest.stats import inlier_threshold

EPS = 2.58


# ---------------------------------------------------------------------------
# enumeration on the toy instance
# ---------------------------------------------------------------------------

def test_mts_keeps_everything(toy):
    sol = oracle_enumerate(toy, "mts", np.sqrt(11.35))
    assert sol.outlier_set == ()
    np.testing.assert_allclose(sol.estimate, [4.0 / 3.0], rtol=1e-12)
    assert sol.inlier_norm == pytest.approx(np.sqrt(32.0 / 3.0), rel=1e-12)
    assert sol.objective == 0.0


def test_mc_keeps_everything(toy):
    sol = oracle_enumerate(toy, "mc", EPS)
    assert sol.outlier_set == ()
    # x = 2 centers the residuals: max |y_i - x| = 2 <= 2.58
    np.testing.assert_allclose(sol.estimate, [2.0], rtol=1e-9)
    assert sol.inlier_norm == pytest.approx(2.0, abs=1e-9)


def test_tls_rejects_the_outlier(toy):
    sol = oracle_enumerate(toy, "tls", EPS)
    assert sol.outlier_set == (2,)
    np.testing.assert_allclose(sol.estimate, [0.0], atol=1e-12)
    assert sol.inlier_norm == pytest.approx(0.0, abs=1e-12)
    assert sol.objective == pytest.approx(EPS**2, rel=1e-12)


def test_tls_matches_brute_force():
    instance = inject_outliers(gen_linear(9, 1, 0.05, seed=2), 0.3, seed=3)
    problem = instance.problem
    eps = inlier_threshold(0.05, 1)
    sol = oracle_enumerate(problem, "tls", eps)
    best = np.inf
    for k in range(problem.measurement_count + 1):
        for out in combinations(range(problem.measurement_count), k):
            w = np.ones(problem.measurement_count)
            w[list(out)] = 0.0
            if k == problem.measurement_count:
                val = 0.0
            else:
                x = problem.weighted_solve(w)
                keep = np.flatnonzero(w)
                val = float(np.linalg.norm(problem.residuals(x)[keep]))
            best = min(best, val**2 + eps**2 * k)
    assert sol.objective == pytest.approx(best, rel=1e-10)


def test_ties_break_lexicographically():
    # rejecting either measurement leaves an exact fit; index 0 must win
    problem = LinearProblem(np.ones(2), np.array([0.0, 4.0]))
    sol = oracle_enumerate(problem, "mts", 0.5)
    assert sol.outlier_set == (0,)


def test_enumeration_refuses_large_instances():
    problem = LinearProblem(np.ones(21), np.zeros(21))
    with pytest.raises(TooLarge):
        oracle_enumerate(problem, "mts", 1.0)
    with pytest.raises(TooLarge):
        min_norm_at_cardinality(problem, 1)


# ---------------------------------------------------------------------------
# best norm at fixed rejection count
# ---------------------------------------------------------------------------

def test_min_norm_at_cardinality_reference(toy):
    values = [min_norm_at_cardinality(toy, k)[0] for k in range(3)]
    assert values[0] == pytest.approx(np.sqrt(32.0 / 3.0), rel=1e-12)
    assert values[1] == pytest.approx(0.0, abs=1e-12)
    assert values[2] == pytest.approx(0.0, abs=1e-12)


def test_min_norm_is_nonincreasing_in_rejections():
    instance = inject_outliers(gen_linear(8, 1, 0.05, seed=5), 0.3, seed=6)
    problem = instance.problem
    values = [min_norm_at_cardinality(problem, k)[0] for k in range(6)]
    assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))


def test_min_norm_rejects_bad_cardinality(toy):
    with pytest.raises(ValueError):
        min_norm_at_cardinality(toy, -1)
    with pytest.raises(ValueError):
        min_norm_at_cardinality(toy, 4)


# ---------------------------------------------------------------------------
# formulation relationship
# ---------------------------------------------------------------------------

def test_relationship_on_the_toy(toy):
    report = verify_relationship(toy, EPS)
    assert report.all_passed
    names = [c.name for c in report.clauses]
    assert names == ["tau_equal", "tau_above", "tau_below", "linf_coincide"]
    by_name = {c.name: c for c in report.clauses}
    # the rejecting fit is exact, so there is no threshold below it to probe
    assert report.r_tls == pytest.approx(0.0, abs=1e-12)
    assert not by_name["tau_below"].checked
    assert by_name["tau_equal"].checked and by_name["tau_equal"].passed
    assert by_name["linf_coincide"].checked and by_name["linf_coincide"].passed


def test_relationship_on_noisy_instances():
    eps = inlier_threshold(0.05, 1)
    for seed in range(10):
        instance = inject_outliers(gen_linear(8, 1, 0.05, seed=seed), 0.3,
                                   seed=seed + 50)
        report = verify_relationship(instance.problem, eps)
        failed = [c.name for c in report.clauses if c.checked and not c.passed]
        assert not failed, f"seed {seed}: {failed}"


# ---------------------------------------------------------------------------
# a-posteriori sub-optimality
# ---------------------------------------------------------------------------

def test_suboptimality_bound_values():
    assert suboptimality_bound(5.0, 1.0) == pytest.approx(0.25)
    assert suboptimality_bound(5.0, 0.0) == 0.0


def test_suboptimality_bound_requires_improvement():
    with pytest.raises(InvalidBound):
        suboptimality_bound(1.0, 1.0)
    with pytest.raises(InvalidBound):
        suboptimality_bound(1.0, 2.0)
    with pytest.raises(InvalidBound):
        suboptimality_bound(1.0, -0.5)
