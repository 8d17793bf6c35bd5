"""Weighted linear least squares and the linear estimation problem."""

import numpy as np
import pytest

from robest.errors import Degenerate, RankDeficient
from robest.linear import LinearProblem, linear_weighted_solve


def test_toy_full_fit(toy):
    x = toy.weighted_solve(np.ones(3))
    np.testing.assert_allclose(x, [4.0 / 3.0], rtol=1e-14)
    np.testing.assert_allclose(
        toy.residuals(x), [4.0 / 3.0, 4.0 / 3.0, 8.0 / 3.0], rtol=1e-13)


def test_toy_rejecting_the_outlier(toy):
    x = toy.weighted_solve(np.array([1.0, 1.0, 0.0]))
    np.testing.assert_allclose(x, [0.0], atol=1e-14)


def test_exact_fit_recovery():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(10, 3))
    x_true = rng.normal(size=3)
    problem = LinearProblem(A, A @ x_true)
    x = problem.weighted_solve(np.ones(10))
    np.testing.assert_allclose(x, x_true, atol=1e-12)
    np.testing.assert_allclose(problem.residuals(x), 0.0, atol=1e-12)


def test_zero_weight_rows_are_ignored():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(8, 2))
    y = A @ np.array([1.0, -2.0])
    w = np.ones(8)
    w[3] = 0.0
    base = linear_weighted_solve(A, y, w)
    y_corrupt = y.copy()
    y_corrupt[3] += 100.0
    np.testing.assert_allclose(linear_weighted_solve(A, y_corrupt, w), base,
                               atol=1e-12)


def test_rank_deficient_weighting():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(6, 3))
    y = rng.normal(size=6)
    w = np.zeros(6)
    w[:2] = 1.0  # two rows cannot pin three unknowns
    with pytest.raises(RankDeficient):
        linear_weighted_solve(A, y, w)


def test_degenerate_constructions():
    with pytest.raises(Degenerate):
        LinearProblem(np.ones((2, 3)), np.zeros(2))  # fewer rows than unknowns
    A = np.ones((5, 2))  # duplicate columns
    with pytest.raises(Degenerate):
        LinearProblem(A, np.zeros(5))


def test_problem_shape_contract(toy):
    assert toy.measurement_count == 3
    assert toy.residual_dof == 1
    # 1-D regressor promoted to a single column: estimate has one entry
    assert toy.weighted_solve(np.ones(3)).shape == (1,)


def test_residuals_are_absolute(toy):
    r = toy.residuals(np.array([2.0]))
    np.testing.assert_allclose(r, [2.0, 2.0, 2.0])
    assert np.all(r >= 0)
