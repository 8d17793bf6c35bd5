"""Closed-form weighted rigid alignment of 3-D correspondences."""

import numpy as np
import pytest

from robest.errors import Degenerate
from robest.registration import RegistrationProblem, weighted_rigid_align
from robest.rotations import exp_so3, random_rotation


def _cloud(seed, count=12):
    return np.random.default_rng(seed).normal(size=(count, 3))


def test_identity_alignment():
    p = _cloud(0)
    R, t = weighted_rigid_align(p, p, np.ones(len(p)))
    np.testing.assert_allclose(R, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(t, 0.0, atol=1e-12)


def test_known_transform_recovery():
    p = _cloud(1)
    R_true = exp_so3(np.array([0.3, -0.2, 0.9]))
    t_true = np.array([1.0, -2.0, 0.5])
    q = p @ R_true.T + t_true
    R, t = weighted_rigid_align(p, q, np.ones(len(p)))
    np.testing.assert_allclose(R, R_true, atol=1e-10)
    np.testing.assert_allclose(t, t_true, atol=1e-10)


def test_zero_weight_suppresses_corruption():
    p = _cloud(2)
    R_true = random_rotation(np.random.default_rng(3))
    t_true = np.array([0.2, 0.1, -0.4])
    q = p @ R_true.T + t_true
    q[5] += 50.0
    w = np.ones(len(p))
    w[5] = 0.0
    R, t = weighted_rigid_align(p, q, w)
    np.testing.assert_allclose(R, R_true, atol=1e-10)
    np.testing.assert_allclose(t, t_true, atol=1e-10)


def test_source_rotation_composes():
    p = _cloud(4)
    R_true = exp_so3(np.array([-0.1, 0.4, 0.2]))
    t_true = np.array([3.0, 0.0, -1.0])
    q = p @ R_true.T + t_true
    S = exp_so3(np.array([0.0, 0.0, 0.7]))
    R, t = weighted_rigid_align(p @ S.T, q, np.ones(len(p)))
    np.testing.assert_allclose(R @ S, R_true, atol=1e-9)
    np.testing.assert_allclose(t, t_true, atol=1e-9)


def test_collinear_points_are_degenerate():
    line = np.outer(np.arange(5, dtype=float), [1.0, 2.0, -1.0])
    with pytest.raises(Degenerate):
        weighted_rigid_align(line, line, np.ones(5))


def test_too_few_positive_weights():
    p = _cloud(5)
    w = np.zeros(len(p))
    w[:2] = 1.0
    with pytest.raises(Degenerate):
        weighted_rigid_align(p, p, w)


def test_problem_contract():
    p = _cloud(6)
    problem = RegistrationProblem(p, p)
    assert problem.measurement_count == len(p)
    assert problem.residual_dof == 3
    R, t = problem.weighted_solve(np.ones(len(p)))
    np.testing.assert_allclose(problem.residuals((R, t)), 0.0, atol=1e-12)
    with pytest.raises(Degenerate):
        RegistrationProblem(p[:2], p[:2])
    with pytest.raises(ValueError):
        RegistrationProblem(p, p[:, :2])


def test_residuals_are_row_norms():
    p = _cloud(7)
    q = p.copy()
    q[0] += np.array([3.0, 4.0, 0.0])
    problem = RegistrationProblem(p, q)
    r = problem.residuals((np.eye(3), np.zeros(3)))
    assert r[0] == pytest.approx(5.0)
    np.testing.assert_allclose(r[1:], 0.0, atol=1e-12)
