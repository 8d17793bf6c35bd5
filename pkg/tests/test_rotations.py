"""SO(2)/SO(3) helpers: wrapping, exp/log, quaternions, projections."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from robest.rotations import (
    exp_so3,
    geodesic_deg,
    hat,
    jr_inv,
    log_so3,
    project_so3,
    quat_to_rot,
    random_rotation,
    rot2,
    rot_to_quat,
    vee,
    wrap_angle,
)


def test_wrap_angle_range():
    assert wrap_angle(0.0) == 0.0
    assert wrap_angle(np.pi) == pytest.approx(np.pi)
    assert wrap_angle(-np.pi) == pytest.approx(np.pi)
    assert wrap_angle(3 * np.pi) == pytest.approx(np.pi)
    assert wrap_angle(np.pi + 0.1) == pytest.approx(-np.pi + 0.1)
    assert wrap_angle(-0.3) == pytest.approx(-0.3)


def test_rot2_is_a_rotation():
    R = rot2(0.7)
    np.testing.assert_allclose(R.T @ R, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(rot2(np.pi / 2) @ [1.0, 0.0], [0.0, 1.0], atol=1e-15)


def test_hat_vee_round_trip():
    w = np.array([0.3, -1.2, 0.5])
    W = hat(w)
    np.testing.assert_allclose(W, -W.T)
    np.testing.assert_allclose(vee(W), w)


unit_ball = st.builds(
    lambda v, s: s * np.asarray(v) / max(np.linalg.norm(v), 1e-9),
    st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)).filter(
        lambda v: np.linalg.norm(v) > 1e-3),
    st.floats(min_value=1e-6, max_value=np.pi - 0.01),
)


@given(unit_ball)
def test_exp_log_round_trip(w):
    np.testing.assert_allclose(log_so3(exp_so3(w)), w, atol=1e-9)


def test_exp_so3_small_angle_series():
    w = np.array([1e-9, -2e-9, 0.5e-9])
    R = exp_so3(w)
    np.testing.assert_allclose(R, np.eye(3) + hat(w), atol=1e-15)
    np.testing.assert_allclose(log_so3(R), w, atol=1e-15)


def test_log_so3_near_pi():
    axis = np.array([1.0, 2.0, -0.5])
    axis /= np.linalg.norm(axis)
    w = (np.pi - 1e-4) * axis
    np.testing.assert_allclose(log_so3(exp_so3(w)), w, atol=1e-7)


def test_log_so3_at_pi_inverts_up_to_sign():
    # at exactly pi the axis sign is ambiguous; exp must still invert log
    axis = np.array([0.0, 0.0, 1.0])
    R = exp_so3(np.pi * axis)
    np.testing.assert_allclose(exp_so3(log_so3(R)), R, atol=1e-9)


def test_project_so3():
    rng = np.random.default_rng(5)
    R = random_rotation(rng)
    noisy = R + 1e-3 * rng.normal(size=(3, 3))
    P = project_so3(noisy)
    np.testing.assert_allclose(P.T @ P, np.eye(3), atol=1e-12)
    assert np.linalg.det(P) == pytest.approx(1.0)
    np.testing.assert_allclose(P, R, atol=5e-3)
    np.testing.assert_allclose(project_so3(R), R, atol=1e-12)


def test_quaternion_round_trip():
    rng = np.random.default_rng(9)
    for _ in range(20):
        R = random_rotation(rng)
        q = rot_to_quat(R)
        assert q[3] >= 0.0  # w component kept non-negative
        assert np.linalg.norm(q) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(quat_to_rot(q), R, atol=1e-12)


def test_quat_to_rot_known_value():
    # unit x quaternion = half turn about x
    np.testing.assert_allclose(
        quat_to_rot([1.0, 0.0, 0.0, 0.0]), np.diag([1.0, -1.0, -1.0]), atol=1e-15)


def test_random_rotation_is_deterministic_and_proper():
    a = random_rotation(np.random.default_rng(42))
    b = random_rotation(np.random.default_rng(42))
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(a.T @ a, np.eye(3), atol=1e-12)
    assert np.linalg.det(a) == pytest.approx(1.0)


def test_jr_inv_identity_at_zero():
    np.testing.assert_allclose(jr_inv(np.zeros(3)), np.eye(3), atol=1e-12)


def test_geodesic_deg_conventions():
    assert geodesic_deg(np.eye(3), np.eye(3)) == pytest.approx(0.0)
    z10 = exp_so3(np.deg2rad(10.0) * np.array([0.0, 0.0, 1.0]))
    assert geodesic_deg(z10, np.eye(3)) == pytest.approx(10.0, abs=1e-9)
    assert geodesic_deg(rot2(np.deg2rad(10.0)), rot2(0.0)) == pytest.approx(
        10.0, abs=1e-9)
    # plain angles (SE2 headings) are accepted too
    assert geodesic_deg(0.2, 0.1) == pytest.approx(np.rad2deg(0.1), abs=1e-9)
