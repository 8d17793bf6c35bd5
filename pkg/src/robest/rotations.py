"""Minimal SO(2)/SO(3) toolbox for the pose-graph and alignment code.

Convention notes: quaternions are stored (qx, qy, qz, qw) to match the g2o
text format; log_so3 returns the rotation vector (axis * angle) with the
angle in [0, pi]; the inverse right Jacobian follows the standard series at
small angles so Gauss-Newton steps stay finite near the identity.
"""

import numpy as np
from scipy.spatial.transform import Rotation as _R

_EPS = 1e-7


def wrap_angle(theta):
    """Wrap to (-pi, pi].  Works elementwise on arrays."""
    return theta - 2.0 * np.pi * np.ceil((theta - np.pi) / (2.0 * np.pi))


def rot2(theta):
    """2x2 rotation matrix for angle theta."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def hat(w):
    """Skew-symmetric matrix of a 3-vector."""
    x, y, z = w
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(W):
    """Inverse of hat: extract the 3-vector from a skew-symmetric matrix."""
    return np.array([W[2, 1], W[0, 2], W[1, 0]])


def exp_so3(w):
    """Rotation matrix from a rotation vector (Rodrigues)."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w)
    W = hat(w)
    if theta < _EPS:
        return np.eye(3) + W + 0.5 * (W @ W)
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + a * W + b * (W @ W)


def log_so3(R):
    """Rotation vector of R in SO(3), angle in [0, pi].

    Three branches: a series near the identity, the generic formula, and an
    axis-from-(R+I) extraction near pi where the generic formula loses the
    axis to cancellation.
    """
    tr = np.trace(R)
    cos_theta = np.clip((tr - 1.0) / 2.0, -1.0, 1.0)
    deficit = 3.0 - tr
    if deficit < _EPS:
        # theta ~ 0: first-order series with a curvature correction
        return 0.5 * vee(R - R.T) * (1.0 + deficit / 6.0)
    theta = np.arccos(cos_theta)
    if np.pi - theta < 1e-6:
        # near pi: R + I ~ 2 axis axis^T, take the largest column
        B = R + np.eye(3)
        k = int(np.argmax(np.diag(B)))
        axis = B[:, k] / np.linalg.norm(B[:, k])
        # fix the sign so that exp matches R to first order off pi
        w = axis * theta
        if np.linalg.norm(exp_so3(w) - R) > np.linalg.norm(exp_so3(-w) - R):
            w = -w
        return w
    return theta / (2.0 * np.sin(theta)) * vee(R - R.T)


def jr_inv(w):
    """Inverse right Jacobian of SO(3) at rotation vector w."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w)
    W = hat(w)
    if theta < _EPS:
        c = 1.0 / 12.0 + theta**2 / 720.0
    else:
        c = 1.0 / theta**2 - (1.0 + np.cos(theta)) / (2.0 * theta * np.sin(theta))
    return np.eye(3) + 0.5 * W + c * (W @ W)


def project_so3(M):
    """Nearest rotation matrix in Frobenius norm (SVD with det correction)."""
    U, _, Vt = np.linalg.svd(M)
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    return U @ D @ Vt


def quat_to_rot(q):
    """Rotation matrix from an (x, y, z, w) quaternion.  Normalizes first."""
    return _R.from_quat(np.asarray(q, dtype=float)).as_matrix()


def rot_to_quat(R):
    """(x, y, z, w) quaternion of a rotation matrix, with qw >= 0."""
    q = _R.from_matrix(R).as_quat()
    if q[3] < 0:
        q = -q
    return q


def random_rotation(rng):
    """Uniform random rotation matrix (normalized random quaternion)."""
    q = rng.normal(size=4)
    return quat_to_rot(q / np.linalg.norm(q))


def geodesic_deg(Ra, Rb):
    """Geodesic distance between two rotations, in degrees.

    Accepts 2x2 or 3x3 matrices, or plain angles (radians) for the 2-D case.
    """
    Ra = np.asarray(Ra, dtype=float)
    Rb = np.asarray(Rb, dtype=float)
    if Ra.ndim == 0:
        return abs(np.degrees(wrap_angle(float(Rb) - float(Ra))))
    if Ra.shape == (2, 2):
        dtheta = np.arctan2(Rb[1, 0], Rb[0, 0]) - np.arctan2(Ra[1, 0], Ra[0, 0])
        return abs(np.degrees(wrap_angle(dtheta)))
    return np.degrees(np.linalg.norm(log_so3(Ra.T @ Rb)))
