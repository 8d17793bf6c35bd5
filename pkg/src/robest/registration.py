"""Point-to-point rigid registration with a weighted closed-form solve."""

import numpy as np

from .errors import Degenerate
from .solvers import EstimationProblem

_COLLINEAR_RTOL = 1e-12


def weighted_rigid_align(source, target, weights):
    """(R, t) minimizing sum_i w_i ||R p_i + t - q_i||^2.

    Weighted centroid subtraction, SVD of the weighted cross-covariance, and
    a determinant correction so R is a proper rotation.  Needs at least 3
    positively weighted, non-collinear pairs.
    """
    w = np.asarray(weights, dtype=float)
    if int(np.count_nonzero(w > 0)) < 3:
        raise Degenerate("fewer than 3 positively weighted pairs")
    wsum = float(w.sum())
    p_bar = w @ source / wsum
    q_bar = w @ target / wsum
    P = source - p_bar
    Q = target - q_bar
    H = (w[:, None] * P).T @ Q  # 3x3 cross-covariance, source x target
    U, S, Vt = np.linalg.svd(H)
    if S[1] <= _COLLINEAR_RTOL * max(S[0], 1e-300):
        raise Degenerate("weighted correspondences are (near-)collinear")
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(Vt.T @ U.T))])
    R = Vt.T @ D @ U.T
    t = q_bar - R @ p_bar
    return R, t


class RegistrationProblem(EstimationProblem):
    """Correspondences (p_i, q_i) in R^3; estimate is the pair (R, t)."""

    def __init__(self, source, target):
        source = np.asarray(source, dtype=float)
        target = np.asarray(target, dtype=float)
        if source.shape != target.shape or source.ndim != 2 or source.shape[1] != 3:
            raise ValueError("source and target must both be (m, 3)")
        if source.shape[0] < 3:
            raise Degenerate("need at least 3 correspondences")
        self.source = source
        self.target = target

    @property
    def measurement_count(self):
        return self.source.shape[0]

    @property
    def residual_dof(self):
        return 3

    def residuals(self, estimate):
        R, t = estimate
        return np.linalg.norm(self.source @ R.T + t - self.target, axis=1)

    def weighted_solve(self, weights):
        return weighted_rigid_align(self.source, self.target, weights)
