"""Weak-perspective shape alignment: fit s, R, t so that z_i ~ s * Pi R B_i + t.

Pi is the orthographic projection (first two rows of the identity), B_i are
3-D model points and z_i their 2-D images.  The solve eliminates t via
weighted centering, takes the unconstrained 2x3 linear map M = G S in the
least-squares sense, projects G onto scaled orthonormal rows (polar
decomposition), and re-optimizes the scale for the projected rows.  The
candidate is only accepted if it does not increase the objective, so the
sweep loop is monotone; on exact data it recovers the generating transform
in one sweep.
"""

from typing import NamedTuple

import numpy as np

from .errors import Degenerate
from .solvers import EstimationProblem

MAX_SWEEPS = 200
_REL_TOL = 1e-14


class ShapeEstimate(NamedTuple):
    scale: float
    R: np.ndarray  # full 3x3 rotation; rows 0..1 are the projection directions
    t: np.ndarray  # 2-vector image offset
    converged: bool


def _objective(w, z, B, s, A, t):
    e = z - s * (B @ A.T) - t
    return float(np.sum(w * np.sum(e * e, axis=1)))


def _complete_rotation(A):
    return np.vstack([A, np.cross(A[0], A[1])])


def weighted_shape_align(B, z, weights):
    """(s, R, t) locally minimizing sum_i w_i ||z_i - s Pi R B_i - t||^2.

    Needs >= 4 positively weighted pairs with non-coplanar weighted model
    points (the centered second-moment matrix must be invertible).
    """
    w = np.asarray(weights, dtype=float)
    if int(np.count_nonzero(w > 0)) < 4:
        raise Degenerate("fewer than 4 positively weighted pairs")
    wsum = float(w.sum())
    B_bar = w @ B / wsum
    z_bar = w @ z / wsum
    S = B - B_bar  # centered model points
    M = z - z_bar  # centered image points
    K = (w[:, None] * S).T @ S  # 3x3 weighted second moment
    if np.linalg.matrix_rank(K) < 3:
        raise Degenerate("weighted model points are coplanar")
    C = (w[:, None] * M).T @ S  # 2x3 weighted cross moment

    # start from the identity view
    s, A = 1.0, np.eye(2, 3)
    t = z_bar - s * (A @ B_bar)
    obj = _objective(w, z, B, s, A, t)
    converged = False
    for _ in range(MAX_SWEEPS):
        G = np.linalg.solve(K, C.T).T  # unconstrained 2x3 minimizer
        U, _, Vt = np.linalg.svd(G, full_matrices=False)
        A_new = U @ Vt  # nearest orthonormal rows
        s_new = float(np.trace(A_new @ C.T) / np.trace(A_new @ K @ A_new.T))
        if s_new <= 0:
            converged = True  # data prefers a reflected/negative scale; keep current
            break
        t_new = z_bar - s_new * (A_new @ B_bar)
        obj_new = _objective(w, z, B, s_new, A_new, t_new)
        if obj_new > obj:
            converged = True  # candidate would increase the cost
            break
        moved = abs(obj - obj_new) > _REL_TOL * max(obj, 1.0)
        s, A, t, obj = s_new, A_new, t_new, obj_new
        if not moved:
            converged = True
            break
    return ShapeEstimate(s, _complete_rotation(A), np.asarray(t, dtype=float), converged)


class ShapeProblem(EstimationProblem):
    """Model points B (m,3) and image points z (m,2)."""

    def __init__(self, model, image):
        model = np.asarray(model, dtype=float)
        image = np.asarray(image, dtype=float)
        if model.ndim != 2 or model.shape[1] != 3:
            raise ValueError("model must be (m, 3)")
        if image.shape != (model.shape[0], 2):
            raise ValueError("image must be (m, 2) matching model")
        if model.shape[0] < 4:
            raise Degenerate("need at least 4 pairs")
        self.model = model
        self.image = image

    @property
    def measurement_count(self):
        return self.model.shape[0]

    @property
    def residual_dof(self):
        return 2

    def residuals(self, estimate):
        s, R, t = estimate.scale, estimate.R, estimate.t
        pred = s * (self.model @ R[:2].T) + t
        return np.linalg.norm(self.image - pred, axis=1)

    def weighted_solve(self, weights):
        return weighted_shape_align(self.model, self.image, weights)
