"""Linear regression as an estimation problem: y_i ~ a_i^T x, residual |y_i - a_i^T x|."""

import numpy as np

from .errors import Degenerate, RankDeficient
from .solvers import EstimationProblem


def linear_weighted_solve(A, y, weights):
    """x minimizing sum_i w_i (y_i - a_i^T x)^2.

    Raises RankDeficient when the weighted design loses full column rank
    (the minimizer is then not unique).
    """
    w = np.asarray(weights, dtype=float)
    sw = np.sqrt(w)
    x, _, rank, _ = np.linalg.lstsq(A * sw[:, None], y * sw, rcond=None)
    if rank < A.shape[1]:
        raise RankDeficient(
            f"weighted design has rank {rank} < {A.shape[1]} columns"
        )
    return x


class LinearProblem(EstimationProblem):
    """Rows a_i and scalar observations y_i; estimates live in R^n."""

    def __init__(self, A, y):
        A = np.asarray(A, dtype=float)
        if A.ndim == 1:
            A = A[:, None]
        y = np.asarray(y, dtype=float).ravel()
        if A.shape[0] != y.size:
            raise ValueError(f"{A.shape[0]} design rows but {y.size} observations")
        if A.shape[0] < A.shape[1]:
            raise Degenerate(f"underdetermined: m={A.shape[0]} < n={A.shape[1]}")
        if np.linalg.matrix_rank(A) < A.shape[1]:
            raise Degenerate("design matrix is column-rank deficient")
        self.A = A
        self.y = y

    @property
    def measurement_count(self):
        return self.y.size

    @property
    def residual_dof(self):
        return 1

    def residuals(self, x):
        return np.abs(self.y - self.A @ np.asarray(x, dtype=float))

    def weighted_solve(self, weights):
        return linear_weighted_solve(self.A, self.y, weights)
