"""Estimation-accuracy and classification metrics.

Rotation error is the geodesic angle in degrees, translation error is
Euclidean.  ATE rigidly aligns the estimated trajectory to the reference
before taking the root-mean-square position error, so gauge-equivalent
trajectories score zero.  TP rate counts correctly rejected measurements over
true outliers; FP rate counts wrongly rejected measurements over true
inliers.
"""

import numpy as np

from .errors import TooFew
from .rotations import geodesic_deg


def _pose_errors(est, truth):
    R_e, t_e = est
    R_t, t_t = truth
    return geodesic_deg(R_e, R_t), float(np.linalg.norm(np.asarray(t_e) - np.asarray(t_t)))


def metric_rotation_translation(estimate, truth):
    """(rotation error deg, translation error) between two pose-like estimates.

    Accepts (R, t) pairs, scaled alignments with .R/.t attributes or
    (s, R, t) triples, and pose dictionaries (averaged over shared vertex
    ids).
    """
    if isinstance(estimate, dict):
        ids = sorted(set(estimate) & set(truth))
        if not ids:
            raise TooFew("no shared vertex ids")
        pairs = [_pose_errors(estimate[i], truth[i]) for i in ids]
        rots, trans = zip(*pairs)
        return float(np.mean(rots)), float(np.mean(trans))
    if hasattr(estimate, "R") and hasattr(estimate, "t"):
        estimate = (estimate.R, estimate.t)
    if hasattr(truth, "R") and hasattr(truth, "t"):
        truth = (truth.R, truth.t)
    if len(estimate) == 3:
        estimate = estimate[1:]
    if len(truth) == 3:
        truth = truth[1:]
    return _pose_errors(estimate, truth)


def rigid_align(points, reference):
    """Least-squares rotation+translation taking `points` onto `reference`.

    Plain Kabsch in any dimension; returns (R, t) with det R = +1.
    """
    P = np.asarray(points, dtype=float)
    Q = np.asarray(reference, dtype=float)
    p_bar, q_bar = P.mean(axis=0), Q.mean(axis=0)
    H = (P - p_bar).T @ (Q - q_bar)
    U, _, Vt = np.linalg.svd(H)
    d = np.sign(np.linalg.det(Vt.T @ U.T)) or 1.0
    D = np.eye(H.shape[0])
    D[-1, -1] = d
    R = Vt.T @ D @ U.T
    return R, q_bar - R @ p_bar


def trajectory(poses):
    """Stack pose translations in vertex-id order."""
    return np.asarray([poses[i][1] for i in sorted(poses)], dtype=float)


def metric_ate(est_trajectory, truth_trajectory):
    """Root-mean-square position error after rigid alignment of the estimate."""
    est = np.asarray(est_trajectory, dtype=float)
    truth = np.asarray(truth_trajectory, dtype=float)
    if est.shape != truth.shape:
        raise ValueError(f"trajectory shapes differ: {est.shape} vs {truth.shape}")
    if len(est) < 2:
        raise TooFew("need at least 2 poses")
    R, t = rigid_align(est, truth)
    diff = est @ R.T + t - truth
    return float(np.sqrt(np.mean(np.sum(diff**2, axis=1))))


def metric_tp_fp(predicted_inliers, labels):
    """(tp_rate, fp_rate) of the rejected set against ground-truth outlier labels.

    With no true outliers the TP rate is defined as 1; with no true inliers
    the FP rate is 0.
    """
    labels = np.asarray(labels, dtype=bool)
    kept = np.asarray(sorted(predicted_inliers), dtype=int)
    rejected = np.ones(len(labels), dtype=bool)
    if kept.size:
        rejected[kept] = False
    n_out = int(labels.sum())
    n_in = len(labels) - n_out
    tp = float((rejected & labels).sum() / n_out) if n_out else 1.0
    fp = float((rejected & ~labels).sum() / n_in) if n_in else 0.0
    return tp, fp
