"""Synthetic instance generation and outlier injection.

Every generator is a pure function of its parameters and seed: regenerating
with the same arguments is bit-identical.  Generators return a
`LabeledInstance` carrying the problem payload, the generating ground truth,
and per-measurement outlier labels (all False until `inject_outliers` is
used).  Pose-graph instances carry the `PoseGraph` itself as the payload --
wrap it in `PoseGraphProblem` to solve -- because a graph with no loop
closures (`loop_closure_prob=0`, single-ring sphere) is a legal instance but
not a robust-estimation problem.  Random geometry that comes out degenerate
(e.g. a collinear correspondence set) is retried with derived sub-seeds a few
times before giving up.

Pose-graph edges carry nominal (identity) information matrices rather than
the inverse noise covariance, matching the public g2o benchmarks, whose
information entries are nominal values unrelated to the actual error
statistics.  Robust thresholds for these graphs are therefore quantiles at
sigma = 1 applied to raw residuals.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import Degenerate, DegenerateGeometry, RateOutOfRange
from .linear import LinearProblem
from .posegraph import Edge, PoseGraph
from .registration import RegistrationProblem
from .rotations import exp_so3, random_rotation, rot2, wrap_angle
from .shape import ShapeProblem

_RETRIES = 10

LINEAR, REGISTRATION, SHAPE, PGO = "linear", "registration", "shape", "pgo"


@dataclass(frozen=True)
class LabeledInstance:
    """A generated problem with its ground truth and outlier labels."""

    kind: str
    problem: object
    ground_truth: object
    outlier_labels: np.ndarray
    seed: int
    noise_sigma: float


def _retry(seed, build):
    for attempt in range(_RETRIES):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), attempt]))
        try:
            return build(rng)
        except Degenerate:
            continue
    raise DegenerateGeometry(f"no valid geometry in {_RETRIES} attempts (seed {seed})")


# ---------------------------------------------------------------------------
# point problems
# ---------------------------------------------------------------------------

def gen_linear(m, n, noise_sigma, seed):
    """Random full-rank design, Gaussian truth, y = A x + noise."""

    def build(rng):
        A = rng.normal(size=(m, n))
        x = rng.normal(size=n)
        y = A @ x + noise_sigma * rng.normal(size=m)
        problem = LinearProblem(A, y)  # raises Degenerate on rank loss
        return LabeledInstance(LINEAR, problem, x, np.zeros(m, dtype=bool),
                               seed, noise_sigma)

    return _retry(seed, build)


def gen_registration(count, transform=None, noise_sigma=0.01, seed=0):
    """Unit-cube source cloud moved by a rigid transform, plus isotropic noise.

    `transform` is a (R, t) pair; None draws a random rotation and a
    translation uniform in [-1, 1]^3 from the same seed.
    """

    def build(rng):
        source = rng.uniform(0.0, 1.0, size=(count, 3))
        if np.linalg.matrix_rank(source - source.mean(axis=0)) < 2:
            raise Degenerate("collinear source cloud")
        if transform is None:
            R, t = random_rotation(rng), rng.uniform(-1.0, 1.0, size=3)
        else:
            R, t = transform
        target = source @ R.T + t + noise_sigma * rng.normal(size=(count, 3))
        problem = RegistrationProblem(source, target)
        return LabeledInstance(REGISTRATION, problem, (R, t),
                               np.zeros(count, dtype=bool), seed, noise_sigma)

    return _retry(seed, build)


def gen_shape(count, s=1.0, R=None, t=None, noise_sigma=0.0, seed=0):
    """Unit-box model points imaged by z = s * Pi R B + t, plus isotropic noise."""

    def build(rng):
        B = rng.uniform(-0.5, 0.5, size=(count, 3))
        if np.linalg.matrix_rank(B - B.mean(axis=0)) < 3:
            raise Degenerate("coplanar model points")
        Rg = random_rotation(rng) if R is None else R
        tg = rng.uniform(-1.0, 1.0, size=2) if t is None else np.asarray(t, dtype=float)
        z = s * (B @ Rg[:2].T) + tg + noise_sigma * rng.normal(size=(count, 2))
        problem = ShapeProblem(B, z)
        return LabeledInstance(SHAPE, problem, (s, Rg, tg),
                               np.zeros(count, dtype=bool), seed, noise_sigma)

    return _retry(seed, build)


# ---------------------------------------------------------------------------
# pose graphs
# ---------------------------------------------------------------------------

def _noisy_edge_se2(i, j, poses, sigma_t, sigma_r, rng):
    (Ri, ti), (Rj, tj) = poses[i], poses[j]
    th = wrap_angle(math.atan2(Rj[1, 0], Rj[0, 0]) - math.atan2(Ri[1, 0], Ri[0, 0]))
    dt = Ri.T @ (tj - ti) + sigma_t * rng.normal(size=2)
    th = wrap_angle(th + sigma_r * rng.normal())
    return Edge(i, j, rot2(th), dt, np.eye(1), np.eye(2))


def _noisy_edge_se3(i, j, poses, sigma_t, sigma_r, rng):
    (Ri, ti), (Rj, tj) = poses[i], poses[j]
    R_meas = Ri.T @ Rj @ exp_so3(sigma_r * rng.normal(size=3))
    t_meas = Ri.T @ (tj - ti) + sigma_t * rng.normal(size=3)
    return Edge(i, j, R_meas, t_meas, np.eye(3), np.eye(3))


def _pgo_instance(poses, odometry, loop_closures, dim, seed, sigma):
    labels = np.zeros(len(loop_closures), dtype=bool)
    graph = PoseGraph(dim, poses, odometry, loop_closures,
                      ground_truth=dict(poses), outlier_labels=labels)
    return LabeledInstance(PGO, graph, dict(poses), labels, seed, sigma)


def gen_grid_2d(rows, cols, noise_sigma_t, noise_sigma_r, loop_closure_prob, seed):
    """Planar lattice traversed boustrophedon, with loop closures between
    spatially adjacent non-consecutive poses sampled at the given probability."""
    if rows < 2 or cols < 2:
        raise ValueError("grid needs rows, cols >= 2")

    def build(rng):
        cells = []
        for r in range(rows):
            ran = range(cols) if r % 2 == 0 else range(cols - 1, -1, -1)
            cells.extend((c, r) for c in ran)
        n = len(cells)
        xy = np.asarray(cells, dtype=float)
        poses = {}
        th = 0.0
        for k in range(n):
            if k < n - 1:
                d = xy[k + 1] - xy[k]
                th = math.atan2(d[1], d[0])  # last pose keeps its heading
            poses[k] = (rot2(th), xy[k])
        odometry = [
            _noisy_edge_se2(k, k + 1, poses, noise_sigma_t, noise_sigma_r, rng)
            for k in range(n - 1)
        ]
        loop_closures = []
        for a in range(n):
            for b in range(a + 2, n):  # non-consecutive
                if abs(xy[a] - xy[b]).sum() == 1.0 and rng.random() < loop_closure_prob:
                    loop_closures.append(_noisy_edge_se2(
                        a, b, poses, noise_sigma_t, noise_sigma_r, rng))
        return _pgo_instance(poses, odometry, loop_closures, 2, seed, noise_sigma_t)

    return _retry(seed, build)


def gen_sphere_3d(levels, points_per_level, noise, seed):
    """Poses on latitude rings of a unit sphere; the odometry chain sweeps the
    rings in turn and every vertically adjacent pair gets a loop closure.

    A single `noise` sigma is used for both translation (length units) and
    rotation (radians).
    """
    if levels < 1 or points_per_level < 2:
        raise ValueError("need levels >= 1 and points_per_level >= 2")

    def build(rng):
        pts = []
        for lev in range(levels):
            phi = math.pi * (lev + 1) / (levels + 1)  # poles excluded
            for k in range(points_per_level):
                az = 2.0 * math.pi * k / points_per_level
                pts.append([math.sin(phi) * math.cos(az),
                            math.sin(phi) * math.sin(az),
                            math.cos(phi)])
        pts = np.asarray(pts)
        n = len(pts)
        poses = {}
        R = np.eye(3)
        for k in range(n):
            if k < n - 1:
                e1 = pts[k + 1] - pts[k]
                e1 = e1 / np.linalg.norm(e1)
                radial = pts[k] - (pts[k] @ e1) * e1
                nr = np.linalg.norm(radial)
                if nr < 1e-12:
                    raise Degenerate("degenerate frame on sphere sweep")
                e3 = radial / nr
                R = np.column_stack([e1, np.cross(e3, e1), e3])
            poses[k] = (R, pts[k])  # last pose keeps the previous frame
        odometry = [
            _noisy_edge_se3(k, k + 1, poses, noise, noise, rng)
            for k in range(n - 1)
        ]
        loop_closures = [
            _noisy_edge_se3(a, a + points_per_level, poses, noise, noise, rng)
            for a in range((levels - 1) * points_per_level)
            if points_per_level > 1
        ]
        return _pgo_instance(poses, odometry, loop_closures, 3, seed, noise)

    return _retry(seed, build)


def random_chain_se2(seed, n_vertices=6, n_loop_closures=3, noise_sigma_t=0.02,
                     noise_sigma_r=0.01):
    """Random-walk SE(2) chain with a few loop closures; handy for small
    enumeration checks (cycle bounds, subset oracles)."""
    if n_vertices < 3:
        raise ValueError("need at least 3 vertices")
    candidates = [(i, j) for i in range(n_vertices)
                  for j in range(i + 2, n_vertices)]
    if not 1 <= n_loop_closures <= len(candidates):
        raise ValueError(f"n_loop_closures must be in [1, {len(candidates)}]")

    def build(rng):
        poses = {0: (rot2(0.0), np.zeros(2))}
        th = 0.0
        for k in range(1, n_vertices):
            th = wrap_angle(th + rng.uniform(-1.0, 1.0))
            R_prev, t_prev = poses[k - 1]
            poses[k] = (rot2(th), t_prev + np.array([math.cos(th), math.sin(th)]))
        odometry = [
            _noisy_edge_se2(k, k + 1, poses, noise_sigma_t, noise_sigma_r, rng)
            for k in range(n_vertices - 1)
        ]
        picks = rng.choice(len(candidates), size=n_loop_closures, replace=False)
        loop_closures = [
            _noisy_edge_se2(*candidates[p], poses, noise_sigma_t, noise_sigma_r, rng)
            for p in np.sort(picks)
        ]
        return _pgo_instance(poses, odometry, loop_closures, 2, seed, noise_sigma_t)

    return _retry(seed, build)


# ---------------------------------------------------------------------------
# outlier injection
# ---------------------------------------------------------------------------

def inject_outliers(instance, rate, seed, translation_box=20.0, offset_range=(5.0, 10.0)):
    """Corrupt a fraction of the eligible measurements, returning a new instance.

    floor(rate * eligible) measurements are chosen without replacement:
    correspondences are re-paired to a random *other* measurement's target,
    loop closures get a uniformly random relative pose (rotation uniform on
    the group, translation uniform in +/-`translation_box` -- the default is
    far outside any plausible inlier threshold, mimicking a gross false
    closure), and linear observations are shifted by a uniform offset from
    `offset_range` with a random sign.  Odometry is never touched.  Labels
    are set accordingly; the input instance is left unmodified.
    """
    if not 0.0 <= rate < 1.0:
        raise RateOutOfRange(f"rate must be in [0, 1), got {rate}")
    rng = np.random.default_rng(seed)
    kind = instance.kind
    if kind == PGO:
        eligible = len(instance.problem.loop_closures)
    else:
        eligible = instance.problem.measurement_count
    n_out = int(math.floor(rate * eligible))
    labels = instance.outlier_labels.copy()
    if n_out == 0:
        return replace(instance, outlier_labels=labels)
    chosen = np.sort(rng.choice(eligible, size=n_out, replace=False))
    labels[chosen] = True

    if kind == LINEAR:
        y = instance.problem.y.copy()
        lo, hi = offset_range
        for i in chosen:
            sign = 1.0 if rng.random() < 0.5 else -1.0
            y[i] += sign * rng.uniform(lo, hi)
        problem = LinearProblem(instance.problem.A.copy(), y)
    elif kind == REGISTRATION:
        target = instance.problem.target.copy()
        original = instance.problem.target
        for i in chosen:
            j = int(rng.integers(eligible - 1))
            j += j >= i  # uniform over indices != i
            target[i] = original[j]
        problem = RegistrationProblem(instance.problem.source.copy(), target)
    elif kind == SHAPE:
        image = instance.problem.image.copy()
        original = instance.problem.image
        for i in chosen:
            j = int(rng.integers(eligible - 1))
            j += j >= i
            image[i] = original[j]
        problem = ShapeProblem(instance.problem.model.copy(), image)
    elif kind == PGO:
        graph = instance.problem
        dim = graph.dim
        new_lc = list(graph.loop_closures)
        for i in chosen:
            e = new_lc[i]
            if dim == 2:
                R = rot2(rng.uniform(-math.pi, math.pi))
            else:
                R = random_rotation(rng)
            t = rng.uniform(-translation_box, translation_box, size=dim)
            new_lc[i] = Edge(e.i, e.j, R, t, e.info_rot, e.info_trans)
        problem = PoseGraph(dim, dict(graph.poses), list(graph.odometry), new_lc,
                            ground_truth=graph.ground_truth,
                            outlier_labels=labels)
    else:
        raise ValueError(f"unknown instance kind {kind!r}")
    return replace(instance, problem=problem, outlier_labels=labels)


# ---------------------------------------------------------------------------
# a line-fitting instance where greedy removal fails
# ---------------------------------------------------------------------------

ADVERSARIAL_X = np.array([2.0, 0.0, 7.0, 10.0, 12.0])
ADVERSARIAL_Y = np.array([0.0, -10.0, 0.0, 5.5, 0.0])
ADVERSARIAL_OUTLIERS = (1, 3)


def adversarial_line_instance():
    """Five points on a line with two planted outliers that mislead greedy removal.

    The inliers (indices 0, 2, 4) sit exactly on y = 0; outlier 1 hangs far
    below the line at the left edge and tilts the full least-squares fit so
    hard that inlier 0 carries the largest residual.  Greedy worst-residual
    removal (inf-norm bound 0.1) therefore discards the three true inliers in
    the order 0, 4, 2 and terminates on the outlier pair, whose two-point fit
    is exact.  Threshold-adaptive trimming from the same start drops {0, 1},
    refits on {2, 3, 4}, and the discounted threshold then re-admits index 0
    while expelling both outliers: the second selection is exactly {0, 2, 4}
    and the loop converges there.
    """
    A = np.column_stack([ADVERSARIAL_X, np.ones_like(ADVERSARIAL_X)])
    labels = np.zeros(5, dtype=bool)
    labels[list(ADVERSARIAL_OUTLIERS)] = True
    return LabeledInstance(LINEAR, LinearProblem(A, ADVERSARIAL_Y.copy()),
                           np.zeros(2), labels, 0, 0.0)
