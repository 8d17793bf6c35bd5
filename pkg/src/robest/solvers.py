"""Outlier-robust solvers over a generic estimation-problem contract.

Every solver sees a problem only through two callbacks — per-measurement
residuals at an estimate, and a weighted least-squares solve — so the same
code runs linear regression, point-cloud registration, shape alignment and
pose-graph optimization.

Five solvers are provided:

* ``solve_greedy``    — remove the worst residual until a norm bound holds.
* ``solve_adapt``     — adaptive trimming with a shrinking inlier threshold
                        and re-admission of previously rejected measurements.
* ``solve_gnc_tls``   — graduated non-convexity for the truncated-least-squares
                        cost, with the closed-form weight update.
* ``solve_adapt_mint``— threshold-free trimming: stops when the two-cluster
                        separation of the residuals stabilizes.
* ``solve_gnc_mint``  — threshold-free graduated non-convexity: bisects the
                        inlier threshold between noise bounds and keeps the
                        solution whose squared residuals best fit a chi-square
                        law.

Solvers are deterministic and hold no shared state; a problem instance may be
shared read-only across concurrent solver calls.
"""

import abc
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateClusters, EmptyInlierSet, NoFeasibleSet
from .stats import clusters_separation, fit_chi

L2 = "l2"
LINF = "linf"
_NORMS = (L2, LINF)

MU_FLOOR = 1e-6
BINARY_TOL = 1e-3


def residual_norm(r, norm):
    """‖r‖ under the configured norm: 'l2' or 'linf'.  Empty r has norm 0."""
    if norm not in _NORMS:
        raise ConfigError(f"unknown norm {norm!r}, expected one of {_NORMS}")
    r = np.asarray(r, dtype=float)
    if r.size == 0:
        return 0.0
    return float(np.linalg.norm(r)) if norm == L2 else float(np.max(np.abs(r)))


class EstimationProblem(abc.ABC):
    """Contract every concrete problem implements.

    `measurement_count` is m; `residual_dof` is the degrees of freedom d of a
    single measurement's noise (it sets the chi-square model of squared
    residuals).  `weighted_solve` with all-ones weights must equal the plain
    least-squares solution, and a zero weight must make that measurement
    irrelevant to the returned estimate.
    """

    @property
    @abc.abstractmethod
    def measurement_count(self) -> int:
        ...

    @property
    @abc.abstractmethod
    def residual_dof(self) -> int:
        ...

    @abc.abstractmethod
    def residuals(self, x) -> np.ndarray:
        """Vector of m non-negative residuals r(y_i, x)."""

    @abc.abstractmethod
    def weighted_solve(self, weights) -> object:
        """Estimate minimizing sum_i w_i r^2(y_i, x) over the problem domain."""


@dataclass(frozen=True)
class TraceRecord:
    """One solver iteration: the active threshold (epsilon, the norm bound, or
    mu for the graduated solvers), the inlier count, and sum r^2 over inliers."""

    iteration: int
    threshold: float
    inlier_count: int
    sq_residual_sum: float


@dataclass
class RobustEstimate:
    """Solver output.

    `inlier_set` is sorted; `weights` is binary for the trimming solvers and
    the final (possibly snapped) weight vector for the graduated ones.  The
    trace always ends with a record matching the returned state — for the
    threshold-free solvers, which return a selection made a few iterations
    before the stopping test fired, a closing record repeating that selection
    is appended.  `converged` is False when the iteration cap was hit.
    """

    estimate: object
    inlier_set: np.ndarray
    weights: np.ndarray
    trace: list
    converged: bool


def _positive(name, value):
    if value <= 0:
        raise ConfigError(f"{name} must be positive, got {value}")


@dataclass
class AdaptConfig:
    """Adaptive-trimming parameters.

    `tau` bounds the residual norm over the inlier set; it may be a scalar or
    a callable of the inlier count (the chi-square recipe scales with n).
    `theta` bounds the change of the inlier squared-residual sum between
    iterations; scalar or callable of the two inlier counts.
    """

    tau: object
    theta: object
    norm: str = L2
    thr_discount: float = 0.99
    samples_to_converge: int = 3
    max_iterations: int = 1000

    def __post_init__(self):
        if self.norm not in _NORMS:
            raise ConfigError(f"norm must be one of {_NORMS}, got {self.norm!r}")
        if not 0.0 < self.thr_discount < 1.0:
            raise ConfigError(f"thr_discount must be in (0,1), got {self.thr_discount}")
        _positive("samples_to_converge", self.samples_to_converge)
        _positive("max_iterations", self.max_iterations)

    def tau_at(self, n):
        return self.tau(n) if callable(self.tau) else self.tau

    def theta_at(self, n1, n2):
        return self.theta(n1, n2) if callable(self.theta) else self.theta


@dataclass
class GncConfig:
    """Graduated non-convexity parameters; `epsilon` is the inlier threshold."""

    epsilon: float
    mu_update_factor: float = 1.4
    max_iterations: int = 1000
    mu_floor: float = MU_FLOOR
    binary_tol: float = BINARY_TOL

    def __post_init__(self):
        _positive("epsilon", self.epsilon)
        if self.mu_update_factor <= 1.0:
            raise ConfigError(f"mu_update_factor must exceed 1, got {self.mu_update_factor}")
        _positive("max_iterations", self.max_iterations)
        _positive("mu_floor", self.mu_floor)
        _positive("binary_tol", self.binary_tol)


@dataclass
class AdaptMintConfig:
    """Threshold-free trimming parameters (no tau/theta needed)."""

    thr_discount: float = 0.99
    samples_to_converge: int = 5
    window_size: int = 3
    converg_thr: float = 1e-4
    max_iterations: int = 1000

    def __post_init__(self):
        if not 0.0 < self.thr_discount < 1.0:
            raise ConfigError(f"thr_discount must be in (0,1), got {self.thr_discount}")
        _positive("samples_to_converge", self.samples_to_converge)
        _positive("window_size", self.window_size)
        _positive("converg_thr", self.converg_thr)
        _positive("max_iterations", self.max_iterations)


@dataclass
class GncMintConfig:
    """Threshold-free graduated non-convexity parameters.

    Only bounds on the unknown inlier threshold are needed.  `residual_dof`
    overrides the problem's own value when set (e.g. to score whitened
    residuals against a different chi-square model).
    """

    noise_up_bnd: float
    noise_low_bnd: float
    mu_update_factor: float = 1.96
    samples_to_converge: int = 2
    max_iterations: int = 1000
    residual_dof: int = None
    mu_floor: float = MU_FLOOR
    binary_tol: float = BINARY_TOL

    def __post_init__(self):
        if not 0.0 <= self.noise_low_bnd < self.noise_up_bnd:
            raise ConfigError(
                f"need noise_up_bnd > noise_low_bnd >= 0, got "
                f"({self.noise_up_bnd}, {self.noise_low_bnd})"
            )
        if self.mu_update_factor <= 1.0:
            raise ConfigError(f"mu_update_factor must exceed 1, got {self.mu_update_factor}")
        _positive("samples_to_converge", self.samples_to_converge)
        _positive("max_iterations", self.max_iterations)


# ---------------------------------------------------------------------------
# greedy removal
# ---------------------------------------------------------------------------

def solve_greedy(problem, bound, norm=L2):
    """Remove the largest residual until ‖r over the survivors‖_norm ≤ bound.

    Re-solves after every removal and never re-admits a removed measurement.
    With norm='linf' the bound is the per-measurement inlier threshold; with
    'l2' it bounds the residual 2-norm of the surviving set.  Raises
    NoFeasibleSet if every measurement gets removed.
    """
    if bound < 0:
        raise ConfigError(f"bound must be non-negative, got {bound}")
    m = problem.measurement_count
    active = np.ones(m, dtype=bool)
    trace = []
    t = 0
    while active.any():
        w = active.astype(float)
        x = problem.weighted_solve(w)
        r = problem.residuals(x)
        r_act = r[active]
        trace.append(TraceRecord(t, bound, int(active.sum()), float(r_act @ r_act)))
        if residual_norm(r_act, norm) <= bound:
            return RobustEstimate(x, np.flatnonzero(active), w, trace, True)
        worst = np.flatnonzero(active)[int(np.argmax(r_act))]
        active[worst] = False
        t += 1
    raise NoFeasibleSet(f"norm bound {bound} unreachable: all {m} measurements removed")


# ---------------------------------------------------------------------------
# adaptive trimming
# ---------------------------------------------------------------------------

def solve_adapt(problem, cfg):
    """Adaptive trimming: shrink the inlier threshold from the data itself.

    Starts from the least-squares fit over everything; each iteration keeps
    the measurements whose residual at the previous estimate is within the
    current threshold (so wrongly rejected measurements can return), re-solves,
    and discounts the threshold to just below the worst surviving residual.
    Stops once the inlier residual norm is below `cfg.tau` and the inlier
    squared-residual sum has stabilized (change below `cfg.theta`) for
    `samples_to_converge` consecutive iterations.
    """
    m = problem.measurement_count
    w = np.ones(m)
    x = problem.weighted_solve(w)
    r = problem.residuals(x)
    inliers = np.arange(m)
    sq_sum = float(r @ r)
    eps = cfg.thr_discount * float(r.max())
    trace = [TraceRecord(0, eps, m, sq_sum)]
    streak = 0
    converged = False
    for t in range(1, cfg.max_iterations + 1):
        keep = r <= eps
        if not keep.any():
            raise EmptyInlierSet(f"threshold {eps:.3g} rejected every measurement")
        new_inliers = np.flatnonzero(keep)
        w = keep.astype(float)
        x = problem.weighted_solve(w)
        r = problem.residuals(x)
        r_in = r[new_inliers]
        new_sq = float(r_in @ r_in)
        ok_norm = residual_norm(r_in, cfg.norm) < cfg.tau_at(new_inliers.size)
        ok_change = abs(new_sq - sq_sum) < cfg.theta_at(inliers.size, new_inliers.size)
        streak = streak + 1 if (ok_norm and ok_change) else 0
        inliers, sq_sum = new_inliers, new_sq
        trace.append(TraceRecord(t, eps, inliers.size, sq_sum))
        if streak >= cfg.samples_to_converge:
            converged = True
            break
        eps = cfg.thr_discount * float(r_in.max())
    return RobustEstimate(x, inliers, w, trace, converged)


# ---------------------------------------------------------------------------
# graduated non-convexity
# ---------------------------------------------------------------------------

def gnc_weight_update(residuals, mu, epsilon):
    """Closed-form weight update of the graduated truncated-least-squares cost.

    w_i = 1 below ε√(μ/(μ+1)), 0 above ε√((μ+1)/μ), and
    ε√(μ(μ+1))/r_i − μ in between; continuous in r with values in [0, 1].
    """
    if mu <= 0 or epsilon <= 0:
        raise ConfigError("mu and epsilon must be positive")
    r = np.asarray(residuals, dtype=float)
    lo = epsilon * np.sqrt(mu / (mu + 1.0))
    hi = epsilon * np.sqrt((mu + 1.0) / mu)
    w = np.ones_like(r)
    w[r > hi] = 0.0
    mid = (r >= lo) & (r <= hi)
    w[mid] = epsilon * np.sqrt(mu * (mu + 1.0)) / r[mid] - mu
    return np.clip(w, 0.0, 1.0)


def gnc_mu_init(residuals, epsilon, floor=MU_FLOOR):
    """Initial graduation parameter ε²/(2·max r² − ε²).

    The formula starts the surrogate cost near its convex limit.  When every
    residual is already ≤ ε/√2 the denominator is non-positive and `floor`
    is returned instead (any tiny μ > 0 keeps the surrogate near-convex).
    """
    r = np.asarray(residuals, dtype=float)
    if r.size == 0:
        raise ConfigError("residuals must be non-empty")
    den = 2.0 * float(np.max(r * r)) - epsilon**2
    if den <= 0.0:
        return floor
    return epsilon**2 / den


def _is_binary(w, tol):
    return bool(np.all(np.minimum(w, 1.0 - w) <= tol))


def solve_gnc_tls(problem, cfg):
    """Graduated non-convexity for the truncated-least-squares cost.

    Alternates the closed-form weight update with the weighted solve while μ
    grows geometrically, which drives every weight to 0 or 1.  Once the
    weights are within `binary_tol` of binary they are snapped and the
    estimate re-solved on the support, so the returned estimate is exactly
    the least-squares fit of the selected inliers.
    """
    m = problem.measurement_count
    w = np.ones(m)
    x = problem.weighted_solve(w)
    r = problem.residuals(x)
    mu = gnc_mu_init(r, cfg.epsilon, cfg.mu_floor)
    trace = [TraceRecord(0, mu, m, float(r @ r))]
    converged = False
    for t in range(1, cfg.max_iterations + 1):
        w = gnc_weight_update(r, mu, cfg.epsilon)
        binary = _is_binary(w, cfg.binary_tol)
        if binary:
            w = (w > 0.5).astype(float)
            if not w.any():
                raise EmptyInlierSet("weights binarized with empty support")
        x = problem.weighted_solve(w)
        r = problem.residuals(x)
        sup = np.flatnonzero(w > 0.5)
        trace.append(TraceRecord(t, mu, sup.size, float(r[sup] @ r[sup])))
        if binary:
            converged = True
            break
        mu *= cfg.mu_update_factor
    return RobustEstimate(x, np.flatnonzero(w > 0.5), w, trace, converged)


# ---------------------------------------------------------------------------
# threshold-free variants
# ---------------------------------------------------------------------------

def _sample_std(values):
    v = np.asarray(values, dtype=float)
    return 0.0 if v.size < 2 else float(np.std(v, ddof=1))


def solve_adapt_mint(problem, cfg=None):
    """Adaptive trimming without the stopping thresholds.

    Runs the same inlier/estimate/threshold updates as `solve_adapt`, but
    stops by watching the two-cluster separation of ALL residuals (normalized
    by its initial value): when its moving standard deviation over the last
    `window_size` iterations stays below `converg_thr` for
    `samples_to_converge` consecutive iterations, the residual distribution
    has stabilized.  Returns the inlier set from `samples_to_converge`
    iterations before the test fired (the sets after that point are what the
    quiet period certified).
    """
    cfg = cfg or AdaptMintConfig()
    m = problem.measurement_count
    w = np.ones(m)
    x = problem.weighted_solve(w)
    r = problem.residuals(x)
    delta0 = clusters_separation(r)
    if delta0 == 0.0:
        raise DegenerateClusters("all residuals coincide at the least-squares fit")
    eps = cfg.thr_discount * float(r.max())
    sets = [np.arange(m)]
    trace = [TraceRecord(0, eps, m, float(r @ r))]
    deltas, sigmas = [], []
    S = cfg.samples_to_converge
    converged = False
    for t in range(1, cfg.max_iterations + 1):
        keep = r <= eps
        if not keep.any():
            raise EmptyInlierSet(f"threshold {eps:.3g} rejected every measurement")
        inliers = np.flatnonzero(keep)
        w = keep.astype(float)
        x = problem.weighted_solve(w)
        r = problem.residuals(x)
        r_in = r[inliers]
        sets.append(inliers)
        trace.append(TraceRecord(t, eps, inliers.size, float(r_in @ r_in)))
        eps = cfg.thr_discount * float(r_in.max())
        deltas.append(clusters_separation(r) / delta0)
        sigmas.append(_sample_std(deltas[-cfg.window_size:]))
        if t > S and all(s < cfg.converg_thr for s in sigmas[t - S - 1:t - 1]):
            converged = True
            break
    if not converged:
        return RobustEstimate(x, sets[-1], w, trace, False)
    chosen = sets[t - S]
    w = np.zeros(m)
    w[chosen] = 1.0
    r_chosen = r[chosen]
    trace.append(TraceRecord(t + 1, trace[t - S].threshold, chosen.size,
                             float(r_chosen @ r_chosen)))
    return RobustEstimate(x, chosen, w, trace, True)


def solve_gnc_mint(problem, cfg):
    """Graduated non-convexity without a known inlier threshold.

    Repeatedly runs the graduated weight/estimate updates with a guessed
    threshold, starting from `noise_up_bnd`.  Each time the weights binarize,
    the inlier residuals are scored against the chi-square model
    (`fit_chi`) and the threshold guess is bisected toward the largest
    residual still classified as inlier.  Stops when the score repeats
    exactly, worsens `samples_to_converge` times against the best seen, or
    the threshold stalls / drops below `noise_low_bnd`; returns the stashed
    solution with the best (lowest) score.
    """
    m = problem.measurement_count
    dof = cfg.residual_dof if cfg.residual_dof is not None else problem.residual_dof
    eps = cfg.noise_up_bnd
    w0 = np.ones(m)
    x0 = problem.weighted_solve(w0)
    r0 = problem.residuals(x0)
    mu0 = gnc_mu_init(r0, eps, cfg.mu_floor)
    x, r, mu, w = x0, r0, mu0, w0
    trace = [TraceRecord(0, eps, m, float(r0 @ r0))]
    scores, stash = [], []
    worsened = 0
    converged = False
    for t in range(1, cfg.max_iterations + 1):
        w = gnc_weight_update(r, mu, eps)
        mu *= cfg.mu_update_factor
        if not _is_binary(w, cfg.binary_tol):
            x = problem.weighted_solve(w)
            r = problem.residuals(x)
            sup = np.flatnonzero(w > 0.5)
            trace.append(TraceRecord(t, eps, sup.size, float(r[sup] @ r[sup])))
            continue
        # converged for the current threshold guess: snap, re-solve, score
        w = (w > 0.5).astype(float)
        if not w.any():
            if stash:
                converged = True
                break
            raise EmptyInlierSet("weights binarized with empty support")
        x = problem.weighted_solve(w)
        r = problem.residuals(x)
        inliers = np.flatnonzero(w > 0.5)
        r_in = r[inliers]
        sq = float(r_in @ r_in)
        trace.append(TraceRecord(t, eps, inliers.size, sq))
        score = fit_chi(r_in, dof).statistic if inliers.size >= 2 else np.inf
        scores.append(score)
        stash.append((x, w.copy(), inliers, sq, eps))
        if len(scores) > 1 and score == scores[-2]:
            converged = True
            break
        if score > min(scores):
            worsened += 1
            if worsened == cfg.samples_to_converge:
                converged = True
                break
        else:
            worsened = 0
        below = r_in[r_in < eps]
        if below.size == 0:
            converged = True  # threshold can no longer decrease
            break
        eps_next = 0.5 * (eps + float(below.max()))
        if eps_next == eps or eps_next < cfg.noise_low_bnd:
            converged = True
            break
        eps = eps_next
        mu, w, x, r = mu0, w0, x0, r0
    if not stash:  # never binarized within the iteration budget
        sup = np.flatnonzero(w > 0.5)
        return RobustEstimate(x, sup, w, trace, False)
    best = int(np.argmin(scores))
    x_b, w_b, inl_b, sq_b, eps_b = stash[best]
    trace.append(TraceRecord(trace[-1].iteration + 1, eps_b, inl_b.size, sq_b))
    return RobustEstimate(x_b, inl_b, w_b, trace, converged)
