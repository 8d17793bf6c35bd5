"""Statistical utilities used by the robust solvers.

Chi-square quantiles and the gamma CDF back the standard parameter recipes
(inlier thresholds and residual-norm bounds at a confidence level), the
Cramer-von Mises statistic scores how well squared residuals fit the
chi-square model of inlier noise, and the two-cluster separation drives the
threshold-free trimming loop's stopping rule.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import InsufficientSamples, TooFew

ABS_CHI_DIFF_DRAWS = 200_000


def chi2_inv(p, dof):
    """Inverse CDF of the chi-square distribution with `dof` degrees of freedom.

    Thin wrapper over the inverse regularized lower incomplete gamma function;
    relative accuracy is far below the 1e-10 the callers rely on.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    if dof <= 0:
        raise ValueError(f"dof must be positive, got {dof}")
    return 2.0 * special.gammaincinv(dof / 2.0, p)


def gamma_cdf(x, shape, scale):
    """CDF of the Gamma(shape, scale) distribution, vectorized in x."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("gamma_cdf requires x >= 0")
    if shape <= 0 or scale <= 0:
        raise ValueError("shape and scale must be positive")
    return special.gammainc(shape, x / scale)


def cramer_von_mises(samples, cdf):
    """Cramer-von Mises statistic of `samples` against a reference CDF.

    omega^2 = 1/(12n) + sum_i (cdf(x_(i)) - (2i-1)/(2n))^2, with x_(i) the
    sorted samples.  `cdf` must accept a numpy array.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise InsufficientSamples("cramer_von_mises requires a non-empty sample")
    u = np.asarray(cdf(x), dtype=float)
    grid = (2.0 * np.arange(1, n + 1) - 1.0) / (2.0 * n)
    return 1.0 / (12.0 * n) + float(np.sum((u - grid) ** 2))


@dataclass(frozen=True)
class FitScore:
    """Chi-square fitness of a residual sample: smaller statistic = better fit."""

    statistic: float
    estimated_sigma2: float


def fit_chi(residuals, dof):
    """Score how well squared residuals fit a scaled chi-square distribution.

    The noise scale is estimated as sigma^2 = sum(r^2) / ((n-1) * dof), and the
    squared residuals are tested against Gamma(dof/2, 2 sigma^2), i.e. the
    sigma^2 chi^2_dof law implied by Gaussian inlier noise.  The statistic is
    scale invariant: multiplying all residuals by c > 0 leaves it unchanged.
    """
    r = np.asarray(residuals, dtype=float)
    n = r.size
    if n < 2:
        raise InsufficientSamples(f"fit_chi requires at least 2 residuals, got {n}")
    if dof <= 0:
        raise ValueError(f"dof must be positive, got {dof}")
    sq = r * r
    total = float(np.sum(sq))
    if total == 0.0:
        # all-zero residuals: perfect fit by convention
        return FitScore(statistic=0.0, estimated_sigma2=0.0)
    sigma2 = total / ((n - 1) * dof)
    stat = cramer_von_mises(sq, lambda x: gamma_cdf(x, dof / 2.0, 2.0 * sigma2))
    return FitScore(statistic=stat, estimated_sigma2=sigma2)


def clusters_separation(values):
    """Distance between the centroids of the best two-way split of `values`.

    Sorts ascending, picks the split minimizing the summed squared scatter
    (sum |v - mean|^2) of the two sides, and returns mean(right) - mean(left).
    Ties go to the smallest split index; a singleton side has zero scatter.
    """
    z = np.sort(np.asarray(values, dtype=float))
    l = z.size
    if l < 2:
        raise TooFew(f"clusters_separation requires at least 2 values, got {l}")
    csum = np.cumsum(z)
    csq = np.cumsum(z * z)
    total_sum, total_sq = csum[-1], csq[-1]
    i = np.arange(1, l)  # left part is z[:i]
    left_sum, left_sq = csum[:-1], csq[:-1]
    right_sum = total_sum - left_sum
    right_sq = total_sq - left_sq
    scatter = (left_sq - left_sum**2 / i) + (right_sq - right_sum**2 / (l - i))
    k = int(np.argmin(scatter))  # first minimum = smallest split index
    return float(right_sum[k] / (l - i[k]) - left_sum[k] / i[k])


@lru_cache(maxsize=None)
def _abs_chi_diff_quantile_unit(p, dof1, dof2, seed):
    rng = np.random.default_rng(seed)
    z1 = rng.chisquare(dof1, ABS_CHI_DIFF_DRAWS) if dof1 > 0 else np.zeros(ABS_CHI_DIFF_DRAWS)
    z2 = rng.chisquare(dof2, ABS_CHI_DIFF_DRAWS) if dof2 > 0 else np.zeros(ABS_CHI_DIFF_DRAWS)
    return float(np.quantile(np.abs(z1 - z2), p))


def abs_chi_diff_quantile(p, dof1, dof2, sigma2=1.0, seed=0):
    """p-quantile of |sigma^2 chi^2_dof1 - sigma^2 chi^2_dof2| by Monte Carlo.

    Deterministic for a fixed seed (200k draws, roughly 1% quantile accuracy).
    The sigma^2 factor is exact: draws are taken at unit scale and rescaled.
    A zero dof degenerates that term to 0, so e.g. dof2 = 0 reduces to the
    sigma^2-scaled chi-square quantile itself.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    if dof1 < 0 or dof2 < 0:
        raise ValueError("degrees of freedom must be non-negative")
    return sigma2 * _abs_chi_diff_quantile_unit(float(p), float(dof1), float(dof2), int(seed))


# ---------------------------------------------------------------------------
# parameter recipes: thresholds from the chi-square model of inlier noise
# ---------------------------------------------------------------------------

def inlier_threshold(sigma, dof, p=0.99):
    """Largest residual expected from noise alone: sigma * sqrt(chi2_inv(p, dof))."""
    return sigma * np.sqrt(chi2_inv(p, dof))


def residual_norm_bound(sigma, dof, p=0.99):
    """Bound on the residual 2-norm of n inliers, as a function of n.

    Returns a callable n -> sigma * sqrt(chi2_inv(p, n * dof)); the trimming
    loop evaluates it at the current inlier count.
    """
    def bound(n):
        return sigma * np.sqrt(chi2_inv(p, n * dof))

    return bound


def sq_norm_change_bound(sigma2, dof, p=0.05, seed=0):
    """Tolerated change of the inlier squared-residual sum between iterations.

    Returns a callable (n1, n2) -> square root of the p-quantile of
    |sigma^2 chi^2_{n1 dof} - sigma^2 chi^2_{n2 dof}|.  The square root
    deliberately inflates the tolerance at sub-unit noise scales: against the
    raw quantile, shedding even a single clean measurement moves the squared
    sum by more than the bound and the trimming loop never settles.
    """
    def bound(n1, n2):
        return math.sqrt(
            abs_chi_diff_quantile(p, n1 * dof, n2 * dof, sigma2, seed))

    return bound
