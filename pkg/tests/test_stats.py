"""Chi-square quantiles, goodness-of-fit scoring, and cluster separation."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as scipy_stats

from robest.errors import InsufficientSamples, TooFew
from robest.stats import (
    abs_chi_diff_quantile,
    chi2_inv,
    clusters_separation,
    cramer_von_mises,
    fit_chi,
    gamma_cdf,
    inlier_threshold,
    residual_norm_bound,
    sq_norm_change_bound,
)


# ---------------------------------------------------------------------------
# chi2_inv
# ---------------------------------------------------------------------------

def test_chi2_inv_reference_values():
    assert chi2_inv(0.99, 3) == pytest.approx(11.3449, abs=1e-3)
    assert np.sqrt(chi2_inv(0.99, 3)) == pytest.approx(3.3682, abs=1e-4)
    assert np.sqrt(chi2_inv(0.99, 6)) == pytest.approx(4.10, abs=0.01)


def test_chi2_inv_round_trip():
    # CDF of chi^2_d is Gamma(d/2, scale=2)
    for dof in range(1, 13):
        for p in (0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99):
            q = chi2_inv(p, dof)
            assert gamma_cdf(q, dof / 2.0, 2.0) == pytest.approx(p, abs=1e-8)


def test_chi2_inv_matches_scipy():
    for dof in (1, 2, 3, 6, 12):
        for p in (0.05, 0.5, 0.99):
            assert chi2_inv(p, dof) == pytest.approx(
                scipy_stats.chi2.ppf(p, dof), rel=1e-10)


def test_chi2_inv_rejects_bad_arguments():
    with pytest.raises(ValueError):
        chi2_inv(0.0, 3)
    with pytest.raises(ValueError):
        chi2_inv(1.0, 3)
    with pytest.raises(ValueError):
        chi2_inv(0.5, 0)


def test_inlier_threshold_recipe():
    sigma = np.sqrt(1e-5)
    assert inlier_threshold(sigma, 2) == pytest.approx(0.0096, abs=1e-4)
    assert inlier_threshold(1.0, 3) == pytest.approx(np.sqrt(chi2_inv(0.99, 3)))


# ---------------------------------------------------------------------------
# gamma_cdf
# ---------------------------------------------------------------------------

def test_gamma_cdf_basics():
    assert gamma_cdf(0.0, 1.5, 2.0) == 0.0
    # Gamma(1, scale) is Exp(scale): median at scale * ln 2
    assert gamma_cdf(3.0 * np.log(2.0), 1.0, 3.0) == pytest.approx(0.5, abs=1e-12)
    out = gamma_cdf(np.array([0.1, 1.0, 10.0]), 2.0, 1.0)
    assert out.shape == (3,)
    assert np.all(np.diff(out) > 0)


def test_gamma_cdf_rejects_bad_arguments():
    with pytest.raises(ValueError):
        gamma_cdf(-0.1, 1.0, 1.0)
    with pytest.raises(ValueError):
        gamma_cdf(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        gamma_cdf(1.0, 1.0, -1.0)


# ---------------------------------------------------------------------------
# cramer_von_mises
# ---------------------------------------------------------------------------

def test_cvm_single_sample_floor():
    # one sample whose CDF value hits the grid point 1/2 exactly
    assert cramer_von_mises([7.0], lambda x: np.full_like(x, 0.5)) == \
        pytest.approx(1.0 / 12.0, abs=1e-15)


def test_cvm_exact_quantiles_attain_floor():
    # samples at the (2i-1)/(2n) quantiles of the reference law
    n = 10
    grid = (2.0 * np.arange(1, n + 1) - 1.0) / (2.0 * n)
    samples = scipy_stats.norm.ppf(grid)
    stat = cramer_von_mises(samples, scipy_stats.norm.cdf)
    assert stat == pytest.approx(1.0 / (12.0 * n), abs=1e-12)


def test_cvm_empty_sample_raises():
    with pytest.raises(InsufficientSamples):
        cramer_von_mises([], scipy_stats.norm.cdf)


def test_cvm_prefers_the_true_law():
    rng = np.random.default_rng(7)
    x = rng.chisquare(3, 200)
    right = cramer_von_mises(x, lambda v: gamma_cdf(v, 1.5, 2.0))
    wrong = cramer_von_mises(x, lambda v: gamma_cdf(v, 0.5, 2.0))
    assert right < wrong


def test_cvm_depends_only_on_cdf_values():
    # statistic is invariant under a strictly increasing reparametrization
    rng = np.random.default_rng(11)
    x = rng.exponential(2.0, 50)
    base = cramer_von_mises(x, lambda v: gamma_cdf(v, 1.0, 2.0))
    mapped = cramer_von_mises(x**2, lambda v: gamma_cdf(np.sqrt(v), 1.0, 2.0))
    assert mapped == pytest.approx(base, abs=1e-12)


# ---------------------------------------------------------------------------
# fit_chi
# ---------------------------------------------------------------------------

def test_fit_chi_sigma2_estimate():
    r = np.array([1.0, 2.0, 3.0])
    score = fit_chi(r, dof=2)
    assert score.estimated_sigma2 == pytest.approx(14.0 / (2 * 2))


def test_fit_chi_all_zero_is_perfect():
    score = fit_chi(np.zeros(5), dof=3)
    assert score.statistic == 0.0
    assert score.estimated_sigma2 == 0.0


def test_fit_chi_rejects_tiny_samples():
    with pytest.raises(InsufficientSamples):
        fit_chi([1.0], dof=3)
    with pytest.raises(ValueError):
        fit_chi([1.0, 2.0], dof=0)


@given(st.floats(min_value=1e-3, max_value=1e3))
def test_fit_chi_scale_invariance(c):
    r = np.array([0.3, 1.1, 0.7, 2.0, 0.05, 1.4])
    a = fit_chi(r, dof=3)
    b = fit_chi(c * r, dof=3)
    assert b.statistic == pytest.approx(a.statistic, abs=1e-10)
    assert b.estimated_sigma2 == pytest.approx(c * c * a.estimated_sigma2, rel=1e-12)


def test_fit_chi_detects_contamination():
    rng = np.random.default_rng(3)
    sigma = 0.1
    clean = sigma * np.sqrt(rng.chisquare(3, 100))
    dirty = clean.copy()
    dirty[:30] += 5.0
    assert fit_chi(clean, 3).statistic < fit_chi(dirty, 3).statistic


# ---------------------------------------------------------------------------
# clusters_separation
# ---------------------------------------------------------------------------

def test_clusters_separation_reference_values():
    assert clusters_separation([1.0, 1.0, 1.0, 9.0, 9.0]) == pytest.approx(8.0)
    assert clusters_separation([2.0, 5.0]) == pytest.approx(3.0)
    assert clusters_separation([4.0, 4.0, 4.0]) == pytest.approx(0.0)


def test_clusters_separation_shift_and_scale():
    v = np.array([0.1, 0.2, 3.0, 3.3, 0.15])
    base = clusters_separation(v)
    assert clusters_separation(v + 10.0) == pytest.approx(base, abs=1e-12)
    assert clusters_separation(4.0 * v) == pytest.approx(4.0 * base, rel=1e-12)


def test_clusters_separation_too_few():
    with pytest.raises(TooFew):
        clusters_separation([1.0])


def _brute_force_separation(values):
    z = np.sort(np.asarray(values, dtype=float))
    best_scatter, best_gap = np.inf, None
    for k in range(1, z.size):
        left, right = z[:k], z[k:]
        scatter = np.sum((left - left.mean()) ** 2) + np.sum((right - right.mean()) ** 2)
        if scatter < best_scatter - 1e-15:
            best_scatter = scatter
            best_gap = right.mean() - left.mean()
    return best_gap


@given(st.lists(st.floats(min_value=-50, max_value=50), min_size=2, max_size=12))
def test_clusters_separation_matches_brute_force(values):
    assert clusters_separation(values) == pytest.approx(
        _brute_force_separation(values), abs=1e-8)


# ---------------------------------------------------------------------------
# abs_chi_diff_quantile
# ---------------------------------------------------------------------------

def test_abs_chi_diff_quantile_is_deterministic():
    a = abs_chi_diff_quantile(0.05, 6, 4, 1.0)
    b = abs_chi_diff_quantile(0.05, 6, 4, 1.0)
    assert a == b


def test_abs_chi_diff_quantile_monotone_in_p():
    qs = [abs_chi_diff_quantile(p, 5, 3) for p in (0.05, 0.25, 0.5, 0.75, 0.95)]
    assert all(a <= b for a, b in zip(qs, qs[1:]))


def test_abs_chi_diff_quantile_sigma2_scaling_is_exact():
    unit = abs_chi_diff_quantile(0.05, 8, 6, 1.0)
    assert abs_chi_diff_quantile(0.05, 8, 6, 2.5) == pytest.approx(
        2.5 * unit, rel=1e-15)


def test_abs_chi_diff_quantile_zero_dof_degenerates():
    assert abs_chi_diff_quantile(0.5, 0, 0) == 0.0
    # with one term gone the statistic is the chi-square sample itself
    for p in (0.05, 0.5, 0.95):
        assert abs_chi_diff_quantile(p, 4, 0) == pytest.approx(
            chi2_inv(p, 4), rel=0.02)


def test_abs_chi_diff_quantile_rejects_bad_arguments():
    with pytest.raises(ValueError):
        abs_chi_diff_quantile(0.0, 3, 3)
    with pytest.raises(ValueError):
        abs_chi_diff_quantile(0.5, -1, 3)


# ---------------------------------------------------------------------------
# recipe factories
# ---------------------------------------------------------------------------

def test_residual_norm_bound_composes():
    bound = residual_norm_bound(0.05, 3)
    assert bound(4) == pytest.approx(0.05 * np.sqrt(chi2_inv(0.99, 12)))


def test_sq_norm_change_bound_composes():
    bound = sq_norm_change_bound(0.25, 2, p=0.05)
    assert bound(5, 4) == pytest.approx(
        np.sqrt(abs_chi_diff_quantile(0.05, 10, 8, 0.25)))
