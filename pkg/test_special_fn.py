"""Tests for the normal, Mills-ratio and incomplete-gamma functions."""
import math

import mpmath
import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import optimize

from boundbayes import special_fn
from boundbayes.exceptions import DomainError

mpmath.mp.dps = 50


def _phi_oracle(t: float) -> mpmath.mpf:
    return mpmath.erfc(-mpmath.mpf(t) / mpmath.sqrt(2)) / 2


def _mills_oracle(t: float) -> float:
    t = mpmath.mpf(t)
    return float(mpmath.npdf(t) / _phi_oracle(t))


def test_std_normal_pdf_values():
    assert special_fn.std_normal_pdf(0.0) == pytest.approx(0.3989422804014327, rel=1e-15)
    assert special_fn.std_normal_pdf(1.0) == pytest.approx(0.24197072451914337, rel=1e-15)
    assert special_fn.std_normal_pdf(-1.0) == special_fn.std_normal_pdf(1.0)


def test_std_normal_cdf_values():
    assert special_fn.std_normal_cdf(0.0) == 0.5
    assert special_fn.std_normal_cdf(math.inf) == 1.0
    assert special_fn.std_normal_cdf(-5.0) == pytest.approx(2.866515718791939e-7, rel=1e-14)


def test_std_normal_cdf_relative_accuracy_in_lower_tail():
    grid = np.linspace(-37.0, 8.0, 451)
    oracle = np.array([float(_phi_oracle(t)) for t in grid])
    assert_allclose(special_fn.std_normal_cdf(grid), oracle, rtol=5e-14)


def test_std_normal_cdf_symmetry():
    grid = np.linspace(-8.0, 8.0, 161)
    assert_allclose(special_fn.std_normal_cdf(-grid), 1.0 - special_fn.std_normal_cdf(grid), atol=1e-15)


def test_std_normal_logcdf_far_tail():
    assert special_fn.std_normal_logcdf(-50.0) == pytest.approx(float(mpmath.log(_phi_oracle(-50.0))), rel=1e-13)


def test_inverse_mills_special_values():
    assert special_fn.inverse_mills(0.0) == pytest.approx(math.sqrt(2.0 / math.pi), rel=1e-15)
    assert special_fn.inverse_mills(60.0) == 0.0
    value = special_fn.inverse_mills(-40.0)
    assert value >= 40.0
    assert value == pytest.approx(_mills_oracle(-40.0), rel=1e-12)
    assert value == pytest.approx(40.02497, abs=1e-4)


def test_inverse_mills_matches_high_precision_oracle():
    grid = np.linspace(-40.0, 40.0, 1000)
    values = special_fn.inverse_mills(grid)
    # beyond ~37 phi(t) is subnormal or zero in double precision
    representable = grid <= 37.0
    oracle = np.array([_mills_oracle(t) for t in grid[representable]])
    assert_allclose(values[representable], oracle, rtol=1e-12)
    assert np.all(values[~representable] < 1e-290)


def test_inverse_mills_shape_properties():
    grid = np.linspace(-40.0, 40.0, 1000)
    r = special_fn.inverse_mills(grid)
    assert np.all(r[grid <= 37.0] > 0.0)
    assert np.all(r >= -grid)
    assert np.all(np.diff(r) <= 0.0)
    second = r[2:] - 2.0 * r[1:-1] + r[:-2]
    assert np.all(second >= -1e-12 * np.maximum(r[1:-1], 1e-300))


def test_inverse_mills_ratio_tends_to_minus_one():
    assert special_fn.inverse_mills(-1e6) / -1e6 == pytest.approx(-1.0, rel=1e-10)


def test_mills_gap_series_matches_oracle():
    for t in (-30.0, -35.0, -100.0, -1e4):
        oracle = mpmath.mpf(t) + mpmath.npdf(t) / _phi_oracle(t)
        assert special_fn.mills_gap(t) == pytest.approx(float(oracle), rel=1e-12)


def test_mills_gap_continuous_at_cutoff():
    left = special_fn.mills_gap(special_fn.MILLS_ASYMPTOTIC_CUTOFF)
    right = special_fn.mills_gap(np.nextafter(special_fn.MILLS_ASYMPTOTIC_CUTOFF, 0.0))
    assert left == pytest.approx(right, rel=1e-10)


def test_inverse_mills_deriv_values_and_limits():
    assert special_fn.inverse_mills_deriv(0.0) == pytest.approx(-2.0 / math.pi, rel=1e-14)
    assert special_fn.inverse_mills_deriv(-1e4) == pytest.approx(-1.0, abs=1e-6)
    assert special_fn.inverse_mills_deriv(30.0) == pytest.approx(0.0, abs=1e-100)


def test_inverse_mills_deriv_range_and_finite_differences():
    grid = np.linspace(-40.0, 30.0, 701)
    deriv = special_fn.inverse_mills_deriv(grid)
    assert np.all(deriv > -1.0)
    assert np.all(deriv <= 0.0)
    h = 1e-5
    central = (special_fn.inverse_mills(grid + h) - special_fn.inverse_mills(grid - h)) / (2.0 * h)
    assert_allclose(deriv, central, atol=1e-6)


def test_t_fn_values():
    assert special_fn.t_fn(0.0) == pytest.approx(2.0 / math.pi, rel=1e-14)
    assert special_fn.t_fn(5.0) == pytest.approx(1.4867e-5, rel=1e-4)
    grid = np.linspace(-40.0, -1.0, 400)
    assert np.all(special_fn.t_fn(grid) < 0.0)


def test_t_fn_single_sign_change():
    grid = np.linspace(-20.0, 20.0, 4001)
    values = special_fn.t_fn(grid)
    signs = np.sign(values[values != 0.0])
    assert np.count_nonzero(np.diff(signs)) == 1
    assert signs[0] < 0.0 < signs[-1]
    r = special_fn.inverse_mills(grid)
    assert np.all(np.diff(r + 2.0 * grid) > 0.0)


def test_t_fn_deriv_values():
    r0 = math.sqrt(2.0 / math.pi)
    assert special_fn.t_fn_deriv(0.0) == pytest.approx(2.0 * r0 * (1.0 - 2.0 / math.pi), rel=1e-14)
    assert special_fn.t_fn_deriv(3.0) <= special_fn.t_fn_deriv(-3.0)


def test_t_fn_deriv_vanishes_where_gap_is_one():
    s0 = optimize.brentq(lambda s: special_fn.mills_gap(s) - 1.0, 0.0, 2.0, xtol=1e-15)
    assert special_fn.t_fn_deriv(s0) == pytest.approx(0.0, abs=1e-12)


def test_t_fn_deriv_finite_differences_and_symmetry_bound():
    grid = np.linspace(-10.0, 10.0, 201)
    h = 1e-5
    central = (special_fn.t_fn(grid + h) - special_fn.t_fn(grid - h)) / (2.0 * h)
    assert_allclose(special_fn.t_fn_deriv(grid), central, atol=1e-6)
    positive = np.linspace(0.01, 20.0, 500)
    assert np.all(special_fn.t_fn_deriv(positive) <= special_fn.t_fn_deriv(-positive) + 1e-15)


def test_gamma_cdf_exponential_case():
    x = np.linspace(0.0, 10.0, 21)
    assert_allclose(special_fn.gamma_cdf(1.0, 2.5, x), -np.expm1(-2.5 * x), rtol=1e-13, atol=1e-300)


def test_gamma_cdf_zero():
    assert special_fn.gamma_cdf(2.5, 1.0, 0.0) == 0.0


@pytest.mark.parametrize("k", [1, 2, 5, 12])
def test_gamma_cdf_matches_poisson_sum(k):
    rate = 1.5
    for alpha in (0.1, 1.0, 4.0, 15.0):
        u = alpha * rate
        poisson_sum = math.fsum(math.exp(-u) * u**y / math.factorial(y) for y in range(k))
        assert special_fn.gamma_cdf(k, rate, alpha) == pytest.approx(1.0 - poisson_sum, abs=1e-12)
        assert special_fn.gamma_sf(k, rate, alpha) == pytest.approx(poisson_sum, rel=1e-12)


def test_gamma_sf_upper_tail_without_subtraction():
    oracle = float(mpmath.gammainc(3, 80, mpmath.inf, regularized=True))
    assert special_fn.gamma_sf(3.0, 1.0, 80.0) == pytest.approx(oracle, rel=1e-12)


def test_gamma_rejects_bad_arguments():
    with pytest.raises(DomainError):
        special_fn.gamma_cdf(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        special_fn.gamma_sf(1.0, -1.0, 1.0)
    with pytest.raises(DomainError):
        special_fn.gamma_cdf(1.0, 1.0, -0.5)


def test_nan_propagates():
    assert math.isnan(special_fn.std_normal_cdf(math.nan))
    assert math.isnan(special_fn.inverse_mills(math.nan))
    assert math.isnan(special_fn.t_fn(math.nan))
