"""Normal pdf/cdf, the inverse Mills ratio and its relatives, incomplete gamma.

All functions accept scalars or array-likes. Scalars come back as ``float``,
arrays as ``numpy.ndarray``. NaN in gives NaN out.
"""
import logging
import math
from typing import Union

import numpy as np
from numpy.typing import ArrayLike
from scipy import special

from boundbayes.exceptions import DomainError

logger = logging.getLogger(__name__)

RealOrArray = Union[float, np.ndarray]

SQRT2 = math.sqrt(2.0)
SQRT_2PI = math.sqrt(2.0 * math.pi)
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

# Below this point t + R(t) is taken from its asymptotic expansion.
MILLS_ASYMPTOTIC_CUTOFF = -30.0

# t + R(t) ~ sum_k a_k x**-(2k-1) with x = -t; from h' = x h + h**2 - 1.
_MILLS_GAP_SERIES = (1.0, -2.0, 10.0, -74.0, 706.0, -8162.0, 110410.0, -1708394.0)


def _as_array(t: ArrayLike) -> tuple[np.ndarray, bool]:
    arr = np.asarray(t, dtype=float)
    return arr, arr.ndim == 0


def _out(value: np.ndarray, scalar: bool) -> RealOrArray:
    if scalar:
        return float(value)
    return value


def _exp_neg_half_sq(t: np.ndarray) -> np.ndarray:
    """exp(-t**2 / 2) with the square split into an exact part and a small remainder."""
    with np.errstate(invalid="ignore", over="ignore"):
        hi = np.round(t * 16.0) / 16.0
        lo = t - hi
        value = np.exp(-0.5 * hi * hi) * np.exp(-0.5 * lo * (t + hi))
    return np.where(np.isinf(t), 0.0, value)


def std_normal_pdf(t: ArrayLike) -> RealOrArray:
    """Standard normal density."""
    arr, scalar = _as_array(t)
    return _out(_exp_neg_half_sq(arr) / SQRT_2PI, scalar)


def _lower_tail(arr: np.ndarray) -> np.ndarray:
    # Phi(-|t|) = erfcx(|t|/sqrt2) * exp(-t^2/2) / 2
    with np.errstate(invalid="ignore"):
        return 0.5 * special.erfcx(np.abs(arr) / SQRT2) * _exp_neg_half_sq(arr)


def std_normal_cdf(t: ArrayLike) -> RealOrArray:
    """Standard normal cdf through the scaled complementary error function."""
    arr, scalar = _as_array(t)
    tail = _lower_tail(arr)
    return _out(np.where(arr < 0.0, tail, 1.0 - tail), scalar)


def std_normal_logcdf(t: ArrayLike) -> RealOrArray:
    """log Phi(t), finite far into the lower tail."""
    arr, scalar = _as_array(t)
    return _out(special.log_ndtr(arr), scalar)


def inverse_mills(t: ArrayLike) -> RealOrArray:
    """R(t) = phi(t) / Phi(t).

    For t < 0 the exponentials cancel analytically and
    R(t) = sqrt(2/pi) / erfcx(-t/sqrt2), so no ratio of tiny numbers is formed.
    """
    arr, scalar = _as_array(t)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        negative = SQRT_2_OVER_PI / special.erfcx(-arr / SQRT2)
        nonnegative = _exp_neg_half_sq(arr) / SQRT_2PI / (1.0 - _lower_tail(arr))
    return _out(np.where(arr < 0.0, negative, nonnegative), scalar)


def _gap_series(x: np.ndarray) -> np.ndarray:
    y = 1.0 / (x * x)
    acc = np.zeros_like(x)
    for coef in reversed(_MILLS_GAP_SERIES):
        acc = acc * y + coef
    return acc / x


def mills_gap(t: ArrayLike) -> RealOrArray:
    """t + R(t), positive everywhere, computed without cancellation for t << 0."""
    arr, scalar = _as_array(t)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        direct = arr + inverse_mills(arr)
        series = _gap_series(-arr)
    value = np.where(arr <= MILLS_ASYMPTOTIC_CUTOFF, series, direct)
    return _out(value, scalar)


def inverse_mills_deriv(t: ArrayLike) -> RealOrArray:
    """R'(t) = -R(t) (t + R(t)); lies in (-1, 0)."""
    arr, scalar = _as_array(t)
    return _out(-inverse_mills(arr) * mills_gap(arr), scalar)


def t_fn(s: ArrayLike) -> RealOrArray:
    """T(s) = R(s) (R(s) + 2s), the integrand of the Stein risk difference."""
    arr, scalar = _as_array(s)
    r = inverse_mills(arr)
    return _out(r * (r + 2.0 * arr), scalar)


def t_fn_deriv(s: ArrayLike) -> RealOrArray:
    """T'(s) = 2 R(s) (1 - (s + R(s))**2)."""
    arr, scalar = _as_array(s)
    gap = mills_gap(arr)
    return _out(2.0 * inverse_mills(arr) * (1.0 - gap * gap), scalar)


def _check_gamma_args(shape: ArrayLike, rate: ArrayLike, x: ArrayLike) -> None:
    if np.any(np.asarray(shape) <= 0.0):
        raise DomainError(f"gamma shape must be positive, got {shape!r}")
    if np.any(np.asarray(rate) <= 0.0):
        raise DomainError(f"gamma rate must be positive, got {rate!r}")
    if np.any(np.asarray(x) < 0.0):
        raise DomainError(f"gamma argument must be nonnegative, got {x!r}")


def gamma_cdf(shape: ArrayLike, rate: ArrayLike, x: ArrayLike) -> RealOrArray:
    """Regularized lower incomplete gamma P(shape, rate * x)."""
    _check_gamma_args(shape, rate, x)
    value = special.gammainc(shape, np.multiply(rate, x))
    return _out(np.asarray(value), np.ndim(value) == 0)


def gamma_sf(shape: ArrayLike, rate: ArrayLike, x: ArrayLike) -> RealOrArray:
    """Regularized upper incomplete gamma Q(shape, rate * x), evaluated on the upper branch."""
    _check_gamma_args(shape, rate, x)
    value = special.gammaincc(shape, np.multiply(rate, x))
    return _out(np.asarray(value), np.ndim(value) == 0)
