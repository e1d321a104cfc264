"""Poisson model with an uncertain lower bound.

    X | theta ~ Poisson(theta)
    g1(theta) proportional to theta^(a-1) exp(-b theta),    a > 0, b > -1
    g2(alpha) proportional to alpha^(c-1) exp(-d alpha),    c > 0, d >= 0

The theta posterior is Gamma(a+x, 1+b) reweighted by the Gamma(c, d) cdf;
the alpha posterior is Gamma-type reweighted by a Gamma survival function and,
for integer a, a finite Gamma mixture with truncated negative binomial weights.
Weights are handled in log space so large counts do not overflow.
"""
import functools
import logging
import math
from typing import Any, Dict, List, Literal, Union

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import special

from boundbayes.exceptions import DomainError
from boundbayes.quadrature import NumericDensity

logger = logging.getLogger(__name__)

RealOrArray = Union[float, np.ndarray]
Method = Literal["auto", "closed", "mixture", "quadrature"]

# Upper posterior tail probability left outside the integration window.
_WINDOW_TAIL = 1e-18


def is_integer(value: float) -> bool:
    return abs(value - round(value)) < 1e-12


class PoissonPrior(BaseModel):
    """Hyperparameters (a, b, c, d). JSON key "c" maps to ``c_alpha``."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    a: float = Field(gt=0.0, allow_inf_nan=False)
    b: float = Field(default=0.0, gt=-1.0, allow_inf_nan=False)
    c_alpha: float = Field(alias="c", gt=0.0, allow_inf_nan=False)
    d: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)

    @property
    def theta_rate(self) -> float:
        return 1.0 + self.b

    @property
    def alpha_rate(self) -> float:
        return 1.0 + self.b + self.d

    @property
    def rho(self) -> float:
        return self.theta_rate / self.alpha_rate


class GammaMixture(BaseModel):
    """sum_y weights[y] * Gamma(shapes[y], rate)."""

    model_config = ConfigDict(frozen=True)

    weights: List[float]
    shapes: List[float]
    rate: float = Field(gt=0.0)

    @model_validator(mode="after")
    def _valid_weights(self) -> "GammaMixture":
        if len(self.weights) != len(self.shapes) or not self.weights:
            raise ValueError("weights and shapes must be nonempty and of equal length")
        if min(self.weights) < 0.0:
            raise ValueError("mixture weights must be nonnegative")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise ValueError("mixture weights must sum to one")
        return self

    def pdf(self, alpha: ArrayLike) -> RealOrArray:
        arr = np.asarray(alpha, dtype=float)
        shapes = np.asarray(self.shapes)[:, None]
        with np.errstate(divide="ignore"):
            log_w = np.log(np.asarray(self.weights))[:, None]
        flat = np.atleast_1d(arr).ravel()[None, :]
        log_terms = (
            log_w
            + special.xlogy(shapes - 1.0, flat)
            + shapes * math.log(self.rate)
            - self.rate * flat
            - special.gammaln(shapes)
        )
        value = np.exp(special.logsumexp(log_terms, axis=0))
        value = np.where(flat[0] < 0.0, 0.0, value).reshape(arr.shape)
        return float(value) if value.ndim == 0 else value

    def mean(self) -> float:
        return math.fsum(w * s for w, s in zip(self.weights, self.shapes)) / self.rate

    def var(self) -> float:
        second = math.fsum(w * s * (s + 1.0) for w, s in zip(self.weights, self.shapes))
        return second / self.rate**2 - self.mean() ** 2

    def as_dict(self) -> Dict[str, Any]:
        return {"weights": list(self.weights), "shapes": list(self.shapes), "rate": self.rate}


def _check_count(x: int) -> int:
    if isinstance(x, bool) or int(x) != x or x < 0:
        raise DomainError(f"the Poisson observation must be a nonnegative integer, got {x!r}")
    return int(x)


def posterior_upper_limit(prior: PoissonPrior, x: int) -> float:
    """Window end for both posteriors; each is stochastically below Gamma(a+x+c, 1+b)."""
    shape = prior.a + x + prior.c_alpha
    return float(special.gammainccinv(shape, _WINDOW_TAIL)) / prior.theta_rate


# ----------------------------------------------------------------------------
# theta
# ----------------------------------------------------------------------------


def _theta_log_kernel(prior: PoissonPrior, x: int):
    n = prior.a + x
    rate = prior.theta_rate

    def log_kernel(theta: np.ndarray) -> np.ndarray:
        base = special.xlogy(n - 1.0, theta) - rate * theta
        if prior.d == 0.0:
            return base + special.xlogy(prior.c_alpha, theta)
        with np.errstate(divide="ignore"):
            return base + np.log(special.gammainc(prior.c_alpha, prior.d * np.asarray(theta)))

    return log_kernel


@functools.lru_cache(maxsize=64)
def _theta_numeric(prior: PoissonPrior, x: int) -> NumericDensity:
    return NumericDensity(_theta_log_kernel(prior, x), 0.0, posterior_upper_limit(prior, x))


def _log_theta_normalizer(prior: PoissonPrior, n: float) -> float:
    """log of integral theta^(n-1) e^{-(1+b) theta} F_{c,d}(theta) for integer c.

    The integral is Gamma(n)/rate^n times P(Y >= c) for Y negative binomial
    with n successes and failure probability q = d/(rate+d); that tail is
    the regularized incomplete beta I_q(c, n).
    """
    rate = prior.theta_rate
    c = float(round(prior.c_alpha))
    log_lead = special.gammaln(n) - n * math.log(rate)
    q = prior.d / (rate + prior.d)
    tail = float(special.betainc(c, n, q))
    if tail > 0.0:
        return log_lead + math.log(tail)
    # I_q(c, n) underflowed; its leading term is P(Y = c)
    log_tail = (
        special.gammaln(n + c) - special.gammaln(n) - special.gammaln(c + 1.0)
        + c * math.log(q) + n * math.log1p(-q)
    )
    return log_lead + log_tail


def _theta_closed_available(prior: PoissonPrior) -> bool:
    return prior.d == 0.0 or is_integer(prior.c_alpha)


def _resolve_theta_method(prior: PoissonPrior, method: Method) -> str:
    if method == "auto":
        return "closed" if _theta_closed_available(prior) else "quadrature"
    if method == "closed" and not _theta_closed_available(prior):
        raise DomainError("the closed-form theta posterior needs d = 0 or an integer c")
    if method not in ("closed", "quadrature"):
        raise DomainError(f"unknown theta posterior method {method!r}")
    return method


def theta_posterior_pdf(prior: PoissonPrior, x: int, theta: ArrayLike, method: Method = "auto") -> RealOrArray:
    """pi1(theta | x) proportional to theta^(a+x-1) e^{-theta(1+b)} F_{c,d}(theta).

    Closed forms: d = 0 gives Gamma(a+x+c, 1+b); an integer c expands F_{c,d}
    into a finite signed sum of Gamma kernels (c = 1: 1 - e^{-d theta}).
    Otherwise the kernel is normalized by quadrature.
    """
    x = _check_count(x)
    arr = np.asarray(theta, dtype=float)
    resolved = _resolve_theta_method(prior, method)
    positive = arr > 0.0
    safe = np.where(positive, arr, 1.0)
    if resolved == "quadrature":
        value = _theta_numeric(prior, x).pdf(safe)
    elif prior.d == 0.0:
        shape = prior.a + x + prior.c_alpha
        rate = prior.theta_rate
        value = np.exp(
            special.xlogy(shape - 1.0, safe) - rate * safe + shape * math.log(rate) - special.gammaln(shape)
        )
    else:
        n = prior.a + x
        log_norm = _log_theta_normalizer(prior, n)
        value = np.exp(_theta_log_kernel(prior, x)(safe) - log_norm)
    value = np.where(positive, value, 0.0)
    return float(value) if value.ndim == 0 else value


def theta_posterior_mean(prior: PoissonPrior, x: int, method: Method = "auto") -> float:
    """E(theta | x); the closed form is a ratio of normalizers at a+x+1 and a+x."""
    x = _check_count(x)
    resolved = _resolve_theta_method(prior, method)
    if resolved == "quadrature":
        return _theta_numeric(prior, x).mean()
    if prior.d == 0.0:
        return (prior.a + x + prior.c_alpha) / prior.theta_rate
    n = prior.a + x
    return math.exp(_log_theta_normalizer(prior, n + 1.0) - _log_theta_normalizer(prior, n))


# ----------------------------------------------------------------------------
# alpha
# ----------------------------------------------------------------------------


def _alpha_log_kernel(prior: PoissonPrior, x: int):
    n = prior.a + x

    def log_kernel(alpha: np.ndarray) -> np.ndarray:
        arr = np.asarray(alpha, dtype=float)
        with np.errstate(divide="ignore"):
            tail = np.log(special.gammaincc(n, prior.theta_rate * arr))
        return special.xlogy(prior.c_alpha - 1.0, arr) - prior.d * arr + tail

    return log_kernel


@functools.lru_cache(maxsize=64)
def _alpha_numeric(prior: PoissonPrior, x: int) -> NumericDensity:
    return NumericDensity(_alpha_log_kernel(prior, x), 0.0, posterior_upper_limit(prior, x))


def _truncated_negbin_log_weights(c: float, rho: float, upper: int) -> np.ndarray:
    y = np.arange(upper + 1, dtype=float)
    log_w = special.gammaln(c + y) - special.gammaln(y + 1.0) + y * math.log(rho)
    return log_w - special.logsumexp(log_w)


def truncated_negbin_mean(c: float, rho: float, upper: int) -> float:
    """E(Y | Y <= upper) for P(Y = y) proportional to rho^y Gamma(c+y) / y!."""
    weights = np.exp(_truncated_negbin_log_weights(c, rho, upper))
    return float(np.dot(weights, np.arange(upper + 1)))


def _require_integer_a(prior: PoissonPrior) -> int:
    if not is_integer(prior.a):
        raise DomainError(f"the Gamma mixture form needs a positive integer a, got {prior.a}")
    return int(round(prior.a))


def alpha_posterior_mixture(prior: PoissonPrior, x: int) -> GammaMixture:
    """pi2(alpha | x) = sum_{y < x+a} p_y Gamma(c+y, 1+b+d), p_y proportional to rho^y Gamma(c+y)/y!."""
    x = _check_count(x)
    components = x + _require_integer_a(prior)
    weights = np.exp(_truncated_negbin_log_weights(prior.c_alpha, prior.rho, components - 1))
    weights = weights / math.fsum(weights)
    shapes = prior.c_alpha + np.arange(components, dtype=float)
    return GammaMixture(weights=weights.tolist(), shapes=shapes.tolist(), rate=prior.alpha_rate)


def _resolve_alpha_method(prior: PoissonPrior, method: Method) -> str:
    if method == "auto":
        return "mixture" if is_integer(prior.a) else "quadrature"
    if method not in ("mixture", "quadrature"):
        raise DomainError(f"unknown alpha posterior method {method!r}")
    return method


def alpha_posterior_pdf(prior: PoissonPrior, x: int, alpha: ArrayLike, method: Method = "auto") -> RealOrArray:
    """pi2(alpha | x) proportional to alpha^(c-1) e^{-d alpha} Fbar_{x+a, 1+b}(alpha)."""
    x = _check_count(x)
    arr = np.asarray(alpha, dtype=float)
    positive = arr > 0.0
    safe = np.where(positive, arr, 1.0)
    if _resolve_alpha_method(prior, method) == "mixture":
        value = np.asarray(alpha_posterior_mixture(prior, x).pdf(safe))
    else:
        value = _alpha_numeric(prior, x).pdf(safe)
    value = np.where(positive, value, 0.0)
    return float(value) if value.ndim == 0 else value


def alpha_bayes_estimate(prior: PoissonPrior, x: int, method: Method = "auto") -> float:
    """E(alpha | x) = (c + E(Y | Y <= x+a-1)) / (1+b+d) on the mixture path."""
    x = _check_count(x)
    if _resolve_alpha_method(prior, method) == "quadrature":
        return _alpha_numeric(prior, x).mean()
    upper = x + _require_integer_a(prior) - 1
    if prior.c_alpha == 1.0 and prior.d == 0.0:
        return flat_bound_estimate(prior, x)
    truncated = truncated_negbin_mean(prior.c_alpha, prior.rho, upper)
    return (prior.c_alpha + truncated) / prior.alpha_rate


def flat_bound_estimate(prior: PoissonPrior, x: int) -> float:
    """E(alpha | x) = (2c + x + a - 1) / (2(1+b+d)) for the flat bound prior c = 1, d = 0."""
    x = _check_count(x)
    if prior.c_alpha != 1.0 or prior.d != 0.0:
        raise DomainError("the flat-bound closed form needs c = 1 and d = 0")
    _require_integer_a(prior)
    return (2.0 * prior.c_alpha + x + prior.a - 1.0) / (2.0 * prior.alpha_rate)
