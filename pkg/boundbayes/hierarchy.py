"""Posterior identities of the hierarchical lower-bound model, by brute-force quadrature.

For X | theta ~ f_theta, theta | alpha ~ g1(theta) 1{theta >= alpha}, alpha ~ g2:

    pi1(theta | x)  proportional to  f_theta(x) g1(theta) G2(theta)
    pi2(alpha | x)  proportional to  g2(alpha) * integral_{alpha}^{inf} f_theta(x) g1(theta) dtheta

where G2 is the cdf of g2. pi1 is the unconstrained posterior pi0 reweighted
by the nondecreasing G2, hence stochastically larger than pi0.

Nothing here uses the closed forms of the normal or Poisson modules, which is
what makes it useful for checking them.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.typing import ArrayLike
from scipy import special, stats

from boundbayes.config import settings
from boundbayes.exceptions import DegenerateError
from boundbayes.normal_model import NormalConfig, posterior_update
from boundbayes.poisson_model import PoissonPrior, posterior_upper_limit
from boundbayes.quadrature import NumericDensity

logger = logging.getLogger(__name__)

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LowerBoundModel:
    """One observed x together with the ingredients of the hierarchical prior."""

    log_likelihood: ArrayFn
    log_g1: ArrayFn
    g2_cdf: ArrayFn
    g2_pdf: Optional[ArrayFn]
    theta_window: tuple[float, float]
    alpha_window: tuple[float, float]
    breakpoints: tuple[float, ...] = ()


def prior_weight(model: LowerBoundModel, theta: ArrayLike) -> np.ndarray:
    """w(theta) = G2(theta); the reduced prior of theta is g1 * w."""
    return np.asarray(model.g2_cdf(np.asarray(theta, dtype=float)), dtype=float)


def unconstrained_posterior_numeric(model: LowerBoundModel) -> NumericDensity:
    """pi0: the posterior with no lower bound at all."""

    def log_kernel(theta: np.ndarray) -> np.ndarray:
        return model.log_likelihood(theta) + model.log_g1(theta)

    return NumericDensity(log_kernel, *model.theta_window, breakpoints=model.breakpoints)


def theta_posterior_numeric(model: LowerBoundModel) -> NumericDensity:
    def log_kernel(theta: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            log_weight = np.log(prior_weight(model, theta))
        return model.log_likelihood(theta) + model.log_g1(theta) + log_weight

    return NumericDensity(log_kernel, *model.theta_window, breakpoints=model.breakpoints)


def alpha_posterior_numeric(model: LowerBoundModel) -> NumericDensity:
    """pi2, with the inner integral taken as the upper tail of pi0."""
    if model.g2_pdf is None:
        raise DegenerateError("the bound has no density; its posterior is a point mass")
    pi0 = unconstrained_posterior_numeric(model)

    def log_kernel(alpha: np.ndarray) -> np.ndarray:
        arr = np.atleast_1d(np.asarray(alpha, dtype=float))
        tail = np.array([pi0.sf(float(a)) for a in arr.ravel()]).reshape(arr.shape)
        with np.errstate(divide="ignore"):
            value = np.log(model.g2_pdf(arr)) + np.log(tail)
        return value if np.ndim(alpha) else value[0]

    return NumericDensity(log_kernel, *model.alpha_window)


def normal_lower_bound_model(cfg: NormalConfig, x: float) -> LowerBoundModel:
    post = posterior_update(cfg, x)
    spread = math.sqrt(post.tau_prime2 + cfg.alpha.sigma2)
    half = settings.QUAD_HALF_WIDTH * spread
    window = (min(post.mu_hat, cfg.alpha.mu) - half, max(post.mu_hat, cfg.alpha.mu) + half)
    sigma2 = cfg.sigma2

    def log_likelihood(theta: np.ndarray) -> np.ndarray:
        return -0.5 * (x - theta) ** 2 / sigma2

    if cfg.prior.is_flat:
        log_g1 = np.zeros_like
    else:
        mu, tau2 = cfg.prior.mu, float(cfg.prior.tau2)

        def log_g1(theta: np.ndarray) -> np.ndarray:
            return -0.5 * (theta - mu) ** 2 / tau2

    alpha = cfg.alpha
    if alpha.sigma2 == 0.0:
        return LowerBoundModel(
            log_likelihood=log_likelihood,
            log_g1=log_g1,
            g2_cdf=lambda theta: (np.asarray(theta) >= alpha.mu).astype(float),
            g2_pdf=None,
            theta_window=window,
            alpha_window=window,
            breakpoints=(alpha.mu,),
        )
    return LowerBoundModel(
        log_likelihood=log_likelihood,
        log_g1=log_g1,
        g2_cdf=lambda theta: stats.norm.cdf(theta, loc=alpha.mu, scale=alpha.sd),
        g2_pdf=lambda a: stats.norm.pdf(a, loc=alpha.mu, scale=alpha.sd),
        theta_window=window,
        alpha_window=window,
    )


def poisson_lower_bound_model(prior: PoissonPrior, x: int) -> LowerBoundModel:
    """Gamma-type g1 and g2 on [0, inf); unnormalized g2 is fine for both posteriors."""
    a, b, c, d = prior.a, prior.b, prior.c_alpha, prior.d
    upper = posterior_upper_limit(prior, x)

    def log_likelihood(theta: np.ndarray) -> np.ndarray:
        return special.xlogy(x, theta) - theta

    def log_g1(theta: np.ndarray) -> np.ndarray:
        return special.xlogy(a - 1.0, theta) - b * theta

    if d > 0.0:
        g2_cdf = lambda theta: special.gammainc(c, d * np.asarray(theta))  # noqa: E731
    else:
        g2_cdf = lambda theta: np.asarray(theta) ** c / c  # noqa: E731

    def g2_pdf(alpha: np.ndarray) -> np.ndarray:
        return np.exp(special.xlogy(c - 1.0, alpha) - d * alpha)

    return LowerBoundModel(
        log_likelihood=log_likelihood,
        log_g1=log_g1,
        g2_cdf=g2_cdf,
        g2_pdf=g2_pdf,
        theta_window=(0.0, upper),
        alpha_window=(0.0, upper),
    )
