"""Normal model with an uncertain lower bound.

    X | theta ~ N(theta, sigma2)
    theta | alpha ~ g1(theta) on [alpha, inf),  g1 = N(mu, tau2) or flat
    alpha ~ N(alpha_mu, alpha_sigma2),  alpha_sigma2 = 0 meaning alpha = alpha_mu

A single observation is assumed; n observations with known variance reduce to
it through (xbar, sigma2 / n).

The theta posterior for a general ``alpha_mu`` follows from the reduced prior
g1(theta) Phi((theta - alpha_mu) / alpha_sd) by the same computation as for
alpha_mu = 0; it is checked against direct quadrature in the tests.
"""
import logging
import math
from typing import Any, Dict, Literal, Optional, Union

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import optimize, special

from boundbayes import special_fn
from boundbayes.esn import ExtendedSkewNormal, LocScaleESN
from boundbayes.exceptions import DegenerateError, DomainError

logger = logging.getLogger(__name__)

RealOrArray = Union[float, np.ndarray]

FLAT = "flat"


class ThetaPrior(BaseModel):
    """g1: N(mu, tau2), or the flat density when tau2 == "flat"."""

    model_config = ConfigDict(frozen=True)

    mu: float = Field(default=0.0, allow_inf_nan=False)
    tau2: Union[Literal["flat"], float] = FLAT

    @model_validator(mode="after")
    def _positive_tau2(self) -> "ThetaPrior":
        if self.tau2 != FLAT and not (0.0 < self.tau2 < math.inf):
            raise ValueError(f"tau2 must be positive and finite or 'flat', got {self.tau2}")
        return self

    @property
    def is_flat(self) -> bool:
        return self.tau2 == FLAT


class BoundPrior(BaseModel):
    """g2: N(mu, sigma2); sigma2 == 0 pins the bound at mu."""

    model_config = ConfigDict(frozen=True)

    mu: float = Field(default=0.0, allow_inf_nan=False)
    sigma2: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)

    @property
    def sd(self) -> float:
        return math.sqrt(self.sigma2)


class NormalConfig(BaseModel):
    """Model and prior hyperparameters.

    JSON form: {"sigma2": ..., "prior": {"mu": ..., "tau2": ... | "flat"},
    "alpha": {"mu": ..., "sigma2": ...}}
    """

    model_config = ConfigDict(frozen=True)

    sigma2: float = Field(gt=0.0, allow_inf_nan=False)
    prior: ThetaPrior = ThetaPrior()
    alpha: BoundPrior = BoundPrior()

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


class PosteriorParams(BaseModel):
    """Unconstrained conjugate posterior N(mu_hat, tau_prime2)."""

    model_config = ConfigDict(frozen=True)

    mu_hat: float
    tau_prime2: float = Field(gt=0.0)

    @property
    def tau_prime(self) -> float:
        return math.sqrt(self.tau_prime2)


def _conjugate(cfg: NormalConfig, x: ArrayLike) -> tuple[np.ndarray, float]:
    arr = np.asarray(x, dtype=float)
    if cfg.prior.is_flat:
        return arr, cfg.sigma2
    tau2 = float(cfg.prior.tau2)
    weight = tau2 / (tau2 + cfg.sigma2)
    mu_hat = weight * arr + (1.0 - weight) * cfg.prior.mu
    return mu_hat, cfg.sigma2 * tau2 / (tau2 + cfg.sigma2)


def posterior_update(cfg: NormalConfig, x: float) -> PosteriorParams:
    """Conjugate update ignoring the bound; the flat prior gives (x, sigma2) exactly."""
    mu_hat, tau_prime2 = _conjugate(cfg, x)
    return PosteriorParams(mu_hat=float(mu_hat), tau_prime2=tau_prime2)


def _require_random_bound(cfg: NormalConfig) -> None:
    if cfg.alpha.sigma2 == 0.0:
        raise DegenerateError(
            "alpha_sigma2 = 0 fixes the bound; use the truncated-normal posterior instead"
        )


def theta_posterior(cfg: NormalConfig, x: float) -> LocScaleESN:
    """(theta - mu_hat) / tau' ~ f_{(mu_hat - alpha_mu) / alpha_sd, tau' / alpha_sd}."""
    _require_random_bound(cfg)
    post = posterior_update(cfg, x)
    alpha_sd = cfg.alpha.sd
    standard = ExtendedSkewNormal(
        psi1=(post.mu_hat - cfg.alpha.mu) / alpha_sd,
        psi2=post.tau_prime / alpha_sd,
    )
    return LocScaleESN(standard=standard, location=post.mu_hat, scale=post.tau_prime)


class TruncatedNormal(BaseModel):
    """N(location, scale^2) restricted to [lower, inf)."""

    model_config = ConfigDict(frozen=True)

    location: float
    scale: float = Field(gt=0.0)
    lower: float

    @property
    def beta(self) -> float:
        return (self.location - self.lower) / self.scale

    def pdf(self, x: ArrayLike) -> RealOrArray:
        arr = np.asarray(x, dtype=float)
        z = (arr - self.location) / self.scale
        log_value = (
            -0.5 * z * z
            - 0.5 * math.log(2.0 * math.pi)
            - math.log(self.scale)
            - special_fn.std_normal_logcdf(self.beta)
        )
        value = np.where(arr >= self.lower, np.exp(log_value), 0.0)
        return float(value) if value.ndim == 0 else value

    def cdf(self, x: ArrayLike) -> RealOrArray:
        arr = np.asarray(x, dtype=float)
        z = (arr - self.location) / self.scale
        # 1 - Phi(-z) / Phi(beta), formed in log space
        upper = np.exp(special.log_ndtr(-z) - special_fn.std_normal_logcdf(self.beta))
        value = np.where(arr >= self.lower, 1.0 - upper, 0.0)
        return float(value) if value.ndim == 0 else value

    def mean(self) -> float:
        return self.location + self.scale * special_fn.inverse_mills(self.beta)

    def var(self) -> float:
        return self.scale**2 * (1.0 + special_fn.inverse_mills_deriv(self.beta))

    def quantile(self, p: float) -> float:
        if not 0.0 < p < 1.0:
            raise DomainError(f"quantile level must lie in (0, 1), got {p}")
        log_upper = math.log1p(-p) + special_fn.std_normal_logcdf(self.beta)
        return self.location - self.scale * float(special.ndtri_exp(log_upper))

    def credible_interval(self, level: float = 0.95) -> tuple[float, float]:
        if not 0.0 < level < 1.0:
            raise DomainError(f"credible level must lie in (0, 1), got {level}")
        return self.quantile(0.5 * (1.0 - level)), self.quantile(0.5 * (1.0 + level))

    def as_dict(self) -> Dict[str, Any]:
        return {"location": self.location, "scale": self.scale, "lower": self.lower}


def theta_posterior_truncated(cfg: NormalConfig, x: float) -> TruncatedNormal:
    """Deterministic bound: N(mu_hat, tau'^2) truncated to [alpha_mu, inf)."""
    if cfg.alpha.sigma2 != 0.0:
        raise DomainError("the truncated-normal posterior requires alpha_sigma2 = 0")
    post = posterior_update(cfg, x)
    return TruncatedNormal(location=post.mu_hat, scale=post.tau_prime, lower=cfg.alpha.mu)


def theta_bayes_estimate(cfg: NormalConfig, x: ArrayLike) -> RealOrArray:
    """E(theta | x) = mu_hat + tau'^2 / s R((mu_hat - alpha_mu) / s), s^2 = tau'^2 + alpha_sigma2.

    Covers alpha_sigma2 = 0 and the flat prior with the same expression.
    """
    mu_hat, tau_prime2 = _conjugate(cfg, x)
    spread = math.sqrt(tau_prime2 + cfg.alpha.sigma2)
    value = mu_hat + tau_prime2 / spread * special_fn.inverse_mills((mu_hat - cfg.alpha.mu) / spread)
    return float(value) if np.ndim(value) == 0 else value


def alpha_posterior(cfg: NormalConfig, x: float) -> LocScaleESN:
    """Posterior of the bound.

    pi2(alpha | x) is proportional to phi((alpha - alpha_mu)/alpha_sd) Phi((mu_hat - alpha)/tau'),
    so V = (alpha_mu - alpha) / alpha_sd ~ f_{(mu_hat - alpha_mu)/tau', alpha_sd/tau'}
    and alpha = alpha_mu - alpha_sd V.
    """
    _require_random_bound(cfg)
    post = posterior_update(cfg, x)
    alpha_sd = cfg.alpha.sd
    standard = ExtendedSkewNormal(
        psi1=(post.mu_hat - cfg.alpha.mu) / post.tau_prime,
        psi2=alpha_sd / post.tau_prime,
    )
    return LocScaleESN(standard=standard, location=cfg.alpha.mu, scale=alpha_sd, orientation=-1)


def alpha_bayes_estimate(cfg: NormalConfig, x: ArrayLike) -> RealOrArray:
    """E(alpha | x) = alpha_mu - alpha_sigma2 / s R((mu_hat - alpha_mu) / s)."""
    if cfg.alpha.sigma2 == 0.0:
        arr = np.full(np.shape(x), cfg.alpha.mu)
        return float(arr) if arr.ndim == 0 else arr
    mu_hat, tau_prime2 = _conjugate(cfg, x)
    spread = math.sqrt(tau_prime2 + cfg.alpha.sigma2)
    value = cfg.alpha.mu - cfg.alpha.sigma2 / spread * special_fn.inverse_mills(
        (mu_hat - cfg.alpha.mu) / spread
    )
    return float(value) if np.ndim(value) == 0 else value


def theta_prior(cfg: NormalConfig) -> LocScaleESN:
    """Reduced prior g1(theta) Phi((theta - alpha_mu)/alpha_sd) as an ESN in (theta - mu)/tau."""
    _require_random_bound(cfg)
    if cfg.prior.is_flat:
        raise DomainError("the flat prior on theta has no proper reduced prior")
    tau = math.sqrt(float(cfg.prior.tau2))
    alpha_sd = cfg.alpha.sd
    standard = ExtendedSkewNormal(psi1=(cfg.prior.mu - cfg.alpha.mu) / alpha_sd, psi2=tau / alpha_sd)
    return LocScaleESN(standard=standard, location=cfg.prior.mu, scale=tau)


def theta_credible_interval(cfg: NormalConfig, x: float, level: float = 0.95) -> tuple[float, float]:
    """Equal-tailed posterior interval for theta."""
    if cfg.alpha.sigma2 == 0.0:
        return theta_posterior_truncated(cfg, x).credible_interval(level)
    return theta_posterior(cfg, x).credible_interval(level)


def hier_bayes_coefficient(sigma2: float, alpha_sigma2: float) -> float:
    """c for which delta_c equals the flat-prior hierarchical Bayes estimator."""
    return math.sqrt(sigma2 / (sigma2 + alpha_sigma2))


EstimatorKind = Literal["unbiased", "mle_positive", "katz", "delta_c", "delta_c_truncated", "hier_bayes"]

_DELTA_KINDS = ("delta_c", "delta_c_truncated")


class Estimator(BaseModel):
    """A point estimator x -> delta(x) of theta."""

    model_config = ConfigDict(frozen=True)

    kind: EstimatorKind
    c: Optional[float] = None
    sigma2: float = Field(default=1.0, gt=0.0, allow_inf_nan=False)
    config: Optional[NormalConfig] = None
    label: Optional[str] = None

    @model_validator(mode="after")
    def _check_kind(self) -> "Estimator":
        if self.kind in _DELTA_KINDS:
            if self.c is None or not 0.0 <= self.c <= 1.0:
                raise ValueError(f"delta_c needs c in [0, 1], got {self.c}")
        elif self.c is not None:
            raise ValueError(f"estimator kind {self.kind} takes no coefficient")
        if self.kind == "hier_bayes" and self.config is None:
            raise ValueError("hierarchical Bayes estimator needs a normal model configuration")
        return self

    @property
    def estimator_id(self) -> str:
        if self.label:
            return self.label
        if self.kind == "delta_c":
            return f"delta_c:{self.c!r}"
        if self.kind == "delta_c_truncated":
            return f"delta_c+:{self.c!r}"
        return {"unbiased": "unbiased", "mle_positive": "mle+", "katz": "katz", "hier_bayes": "bayes"}[
            self.kind
        ]

    @property
    def scale_equivariant(self) -> bool:
        """delta(x; sigma) = sigma delta(x / sigma; 1)."""
        return self.kind != "hier_bayes"

    def at_sigma2(self, sigma2: float) -> "Estimator":
        if sigma2 == self.sigma2:
            return self
        if not self.scale_equivariant:
            raise DomainError(
                f"{self.estimator_id} is tied to its model variance {self.sigma2}; cannot evaluate at sigma2={sigma2}"
            )
        return self.model_copy(update={"sigma2": sigma2})

    def kinks(self) -> tuple[float, ...]:
        """Points where delta is not differentiable."""
        if self.kind == "mle_positive":
            return (0.0,)
        if self.kind == "delta_c_truncated" and self.c < 1.0:
            return (self._delta_c_root(),)
        return ()

    def _delta_c_root(self) -> float:
        # delta_c is increasing, positive at 0 and tends to -inf for c < 1
        untruncated = self.model_copy(update={"kind": "delta_c"})
        lower = -1.0
        while untruncated(lower) >= 0.0:
            lower *= 2.0
        return optimize.brentq(untruncated, lower, 0.0, xtol=1e-14)

    def __call__(self, x: ArrayLike) -> RealOrArray:
        return evaluate_estimator(self, x)


def evaluate_estimator(est: Estimator, x: ArrayLike) -> RealOrArray:
    """delta(x) for every supported estimator kind."""
    arr = np.asarray(x, dtype=float)
    sigma = math.sqrt(est.sigma2)
    if est.kind == "unbiased":
        value = arr
    elif est.kind == "mle_positive":
        value = np.maximum(0.0, arr)
    elif est.kind == "katz":
        value = arr + sigma * special_fn.inverse_mills(arr / sigma)
    elif est.kind == "delta_c":
        value = arr + est.c * sigma * special_fn.inverse_mills(est.c * arr / sigma)
    elif est.kind == "delta_c_truncated":
        value = np.maximum(0.0, arr + est.c * sigma * special_fn.inverse_mills(est.c * arr / sigma))
    else:
        value = theta_bayes_estimate(est.config, arr)
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def parse_estimator(
    estimator_id: str,
    sigma2: float = 1.0,
    config: Optional[NormalConfig] = None,
) -> Estimator:
    """Build an estimator from its string id.

    Ids: "unbiased", "mle+", "katz", "delta_c:<c>", "delta_c+:<c>" and "bayes"
    (the hierarchical Bayes estimator of ``config``).
    """
    name = estimator_id.strip()
    simple = {"unbiased": "unbiased", "mle+": "mle_positive", "katz": "katz"}
    if name in simple:
        return Estimator(kind=simple[name], sigma2=sigma2, label=name)
    if name == "bayes":
        if config is None:
            raise DomainError("estimator 'bayes' needs a normal model configuration")
        return Estimator(kind="hier_bayes", sigma2=config.sigma2, config=config, label=name)
    for prefix, kind in (("delta_c+:", "delta_c_truncated"), ("delta_c:", "delta_c")):
        if name.startswith(prefix):
            try:
                c = float(name[len(prefix):])
            except ValueError:
                raise DomainError(f"bad coefficient in estimator id {estimator_id!r}") from None
            if not 0.0 <= c <= 1.0:
                raise DomainError(f"delta_c coefficient must lie in [0, 1], got {c}")
            return Estimator(kind=kind, c=c, sigma2=sigma2, label=name)
    raise DomainError(f"unknown estimator id {estimator_id!r}")
