"""The extended skew-normal family.

    f(z) = phi(z) Phi(psi1 + psi2 z) / Phi(gamma0),   gamma0 = psi1 / sqrt(1 + psi2^2)

Every posterior of the normal model with a normal bound prior is an affine
image of this density. Only psi2 >= 0 is represented; a negative psi2 follows
from f_{psi1,-psi2}(z) = f_{psi1,psi2}(-z) and no posterior here needs it.

Distribution values are immutable. The sampler takes its own seeded
generator per call, so concurrent callers must pass distinct seeds.
"""
import logging
import math
from typing import Any, Dict, Literal, Union

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import optimize

from boundbayes import special_fn
from boundbayes.config import settings
from boundbayes.exceptions import DegenerateTailError, DomainError
from boundbayes.quadrature import integrate_interval

logger = logging.getLogger(__name__)

RealOrArray = Union[float, np.ndarray]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class ExtendedSkewNormal(BaseModel):
    """Standard extended skew-normal f_{psi1, psi2}."""

    model_config = ConfigDict(frozen=True)

    psi1: float = Field(allow_inf_nan=False)
    psi2: float = Field(ge=0.0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _normalizable(self) -> "ExtendedSkewNormal":
        if not math.isfinite(self.log_normalizer):
            raise ValueError(f"Phi(gamma0) underflows for psi1={self.psi1}, psi2={self.psi2}")
        return self

    @property
    def gamma0(self) -> float:
        return self.psi1 / math.sqrt(1.0 + self.psi2**2)

    @property
    def gamma1(self) -> float:
        return self.psi2 / math.sqrt(1.0 + self.psi2**2)

    @property
    def log_normalizer(self) -> float:
        """log Phi(gamma0)."""
        return special_fn.std_normal_logcdf(self.gamma0)

    def window(self) -> tuple[float, float]:
        """Finite interval carrying all but a negligible amount of mass (sd <= 1)."""
        center = esn_mean(self)
        return center - settings.QUAD_HALF_WIDTH, center + settings.QUAD_HALF_WIDTH


def esn_logpdf(dist: ExtendedSkewNormal, z: ArrayLike) -> RealOrArray:
    arr = np.asarray(z, dtype=float)
    value = (
        -0.5 * arr * arr
        - _LOG_SQRT_2PI
        + special_fn.std_normal_logcdf(dist.psi1 + dist.psi2 * arr)
        - dist.log_normalizer
    )
    return float(value) if np.ndim(value) == 0 else value


def esn_pdf(dist: ExtendedSkewNormal, z: ArrayLike) -> RealOrArray:
    """Density phi(z) Phi(psi1 + psi2 z) / Phi(gamma0)."""
    value = np.exp(esn_logpdf(dist, z))
    return float(value) if np.ndim(value) == 0 else value


def esn_mgf(dist: ExtendedSkewNormal, t: ArrayLike) -> RealOrArray:
    """E[exp(tZ)] = exp(t^2/2) Phi(gamma1 t + gamma0) / Phi(gamma0)."""
    arr = np.asarray(t, dtype=float)
    log_value = (
        0.5 * arr * arr
        + special_fn.std_normal_logcdf(dist.gamma1 * arr + dist.gamma0)
        - dist.log_normalizer
    )
    value = np.exp(log_value)
    return float(value) if np.ndim(value) == 0 else value


def esn_mean(dist: ExtendedSkewNormal) -> float:
    """E(Z) = gamma1 R(gamma0)."""
    return dist.gamma1 * special_fn.inverse_mills(dist.gamma0)


def esn_var(dist: ExtendedSkewNormal) -> float:
    """Var(Z) = 1 - gamma1^2 R(gamma0) (gamma0 + R(gamma0))."""
    return 1.0 + dist.gamma1**2 * special_fn.inverse_mills_deriv(dist.gamma0)


def _cdf_scalar(dist: ExtendedSkewNormal, z: float) -> float:
    if math.isnan(z):
        return math.nan
    lo, hi = dist.window()
    if z <= lo:
        return 0.0
    if z >= hi:
        return 1.0
    center = esn_mean(dist)
    density = lambda u: esn_pdf(dist, u)  # noqa: E731
    if z <= center:
        return integrate_interval(density, lo, z)
    upper_tail = integrate_interval(density, z, hi)
    return min(1.0, max(0.0, 1.0 - upper_tail))


def esn_cdf(dist: ExtendedSkewNormal, z: ArrayLike) -> RealOrArray:
    """P(Z <= z) by adaptive quadrature of the density from the lower window edge."""
    arr = np.asarray(z, dtype=float)
    if arr.ndim == 0:
        return _cdf_scalar(dist, float(arr))
    return np.array([_cdf_scalar(dist, float(v)) for v in arr.ravel()]).reshape(arr.shape)


def esn_quantile(dist: ExtendedSkewNormal, p: float) -> float:
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {p}")
    lo, hi = dist.window()
    return optimize.brentq(lambda z: _cdf_scalar(dist, z) - p, lo, hi, xtol=1e-12)


def _check_sampler(dist: ExtendedSkewNormal) -> float:
    acceptance = special_fn.std_normal_cdf(dist.gamma0)
    if acceptance < settings.ESN_MIN_ACCEPTANCE:
        raise DegenerateTailError(
            f"degenerate-tail: acceptance probability Phi(gamma0)={acceptance:.3g} "
            f"is below {settings.ESN_MIN_ACCEPTANCE:g}"
        )
    return acceptance


def _accepted(rng: np.random.Generator, dist: ExtendedSkewNormal, pairs: int) -> np.ndarray:
    # (U1, U2) iid N(0,1); U1 given U2 <= psi1 + psi2 U1 has density f_{psi1, psi2}
    u1, u2 = rng.standard_normal((2, pairs))
    return u1[u2 <= dist.psi1 + dist.psi2 * u1]


def esn_sample(dist: ExtendedSkewNormal, n: int, seed: int) -> np.ndarray:
    """Exact draws by rejection from the conditioning representation."""
    if n < 1:
        raise DomainError(f"sample size must be at least 1, got {n}")
    acceptance = _check_sampler(dist)
    rng = np.random.default_rng(seed)
    chunks = []
    have = 0
    while have < n:
        wanted = (n - have) / acceptance * 1.1 + 64
        pairs = int(min(max(wanted, settings.SAMPLER_BATCH), 64 * settings.SAMPLER_BATCH))
        batch = _accepted(rng, dist, pairs)
        chunks.append(batch)
        have += batch.size
    logger.debug("drew %d ESN values at acceptance %.4f", n, acceptance)
    return np.concatenate(chunks)[:n]


def esn_acceptance_rate(dist: ExtendedSkewNormal, n_pairs: int, seed: int) -> float:
    """Fraction of proposal pairs accepted by the sampler (targets Phi(gamma0))."""
    if n_pairs < 1:
        raise DomainError(f"number of pairs must be at least 1, got {n_pairs}")
    rng = np.random.default_rng(seed)
    return _accepted(rng, dist, n_pairs).size / n_pairs


class LocScaleESN(BaseModel):
    """x = location + orientation * scale * Z with Z standard extended skew-normal.

    ``orientation = -1`` carries left-skewed laws (the posterior of a lower
    bound) through the reflection identity while keeping psi2 >= 0.
    """

    model_config = ConfigDict(frozen=True)

    standard: ExtendedSkewNormal
    location: float = Field(allow_inf_nan=False)
    scale: float = Field(gt=0.0, allow_inf_nan=False)
    orientation: Literal[1, -1] = 1

    def _standardize(self, x: ArrayLike) -> np.ndarray:
        return self.orientation * (np.asarray(x, dtype=float) - self.location) / self.scale

    def pdf(self, x: ArrayLike) -> RealOrArray:
        value = np.asarray(esn_pdf(self.standard, self._standardize(x))) / self.scale
        return float(value) if value.ndim == 0 else value

    def cdf(self, x: ArrayLike) -> RealOrArray:
        z = self._standardize(x)
        if self.orientation == 1:
            return esn_cdf(self.standard, z)
        value = 1.0 - np.asarray(esn_cdf(self.standard, z))
        return float(value) if value.ndim == 0 else value

    def mean(self) -> float:
        return self.location + self.orientation * self.scale * esn_mean(self.standard)

    def var(self) -> float:
        return self.scale**2 * esn_var(self.standard)

    def quantile(self, p: float) -> float:
        if self.orientation == 1:
            return self.location + self.scale * esn_quantile(self.standard, p)
        return self.location - self.scale * esn_quantile(self.standard, 1.0 - p)

    def credible_interval(self, level: float = 0.95) -> tuple[float, float]:
        """Equal-tailed interval."""
        if not 0.0 < level < 1.0:
            raise DomainError(f"credible level must lie in (0, 1), got {level}")
        return self.quantile(0.5 * (1.0 - level)), self.quantile(0.5 * (1.0 + level))

    def sample(self, n: int, seed: int) -> np.ndarray:
        draws = esn_sample(self.standard, n, seed)
        return self.location + self.orientation * self.scale * draws

    def as_dict(self) -> Dict[str, Any]:
        return {
            "psi1": self.standard.psi1,
            "psi2": self.standard.psi2,
            "location": self.location,
            "scale": self.scale,
            "orientation": self.orientation,
        }
