"""Estimation, posterior and sampling tools."""
import asyncio
import logging
from typing import Any, Dict, List, Literal, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from boundbayes import hierarchy, normal_model, poisson_model
from boundbayes.esn import ExtendedSkewNormal, LocScaleESN
from boundbayes.exceptions import BoundBayesError
from boundbayes.normal_model import NormalConfig
from boundbayes.poisson_model import PoissonPrior

logger = logging.getLogger(__name__)

Parameter = Literal["theta", "alpha"]


def _as_list(values: Any) -> List[float]:
    return np.atleast_1d(np.asarray(values, dtype=float)).tolist()


class EstimationTools:
    """Point estimates, posterior summaries and posterior draws."""

    async def estimate_normal(
        self,
        config: NormalConfig,
        x: float,
        level: Optional[float] = None,
    ) -> Dict[str, Any]:
        """Bayes estimates of theta and alpha under squared error."""
        try:
            return await asyncio.to_thread(self._estimate_normal, config, x, level)
        except (BoundBayesError, ValidationError) as e:
            logger.debug("estimate-normal failed: %s", e)
            return {"error": str(e)}

    def _estimate_normal(self, config: NormalConfig, x: float, level: Optional[float]) -> Dict[str, Any]:
        post = normal_model.posterior_update(config, x)
        result: Dict[str, Any] = {
            "estimate": normal_model.theta_bayes_estimate(config, x),
            "alpha_estimate": normal_model.alpha_bayes_estimate(config, x),
            "mu_hat": post.mu_hat,
            "tau_prime2": post.tau_prime2,
        }
        if config.prior.is_flat:
            result["delta_c"] = normal_model.hier_bayes_coefficient(config.sigma2, config.alpha.sigma2)
        if level is not None:
            result["credible_interval"] = list(normal_model.theta_credible_interval(config, x, level))
            result["level"] = level
        return result

    async def estimate_poisson(
        self,
        prior: PoissonPrior,
        x: int,
        method: poisson_model.Method = "auto",
    ) -> Dict[str, Any]:
        """Posterior means of theta and alpha for one Poisson count."""
        try:
            theta, alpha = await asyncio.gather(
                asyncio.to_thread(poisson_model.theta_posterior_mean, prior, x),
                asyncio.to_thread(poisson_model.alpha_bayes_estimate, prior, x, method),
            )
        except (BoundBayesError, ValidationError) as e:
            logger.debug("estimate-poisson failed: %s", e)
            return {"error": str(e)}
        return {"theta_estimate": theta, "alpha_estimate": alpha, "method": method}

    async def posterior(
        self,
        model: Literal["normal", "poisson"],
        parameter: Parameter,
        x: float,
        config: Optional[NormalConfig] = None,
        prior: Optional[PoissonPrior] = None,
        points: Sequence[float] = (),
        level: float = 0.95,
        crosscheck: bool = False,
    ) -> Dict[str, Any]:
        """Family, parameters and moments of a posterior, with optional density values."""
        try:
            if model == "normal":
                return await asyncio.to_thread(
                    self._normal_posterior, config, parameter, x, points, level, crosscheck
                )
            return await asyncio.to_thread(self._poisson_posterior, prior, parameter, int(x), points, crosscheck)
        except (BoundBayesError, ValidationError) as e:
            logger.debug("posterior failed: %s", e)
            return {"error": str(e)}

    def _normal_posterior(
        self,
        config: NormalConfig,
        parameter: Parameter,
        x: float,
        points: Sequence[float],
        level: float,
        crosscheck: bool,
    ) -> Dict[str, Any]:
        if parameter == "alpha" and config.alpha.sigma2 == 0.0:
            result: Dict[str, Any] = {"family": "point_mass", "mean": config.alpha.mu, "var": 0.0}
            return result
        if parameter == "theta" and config.alpha.sigma2 == 0.0:
            dist = normal_model.theta_posterior_truncated(config, x)
            family = "truncated_normal"
        elif parameter == "theta":
            dist = normal_model.theta_posterior(config, x)
            family = "extended_skew_normal"
        else:
            dist = normal_model.alpha_posterior(config, x)
            family = "extended_skew_normal"
        result = {
            "family": family,
            "params": dist.as_dict(),
            "mean": dist.mean(),
            "var": dist.var(),
            "credible_interval": list(dist.credible_interval(level)),
            "level": level,
        }
        if points:
            result["points"] = list(points)
            result["density"] = _as_list(dist.pdf(np.asarray(points, dtype=float)))
        if crosscheck:
            result["numeric_mean"] = self._numeric_mean(hierarchy.normal_lower_bound_model(config, x), parameter)
        return result

    def _poisson_posterior(
        self,
        prior: PoissonPrior,
        parameter: Parameter,
        x: int,
        points: Sequence[float],
        crosscheck: bool,
    ) -> Dict[str, Any]:
        result: Dict[str, Any]
        if parameter == "theta":
            result = {"family": "weighted_gamma", "mean": poisson_model.theta_posterior_mean(prior, x)}
            density = poisson_model.theta_posterior_pdf
        elif poisson_model.is_integer(prior.a):
            mixture = poisson_model.alpha_posterior_mixture(prior, x)
            result = {"family": "gamma_mixture", "mean": mixture.mean(), "var": mixture.var(), "mixture": mixture.as_dict()}
            density = poisson_model.alpha_posterior_pdf
        else:
            result = {"family": "weighted_gamma", "mean": poisson_model.alpha_bayes_estimate(prior, x)}
            density = poisson_model.alpha_posterior_pdf
        if points:
            result["points"] = list(points)
            result["density"] = _as_list(density(prior, x, np.asarray(points, dtype=float)))
        if crosscheck:
            result["numeric_mean"] = self._numeric_mean(hierarchy.poisson_lower_bound_model(prior, x), parameter)
        return result

    @staticmethod
    def _numeric_mean(model: hierarchy.LowerBoundModel, parameter: Parameter) -> float:
        if parameter == "theta":
            return hierarchy.theta_posterior_numeric(model).mean()
        return hierarchy.alpha_posterior_numeric(model).mean()

    async def sample(
        self,
        n: int,
        seed: int,
        psi1: Optional[float] = None,
        psi2: Optional[float] = None,
        location: float = 0.0,
        scale: float = 1.0,
        config: Optional[NormalConfig] = None,
        x: Optional[float] = None,
    ) -> Dict[str, Any]:
        """Draws from an explicit ESN or from the theta posterior of the normal model."""
        try:
            if config is not None and x is not None:
                dist = normal_model.theta_posterior(config, x)
            else:
                dist = LocScaleESN(
                    standard=ExtendedSkewNormal(psi1=psi1, psi2=psi2), location=location, scale=scale
                )
            draws = await asyncio.to_thread(dist.sample, n, seed)
        except (BoundBayesError, ValidationError) as e:
            logger.debug("sample failed: %s", e)
            return {"error": str(e)}
        return {"values": draws.tolist(), "params": dist.as_dict(), "seed": seed}


estimation_tools = EstimationTools()
