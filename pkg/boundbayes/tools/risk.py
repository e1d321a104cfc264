"""Risk analysis tools: curves, dominance cutoff and the minimax check."""
import asyncio
import logging
from typing import Any, Dict, Optional, Sequence

from pydantic import ValidationError

from boundbayes import risk_engine
from boundbayes.exceptions import BoundBayesError
from boundbayes.normal_model import NormalConfig, parse_estimator

logger = logging.getLogger(__name__)


class RiskTools:
    """Frequentist risk of the delta_c family and its relatives."""

    async def risk_curve(
        self,
        estimator_ids: Sequence[str],
        sigma2: float = 1.0,
        theta_min: Optional[float] = None,
        theta_max: Optional[float] = None,
        step: Optional[float] = None,
        method: risk_engine.RiskMethod = "quadrature",
        n: Optional[int] = None,
        seed: Optional[int] = None,
        config: Optional[NormalConfig] = None,
    ) -> Dict[str, Any]:
        """Risk curves as CSV; each estimator runs in its own worker thread."""
        try:
            grid = risk_engine.default_grid(theta_min, theta_max, step)
            estimators = [parse_estimator(i, sigma2=sigma2, config=config) for i in estimator_ids]
            curves = await asyncio.gather(
                *(
                    asyncio.to_thread(risk_engine.risk_curve_for, est, grid, method, n, seed, k)
                    for k, est in enumerate(estimators)
                )
            )
        except (BoundBayesError, ValidationError) as e:
            logger.debug("risk-curve failed: %s", e)
            return {"error": str(e)}
        logger.info("computed %d curve(s) on %d grid points", len(curves), grid.size)
        return {
            "estimators": [c.estimator_id for c in curves],
            "points": int(grid.size),
            "csv": risk_engine.curves_to_csv(curves),
        }

    async def dominance(self, c: float) -> Dict[str, Any]:
        """Cutoff theta0(c) at unit variance."""
        try:
            theta0 = await asyncio.to_thread(risk_engine.dominance_cutoff, c)
        except (BoundBayesError, ValidationError) as e:
            logger.debug("dominance failed: %s", e)
            return {"error": str(e)}
        return {"c": c, "theta0": theta0}

    async def minimax_check(
        self,
        c: float,
        theta_max: float = 10.0,
        step: float = 0.05,
        sigma2: float = 1.0,
    ) -> Dict[str, Any]:
        try:
            report = await asyncio.to_thread(risk_engine.minimax_check, c, theta_max, step, sigma2)
        except (BoundBayesError, ValidationError) as e:
            logger.debug("minimax-check failed: %s", e)
            return {"error": str(e)}
        return report.model_dump()


risk_tools = RiskTools()
