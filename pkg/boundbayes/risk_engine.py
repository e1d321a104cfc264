"""Squared-error risk of point estimators of a normal mean bounded below.

Scale-equivariant estimators are evaluated at unit variance and rescaled:
risk(delta; theta, sigma2) = sigma2 * risk(delta; theta / sigma, 1).
Smooth estimators use Gauss-Hermite rules with node doubling; estimators
with a kink (mle+, delta_c+) use adaptive quadrature split at the kink.
"""
import csv
import io
import logging
import math
from typing import List, Literal, Optional, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import optimize

from boundbayes import special_fn
from boundbayes.config import settings
from boundbayes.exceptions import DomainError, RootNotBracketedError, SignChangeViolation
from boundbayes.normal_model import Estimator, NormalConfig, parse_estimator
from boundbayes.quadrature import integrate_interval, normal_expectation

logger = logging.getLogger(__name__)

RealOrArray = Union[float, np.ndarray]
RiskMethod = Literal["quadrature", "monte_carlo"]

CSV_HEADER = ("estimator", "theta", "risk", "method", "std_err")

# Distance of the verification probes from a located cutoff.
_PROBE_OFFSET = 1e-3


class RiskCurve(BaseModel):
    model_config = ConfigDict(frozen=True)

    estimator_id: str
    sigma2: float = Field(gt=0.0)
    theta_grid: List[float]
    risk: List[float]
    method: RiskMethod = "quadrature"
    mc_std_err: Optional[List[float]] = None

    @model_validator(mode="after")
    def _consistent(self) -> "RiskCurve":
        if len(self.risk) != len(self.theta_grid):
            raise ValueError("risk and theta_grid must have equal length")
        if self.mc_std_err is not None and len(self.mc_std_err) != len(self.theta_grid):
            raise ValueError("mc_std_err and theta_grid must have equal length")
        if any(b <= a for a, b in zip(self.theta_grid, self.theta_grid[1:])):
            raise ValueError("theta_grid must be strictly increasing")
        if any(r < 0.0 for r in self.risk):
            raise ValueError("risk values must be nonnegative")
        return self


class SignChangeBracket(BaseModel):
    """An interval on which Delta_c changes sign; orientation "+-" means + on the left."""

    model_config = ConfigDict(frozen=True)

    lo: float
    hi: float
    orientation: Literal["+-", "-+"]


class DominanceReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    c: float = Field(ge=0.0, le=1.0)
    sigma2: float = Field(default=1.0, gt=0.0)
    cutoff_theta0: Optional[float] = None
    sup_risk_on_nonneg: float
    theta_at_sup: float
    tail_risk: float
    tail_settled: bool = True
    dominates_on_nonneg: bool
    boundary_case: bool = False

    @model_validator(mode="after")
    def _cutoff_below_zero(self) -> "DominanceReport":
        if 0.0 < self.c < 1.0 and self.cutoff_theta0 is not None and self.cutoff_theta0 >= 0.0:
            raise ValueError(f"cutoff for c={self.c} must be negative, got {self.cutoff_theta0}")
        return self


def _out(value: np.ndarray, scalar: bool) -> RealOrArray:
    return float(value[0]) if scalar else value


def _risk_by_quad(est: Estimator, theta: float, scale: float, points: Sequence[float]) -> float:
    half = settings.QUAD_HALF_WIDTH * scale

    def integrand(x: float) -> float:
        return (est(x) - theta) ** 2 * special_fn.std_normal_pdf((x - theta) / scale) / scale

    return integrate_interval(integrand, theta - half, theta + half, tuple(points))


def _risk_by_hermite(est: Estimator, theta: np.ndarray, scale: float) -> np.ndarray:
    def loss(x: np.ndarray) -> np.ndarray:
        return (np.asarray(est(x)) - theta[:, None]) ** 2

    value, converged = normal_expectation(loss, theta, scale=scale)
    if converged:
        return value
    logger.warning("Gauss-Hermite did not converge for %s; using adaptive quadrature", est.estimator_id)
    return np.array([_risk_by_quad(est, float(t), scale, ()) for t in theta])


def risk_quadrature(est: Estimator, theta: ArrayLike, sigma2: Optional[float] = None) -> RealOrArray:
    """E_theta[(delta(X) - theta)^2] for X ~ N(theta, sigma2), vectorized over theta."""
    arr = np.atleast_1d(np.asarray(theta, dtype=float))
    scalar = np.ndim(theta) == 0
    if sigma2 is not None:
        est = est.at_sigma2(sigma2)
    if not est.scale_equivariant:
        return _out(_risk_by_hermite(est, arr, math.sqrt(est.sigma2)), scalar)
    sigma2 = est.sigma2
    sigma = math.sqrt(sigma2)
    unit = est.at_sigma2(1.0)
    reduced = arr / sigma
    kinks = unit.kinks()
    if kinks:
        value = np.array([_risk_by_quad(unit, float(t), 1.0, kinks) for t in reduced])
    else:
        value = _risk_by_hermite(unit, reduced, 1.0)
    return _out(sigma2 * value, scalar)


def risk_monte_carlo(
    est: Estimator,
    theta: float,
    sigma2: Optional[float] = None,
    n: int = 1_000_000,
    seed: Union[int, np.random.SeedSequence] = 0,
) -> tuple[float, float]:
    """Sample mean of (delta(X) - theta)^2 and its standard error."""
    if n < settings.MC_MIN_DRAWS:
        raise DomainError(f"Monte Carlo needs at least {settings.MC_MIN_DRAWS} draws, got {n}")
    if sigma2 is not None:
        est = est.at_sigma2(sigma2)
    rng = np.random.default_rng(seed)
    x = theta + math.sqrt(est.sigma2) * rng.standard_normal(n)
    loss = (np.asarray(est(x)) - theta) ** 2
    return float(loss.mean()), float(loss.std(ddof=1) / math.sqrt(n))


def _check_c(c: float) -> None:
    if not 0.0 < c <= 1.0:
        raise DomainError(f"c must lie in (0, 1], got {c}")


def risk_difference_stein(c: float, theta: ArrayLike) -> RealOrArray:
    """Delta_c(theta) = risk(delta_c) - risk(X) = -c^2 E_theta[T(cX)] at unit variance."""
    _check_c(c)
    arr = np.atleast_1d(np.asarray(theta, dtype=float))
    value, converged = normal_expectation(lambda x: special_fn.t_fn(c * x), arr)
    if not converged:
        logger.warning("Gauss-Hermite did not converge for Delta_%g", c)
    return _out(-(c**2) * value, np.ndim(theta) == 0)


def _signs(values: np.ndarray) -> np.ndarray:
    return np.where(np.abs(values) <= settings.SIGN_ZERO_TOL, 0, np.sign(values)).astype(int)


def sign_change_scan(c: float, grid: ArrayLike) -> List[SignChangeBracket]:
    """Brackets between consecutive nonzero values of Delta_c of opposite sign."""
    points = np.asarray(grid, dtype=float)
    if points.ndim != 1 or points.size < 2 or np.any(np.diff(points) <= 0.0):
        raise DomainError("scan grid must be a strictly increasing sequence of at least two points")
    signs = _signs(np.asarray(risk_difference_stein(c, points)))
    brackets: List[SignChangeBracket] = []
    previous: Optional[int] = None
    for i, s in enumerate(signs):
        if s == 0:
            continue
        if previous is not None and signs[previous] != s:
            orientation = "+-" if signs[previous] > 0 else "-+"
            brackets.append(SignChangeBracket(lo=points[previous], hi=points[i], orientation=orientation))
        previous = i
    logger.debug("Delta_%g: %d sign change(s) on [%g, %g]", c, len(brackets), points[0], points[-1])
    return brackets


def assert_single_crossing(brackets: Sequence[SignChangeBracket]) -> SignChangeBracket:
    if len(brackets) != 1:
        raise SignChangeViolation(f"expected exactly one sign change, found {len(brackets)}")
    bracket = brackets[0]
    if bracket.orientation != "+-":
        raise SignChangeViolation(f"sign change on [{bracket.lo}, {bracket.hi}] goes from - to +")
    return bracket


def theta_grid(theta_min: float, theta_max: float, step: float) -> np.ndarray:
    """Equally spaced grid from theta_min up to theta_max inclusive."""
    for name, value in (("theta_min", theta_min), ("theta_max", theta_max), ("step", step)):
        if not math.isfinite(value):
            raise DomainError(f"{name} must be finite, got {value}")
    if not step > 0.0:
        raise DomainError(f"step must be positive, got {step}")
    if theta_max < theta_min:
        raise DomainError(f"empty theta range [{theta_min}, {theta_max}]")
    count = int(math.floor((theta_max - theta_min) / step + 1e-9)) + 1
    return np.round(theta_min + step * np.arange(count), 12)


def default_grid(
    theta_min: Optional[float] = None,
    theta_max: Optional[float] = None,
    step: Optional[float] = None,
) -> np.ndarray:
    """theta_grid with the default curve grid filled in."""
    return theta_grid(
        settings.CURVE_THETA_MIN if theta_min is None else theta_min,
        settings.CURVE_THETA_MAX if theta_max is None else theta_max,
        settings.CURVE_THETA_STEP if step is None else step,
    )


def dominance_cutoff(c: float) -> float:
    """theta0(c): delta_c beats X for theta > theta0 and loses below, at unit variance."""
    _check_c(c)
    grid = theta_grid(settings.CUTOFF_SCAN_MIN, settings.CUTOFF_SCAN_MAX, settings.CUTOFF_SCAN_STEP)
    brackets = sign_change_scan(c, grid)
    if not brackets:
        raise RootNotBracketedError(
            f"Delta_{c} has no sign change on [{settings.CUTOFF_SCAN_MIN}, {settings.CUTOFF_SCAN_MAX}]"
        )
    bracket = assert_single_crossing(brackets)
    root = optimize.bisect(
        lambda t: risk_difference_stein(c, t), bracket.lo, bracket.hi, xtol=settings.BISECT_XTOL
    )
    left = risk_difference_stein(c, root - _PROBE_OFFSET)
    right = risk_difference_stein(c, root + _PROBE_OFFSET)
    if not (left > 0.0 > right):
        raise SignChangeViolation(f"probes around theta0={root:.6g} give {left:.3g}, {right:.3g}")
    logger.info("dominance cutoff for c=%g: %.9f", c, root)
    return root


def minimax_check(c: float, theta_max: float = 10.0, step: float = 0.05, sigma2: float = 1.0) -> DominanceReport:
    """Risk of delta_c against sigma2 on the grid [0, theta_max]."""
    if not 0.0 <= c <= 1.0:
        raise DomainError(f"c must lie in [0, 1], got {c}")
    if theta_max < 10.0:
        raise DomainError(f"theta_max must be at least 10, got {theta_max}")
    if not 0.0 < step <= 0.05:
        raise DomainError(f"step must lie in (0, 0.05], got {step}")
    if not sigma2 > 0.0:
        raise DomainError(f"sigma2 must be positive, got {sigma2}")
    est = Estimator(kind="delta_c", c=c, sigma2=sigma2)
    grid = theta_grid(0.0, theta_max, step)
    risk = np.asarray(risk_quadrature(est, grid))
    best = int(np.argmax(risk))
    sup_risk = float(risk[best])
    tail_risk = float(risk[-1])
    bounded = sup_risk <= sigma2 + settings.MINIMAX_TOL * sigma2
    settled = abs(tail_risk - sigma2) <= settings.MINIMAX_TAIL_TOL * sigma2
    cutoff = None if c == 0.0 else math.sqrt(sigma2) * dominance_cutoff(c)
    if not bounded:
        logger.warning("delta_%g fails the minimax check: sup risk %.10g exceeds %g", c, sup_risk, sigma2)
    if not settled:
        logger.info("delta_%g risk at theta=%g is %.10g, not yet back at %g", c, theta_max, tail_risk, sigma2)
    return DominanceReport(
        c=c,
        sigma2=sigma2,
        cutoff_theta0=cutoff,
        sup_risk_on_nonneg=sup_risk,
        theta_at_sup=float(grid[best]),
        tail_risk=tail_risk,
        tail_settled=settled,
        dominates_on_nonneg=bounded,
        boundary_case=c == 0.0,
    )


def risk_curve_for(
    est: Estimator,
    grid: np.ndarray,
    method: RiskMethod = "quadrature",
    n: Optional[int] = None,
    seed: Optional[int] = None,
    stream: int = 0,
) -> RiskCurve:
    """One curve; Monte Carlo draws use SeedSequence(seed, spawn_key=(stream, theta index))."""
    if method == "quadrature":
        risk = np.asarray(risk_quadrature(est, grid), dtype=float)
        return RiskCurve(
            estimator_id=est.estimator_id, sigma2=est.sigma2, theta_grid=grid.tolist(), risk=risk.tolist()
        )
    if n is None or seed is None:
        raise DomainError("Monte Carlo risk curves need both a draw count and a seed")
    estimates, errors = [], []
    for i, theta in enumerate(grid):
        stream_seed = np.random.SeedSequence(seed, spawn_key=(stream, i))
        value, err = risk_monte_carlo(est, float(theta), n=n, seed=stream_seed)
        estimates.append(value)
        errors.append(err)
    return RiskCurve(
        estimator_id=est.estimator_id,
        sigma2=est.sigma2,
        theta_grid=grid.tolist(),
        risk=estimates,
        method="monte_carlo",
        mc_std_err=errors,
    )


def risk_curve(
    estimator_ids: Sequence[str],
    sigma2: float = 1.0,
    theta_min: Optional[float] = None,
    theta_max: Optional[float] = None,
    step: Optional[float] = None,
    method: RiskMethod = "quadrature",
    n: Optional[int] = None,
    seed: Optional[int] = None,
    config: Optional[NormalConfig] = None,
) -> List[RiskCurve]:
    """One curve per estimator id, in the order given."""
    grid = default_grid(theta_min, theta_max, step)
    estimators = [parse_estimator(i, sigma2=sigma2, config=config) for i in estimator_ids]
    return [
        risk_curve_for(est, grid, method=method, n=n, seed=seed, stream=k) for k, est in enumerate(estimators)
    ]


def _format(value: float) -> str:
    return f"{value:.{settings.CSV_DIGITS}g}"


def curves_to_csv(curves: Sequence[RiskCurve]) -> str:
    """Rows ``estimator,theta,risk,method,std_err``; std_err is empty for quadrature."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for curve in curves:
        errors = curve.mc_std_err or [None] * len(curve.theta_grid)
        for theta, risk, err in zip(curve.theta_grid, curve.risk, errors):
            writer.writerow(
                [curve.estimator_id, _format(theta), _format(risk), curve.method, "" if err is None else _format(err)]
            )
    return buffer.getvalue()
