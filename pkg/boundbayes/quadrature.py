"""Numerical integration: Gauss-Hermite expectations and quadrature-normalized densities."""
import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.typing import ArrayLike
from scipy import integrate

from boundbayes.config import settings
from boundbayes.exceptions import QuadratureError

logger = logging.getLogger(__name__)

ArrayFn = Callable[[np.ndarray], np.ndarray]

_PROBE_POINTS = 2001


@functools.lru_cache(maxsize=16)
def hermite_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights with sum(w * f(z)) ~ E[f(Z)], Z ~ N(0, 1)."""
    u, w = np.polynomial.hermite.hermgauss(n)
    nodes = math.sqrt(2.0) * u
    weights = w / math.sqrt(math.pi)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def normal_expectation(
    func: ArrayFn,
    loc: ArrayLike,
    scale: float = 1.0,
    nodes: Optional[int] = None,
    max_nodes: Optional[int] = None,
    tol: Optional[float] = None,
) -> tuple[np.ndarray, bool]:
    """E[func(loc + scale * Z)] for Z ~ N(0, 1), vectorized over ``loc``.

    The rule doubles its node count until two successive estimates agree to
    ``tol`` (relative to max(1, |estimate|)). Returns the estimate and a flag
    telling whether the doubling converged before ``max_nodes``.
    """
    loc_arr = np.atleast_1d(np.asarray(loc, dtype=float))
    n = nodes or settings.GH_NODES
    cap = max_nodes or settings.GH_MAX_NODES
    tol = settings.GH_TOL if tol is None else tol

    def apply(count: int) -> np.ndarray:
        z, w = hermite_rule(count)
        values = func(loc_arr[:, None] + scale * z[None, :])
        return values @ w

    previous = apply(n)
    while n < cap:
        n *= 2
        current = apply(n)
        gap = np.abs(current - previous) / np.maximum(1.0, np.abs(current))
        if np.max(gap) < tol:
            logger.debug("Gauss-Hermite converged at %d nodes", n)
            return current, True
        previous = current
    logger.debug("Gauss-Hermite did not converge by %d nodes", cap)
    return previous, False


def integrate_interval(
    func: Callable[[float], float],
    lower: float,
    upper: float,
    points: tuple[float, ...] = (),
) -> float:
    """Adaptive Gauss-Kronrod integral over a finite interval, split at ``points``."""
    inside = sorted(p for p in points if lower < p < upper)
    value, abserr = integrate.quad(
        func,
        lower,
        upper,
        points=inside or None,
        epsabs=settings.QUAD_EPSABS,
        epsrel=settings.QUAD_EPSREL,
        limit=settings.QUAD_LIMIT,
    )
    if not math.isfinite(value):
        raise QuadratureError(f"integral over [{lower}, {upper}] is not finite")
    if abserr > 1e-6 * max(1.0, abs(value)):
        logger.warning("quadrature error estimate %.3g on [%g, %g]", abserr, lower, upper)
    return value


@dataclass(frozen=True)
class NumericDensity:
    """A density known up to a constant on [lower, upper], normalized by quadrature.

    ``log_kernel`` must accept numpy arrays. The kernel is rescaled by its
    largest value on a probe grid before integrating so that large or tiny
    normalizers never overflow.
    """

    log_kernel: ArrayFn
    lower: float
    upper: float
    breakpoints: tuple[float, ...] = ()
    shift: float = field(init=False, default=0.0)
    mode: float = field(init=False, default=0.0)
    normalizer: float = field(init=False, default=1.0)

    def __post_init__(self) -> None:
        if not self.lower < self.upper:
            raise QuadratureError(f"empty integration window [{self.lower}, {self.upper}]")
        span = self.upper - self.lower
        probe = self.lower + span * np.linspace(1e-9, 1.0 - 1e-9, _PROBE_POINTS)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_values = np.asarray(self.log_kernel(probe), dtype=float)
        finite = np.isfinite(log_values)
        if not finite.any():
            raise QuadratureError("kernel vanishes on the whole integration window")
        best = int(np.argmax(np.where(finite, log_values, -np.inf)))
        object.__setattr__(self, "shift", float(log_values[best]))
        object.__setattr__(self, "mode", float(probe[best]))
        total = integrate_interval(self._kernel, self.lower, self.upper, self._points())
        if total <= 0.0:
            raise QuadratureError("kernel integrates to zero")
        object.__setattr__(self, "normalizer", total)

    def _points(self) -> tuple[float, ...]:
        return tuple(self.breakpoints) + (self.mode,)

    def _kernel(self, x: ArrayLike) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            values = np.exp(np.asarray(self.log_kernel(x), dtype=float) - self.shift)
        return np.where(np.isfinite(values), values, 0.0)

    def pdf(self, x: ArrayLike) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        inside = (arr >= self.lower) & (arr <= self.upper)
        return np.where(inside, self._kernel(arr) / self.normalizer, 0.0)

    def moment(self, order: int) -> float:
        value = integrate_interval(
            lambda t: t**order * self._kernel(t), self.lower, self.upper, self._points()
        )
        return value / self.normalizer

    def mean(self) -> float:
        return self.moment(1)

    def var(self) -> float:
        mean = self.mean()
        value = integrate_interval(
            lambda t: (t - mean) ** 2 * self._kernel(t), self.lower, self.upper, self._points()
        )
        return value / self.normalizer

    def cdf(self, x: float) -> float:
        if x <= self.lower:
            return 0.0
        if x >= self.upper:
            return 1.0
        return integrate_interval(self._kernel, self.lower, x, self._points()) / self.normalizer

    def sf(self, x: float) -> float:
        """Upper tail, integrated directly rather than as 1 - cdf."""
        if x <= self.lower:
            return 1.0
        if x >= self.upper:
            return 0.0
        return integrate_interval(self._kernel, x, self.upper, self._points()) / self.normalizer
