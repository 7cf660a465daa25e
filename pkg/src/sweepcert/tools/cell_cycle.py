"""
Cell-size-at-birth process.

A cell born with size y gives birth to a daughter of size x drawn from the
stochastic kernel

    K(x, y) = (alpha/sigma) (x/sigma)^(-1-alpha)            sigma <= y < 1
            = (alpha/sigma) (x/sigma)^(-1-alpha) y^alpha    1 <= y < x/sigma
            = 0                                             y >= x/sigma

on the half-line [sigma, inf). The power density x^(-1+beta) is properly
subinvariant when alpha - sigma^beta (alpha + beta) < 0, which makes the
process sweep to infinity.
"""

import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from ..constants import BETA_GRID_DECADES, BETA_QUALIFY_THRESHOLD
from ..errors import (
    InvalidArgumentError,
    QuadratureError,
    SingularEvaluationError,
    UnsupportedOperationError,
)
from ..models.cell_cycle import CellCycleModel
from .densities import Density
from .markov import MarkovProcess
from .numerics import RandomStream, integrate_1d
from .spaces import HalfLine, HalfLineInterval, Region, WholeSpace


logger = logging.getLogger(__name__)


def _check_sizes(model: CellCycleModel, *values: np.ndarray) -> None:
    for v in values:
        if np.any(~(v >= model.sigma)):
            raise InvalidArgumentError(f"sizes must be >= sigma = {model.sigma}")


def _kernel_scalar(alpha: float, sigma: float, x: float, y: float) -> float:
    if y * sigma >= x:
        return 0.0
    value = (alpha / sigma) * (x / sigma) ** (-1.0 - alpha)
    return value * y**alpha if y >= 1.0 else value


def kernel_eval(model: CellCycleModel, x: npt.ArrayLike, y: npt.ArrayLike) -> npt.ArrayLike:
    """Density K(x, y) of daughter size x given mother birth size y.

    Raises:
        InvalidArgumentError: If x or y is below sigma
    """
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    _check_sizes(model, xs, ys)
    alpha, sigma = model.alpha, model.sigma
    base = (alpha / sigma) * (xs / sigma) ** (-1.0 - alpha)
    value = np.where(ys >= 1.0, base * ys**alpha, base)
    result = np.where(ys < xs / sigma, value, 0.0)
    return float(result) if result.ndim == 0 else result


def daughter_size_from_uniform(model: CellCycleModel, y: npt.ArrayLike, u: npt.ArrayLike) -> npt.ArrayLike:
    """Inverse-CDF map x = sigma max(1, y) u^(-1/alpha) for u in (0, 1]."""
    ys = np.asarray(y, dtype=float)
    us = np.asarray(u, dtype=float)
    if np.any((us <= 0.0) | (us > 1.0)):
        raise InvalidArgumentError("u must lie in (0, 1]")
    result = model.sigma * np.maximum(1.0, ys) * us ** (-1.0 / model.alpha)
    return float(result) if result.ndim == 0 else result


def sample_daughter_size(model: CellCycleModel, y: npt.ArrayLike, rng: RandomStream) -> npt.ArrayLike:
    """Draw daughter sizes from K(., y), one per entry of ``y``."""
    ys = np.asarray(y, dtype=float)
    _check_sizes(model, ys)
    u = 1.0 - rng.generator().random(ys.shape)
    return daughter_size_from_uniform(model, ys, u)


def perron_power_closed_form(model: CellCycleModel, x: npt.ArrayLike) -> npt.ArrayLike:
    """Image of x^(-1+beta) under the cell-cycle Perron operator.

    For sigma < 1 this is
        alpha / ((alpha+beta) sigma^beta) x^(-1+beta)
        + alpha (alpha - sigma^beta (alpha+beta)) / (beta (alpha+beta) sigma^-alpha) x^(-1-alpha).
    For sigma >= 1 only the y >= 1 kernel branch contributes.
    """
    alpha, sigma, beta = model.alpha, model.sigma, model.beta
    if not beta > 0:
        raise InvalidArgumentError("closed form needs beta > 0")
    xs = np.asarray(x, dtype=float)
    _check_sizes(model, xs)

    if sigma < 1.0:
        first = alpha / ((alpha + beta) * sigma**beta)
        second = alpha * (alpha - sigma**beta * (alpha + beta)) / (beta * (alpha + beta) * sigma ** (-alpha))
        result = first * xs ** (-1.0 + beta) + second * xs ** (-1.0 - alpha)
    else:
        ratio = xs / sigma
        tail = (ratio ** (alpha + beta) - sigma ** (alpha + beta)) / (alpha + beta)
        result = np.where(ratio > sigma, (alpha / sigma) * ratio ** (-1.0 - alpha) * tail, 0.0)
    return float(result) if np.ndim(result) == 0 else result


def perron_power_quadrature(model: CellCycleModel, x: float, tol: float = 1e-12) -> float:
    """Quadrature of int_sigma^(x/sigma) K(x, y) y^(-1+beta) dy (oracle for the closed form)."""
    alpha, sigma, beta = model.alpha, model.sigma, model.beta
    _check_sizes(model, np.asarray(x))
    upper = x / sigma
    if upper <= sigma:
        return 0.0
    return integrate_1d(
        lambda y: _kernel_scalar(alpha, sigma, x, y) * y ** (-1.0 + beta),
        sigma,
        upper,
        tol,
        breakpoints=(1.0,),
    )


def kernel_normalization(model: CellCycleModel, y: float) -> float:
    """int K(x, y) dx over x >= sigma max(1, y); equals 1 for a stochastic kernel."""
    alpha, sigma = model.alpha, model.sigma
    _check_sizes(model, np.asarray(y))
    return integrate_1d(
        lambda x: _kernel_scalar(alpha, sigma, x, y),
        sigma * max(1.0, y),
        math.inf,
        1e-12,
        decay_rate=1.0 + alpha,
    )


def certificate_margin(model: CellCycleModel, beta: npt.ArrayLike) -> npt.ArrayLike:
    """f(beta) = alpha - sigma^beta (alpha + beta); negative values certify x^(-1+beta)."""
    b = np.asarray(beta, dtype=float)
    if np.any(b < 0.0):
        raise InvalidArgumentError("beta must be non-negative")
    result = model.alpha - model.sigma**b * (model.alpha + b)
    return float(result) if result.ndim == 0 else result


def find_beta(model: CellCycleModel, beta_max: float = 1.0, grid: int = 100) -> Optional[float]:
    """Smallest grid exponent with f(beta) < -1e-9, or None.

    f is evaluated on the log grid beta_max * [10^-2, 1]. The qualifying set
    of f is an interval (0, root) when f'(0) < 0 and empty otherwise, so the
    result is the first grid point whenever it lies below the root.
    """
    if not beta_max > 0:
        raise InvalidArgumentError(f"beta_max must be positive, got {beta_max}")
    if grid < 2:
        raise InvalidArgumentError(f"grid must have at least 2 points, got {grid}")

    betas = beta_max * np.logspace(-BETA_GRID_DECADES, 0.0, grid)
    margins = np.asarray(certificate_margin(model, betas))
    qualifying = np.flatnonzero(margins < BETA_QUALIFY_THRESHOLD)
    if qualifying.size == 0:
        logger.info(
            f"No beta in (0, {beta_max:g}] with f(beta) < 0 "
            f"(f'(0) = {model.certificate_slope_at_zero:+.4f})"
        )
        return None

    i = int(qualifying[0])
    best = float(betas[i])
    logger.info(f"beta = {best:.6g}, f(beta) = {margins[i]:.6g} (grid point {i} of {grid})")
    return best


def power_interval_mass(sigma: float, beta: float, upper: float) -> float:
    """int_sigma^upper x^(-1+beta) dx = (upper^beta - sigma^beta) / beta."""
    if not beta > 0:
        raise InvalidArgumentError("beta must be positive")
    if upper < sigma:
        raise InvalidArgumentError("upper must be >= sigma")
    return (upper**beta - sigma**beta) / beta


class PowerDensity(Density):
    """Lyapunov density x^(-1+beta) on [sigma, inf)."""

    name = "power"

    def __init__(self, beta: float, sigma: float):
        if beta < 0 or not sigma > 0:
            raise InvalidArgumentError("need beta >= 0 and sigma > 0")
        self.beta = float(beta)
        self.sigma = float(sigma)

    def __call__(self, states: np.ndarray) -> np.ndarray:
        x = np.asarray(states, dtype=float).reshape(len(states), -1)[:, 0]
        return x ** (-1.0 + self.beta)


class CellCycleProcess(MarkovProcess):
    """Kernel-driven Markov process of cell sizes at birth."""

    name = "cell"

    def __init__(self, model: CellCycleModel):
        self.model = model
        self.state_space = HalfLine(model.sigma, tail_decay=1.0 + model.alpha)

    def advance(self, states: np.ndarray, uniforms: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        sizes = daughter_size_from_uniform(self.model, states[:, 0], 1.0 - uniforms)
        return np.zeros(len(states), dtype=int), np.asarray(sizes).reshape(-1, 1)

    def _cdf(self, base: np.ndarray, t: float) -> np.ndarray:
        if math.isinf(t):
            return np.ones_like(base)
        return np.where(t > base, 1.0 - (t / base) ** (-self.model.alpha), 0.0)

    def transition_probability(self, states: np.ndarray, region: Region) -> np.ndarray:
        """Exact P(y, [l, u)) from the daughter-size distribution."""
        if isinstance(region, WholeSpace):
            return np.ones(len(states))
        if not isinstance(region, HalfLineInterval):
            raise UnsupportedOperationError(
                f"cell transition probabilities need an interval region, got {region.label}"
            )
        base = self.model.sigma * np.maximum(1.0, states[:, 0])
        return self._cdf(base, region.upper) - self._cdf(base, region.lower)

    def perron(self, rho: Density, states: np.ndarray, on_singular: str = "raise") -> np.ndarray:
        """int K(x, y) rho(y) dy by quadrature over [sigma, x / sigma] at each x."""
        alpha, sigma = self.model.alpha, self.model.sigma
        breakpoints: Sequence[float] = (1.0,) + tuple(rho.breakpoints)
        result = np.zeros(len(states))
        for i, x in enumerate(states[:, 0]):
            upper = x / sigma
            if upper <= sigma:
                continue

            def integrand(y: float, x: float = float(x)) -> float:
                return _kernel_scalar(alpha, sigma, x, y) * float(rho(np.array([[y]]))[0])

            try:
                result[i] = integrate_1d(integrand, sigma, upper, breakpoints=breakpoints)
            except QuadratureError as exc:
                if not math.isfinite(exc.best_estimate):
                    if on_singular == "mask":
                        result[i] = np.nan
                        continue
                    raise SingularEvaluationError(
                        f"density not finite below x = {x:g}", branch=0, indices=[i]
                    ) from exc
                raise
        return result
