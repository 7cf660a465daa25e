"""State spaces and measurable regions.

Two state spaces are supported: the complex unit sphere of C^N carrying
its Riemannian measure, and the half-line [lower, inf) carrying Lebesgue
measure. States are always handled in batches of shape (n, width).
"""

import logging
import math
from abc import ABC, abstractmethod
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from ..constants import DEFAULT_HALF_LINE_UPPER, NORM_DRIFT_GUARD
from ..errors import IntegrityError, InvalidArgumentError, UnsupportedOperationError
from ..models.reports import MonteCarloEstimate
from .numerics import (
    RandomStream,
    integrate_1d,
    mc_integral_on_sphere,
    sample_uniform_sphere,
    sphere_volume,
)


logger = logging.getLogger(__name__)

BoolArray = npt.NDArray[np.bool_]
BatchFunction = Callable[[np.ndarray], npt.ArrayLike]


class Region(ABC):
    """Measurable subset of a state space, evaluated as an indicator."""

    @abstractmethod
    def contains(self, states: np.ndarray) -> BoolArray:
        """Membership of each state in a batch of shape (n, width)."""

    @property
    def label(self) -> str:
        return type(self).__name__


class WholeSpace(Region):
    def contains(self, states: np.ndarray) -> BoolArray:
        return np.ones(len(states), dtype=bool)

    @property
    def label(self) -> str:
        return "whole space"


class SphereMinCoordinate(Region):
    """A_eps = {phi : min_i |phi_i| >= eps}."""

    def __init__(self, eps: float):
        if not 0.0 <= eps < 1.0:
            raise InvalidArgumentError(f"eps must lie in [0, 1), got {eps}")
        self.eps = float(eps)

    def contains(self, states: np.ndarray) -> BoolArray:
        return np.min(np.abs(states), axis=1) >= self.eps

    @property
    def label(self) -> str:
        return f"min|phi_i| >= {self.eps:g}"


class HalfLineInterval(Region):
    """[lower, upper) on the half-line; ``upper`` may be inf."""

    def __init__(self, lower: float, upper: float):
        if not upper > lower:
            raise InvalidArgumentError(f"empty interval [{lower}, {upper})")
        self.lower = float(lower)
        self.upper = float(upper)

    def contains(self, states: np.ndarray) -> BoolArray:
        x = np.asarray(states, dtype=float).reshape(len(states), -1)[:, 0]
        return (x >= self.lower) & (x < self.upper)

    @property
    def label(self) -> str:
        return f"[{self.lower:g}, {self.upper:g})"


class PredicateRegion(Region):
    """Region given by a vectorized membership predicate."""

    def __init__(self, predicate: Callable[[np.ndarray], npt.ArrayLike], name: str = "predicate"):
        self.predicate = predicate
        self.name = name

    def contains(self, states: np.ndarray) -> BoolArray:
        return np.asarray(self.predicate(states), dtype=bool).reshape(len(states))

    @property
    def label(self) -> str:
        return self.name


class StateSpace(ABC):
    """Common interface of the supported state spaces."""

    width: int
    dtype: type

    def as_batch(self, states: npt.ArrayLike) -> Tuple[np.ndarray, bool]:
        """Coerce states to shape (n, width); the flag marks a single state."""
        arr = np.asarray(states, dtype=self.dtype)
        if arr.ndim == 0:
            return arr.reshape(1, 1), True
        if arr.ndim == 1:
            if self.width == 1:
                return arr.reshape(-1, 1), False
            return arr.reshape(1, -1), True
        if arr.ndim != 2 or arr.shape[1] != self.width:
            raise InvalidArgumentError(
                f"expected states of width {self.width}, got shape {arr.shape}"
            )
        return arr, False

    @abstractmethod
    def contains(self, states: np.ndarray, tol: float) -> BoolArray:
        """Membership test with tolerance ``tol``."""

    def guard(self, states: np.ndarray, tol: float = NORM_DRIFT_GUARD) -> None:
        """Raise IntegrityError if any state left the space by more than ``tol``."""
        inside = self.contains(states, tol)
        if not np.all(inside):
            bad = np.flatnonzero(~inside)
            raise IntegrityError(
                f"{bad.size} states left the state space (first index {int(bad[0])})"
            )

    @abstractmethod
    def project(self, states: np.ndarray) -> np.ndarray:
        """Map states back onto the space after floating-point drift."""

    @abstractmethod
    def sample(self, n: int, rng: RandomStream, upper: Optional[float] = None) -> np.ndarray:
        """Draw ``n`` evaluation points for certification."""

    @abstractmethod
    def integrate(
        self,
        fn: BatchFunction,
        region: Region,
        n_mc: int,
        rng: RandomStream,
        breakpoints: Sequence[float] = (),
    ) -> MonteCarloEstimate:
        """Integral of ``fn`` over ``region`` with respect to the reference measure."""

    @abstractmethod
    def point_pairs(self, state: np.ndarray) -> List[List[float]]:
        """Coordinates of one state as [re, im] pairs."""


class ComplexSphere(StateSpace):
    """Unit sphere of C^N, identified with S^(2N-1) in R^(2N)."""

    dtype = complex

    def __init__(self, dim_complex: int):
        if dim_complex < 1:
            raise InvalidArgumentError(f"dim_complex must be >= 1, got {dim_complex}")
        self.dim_complex = int(dim_complex)
        self.width = self.dim_complex

    @property
    def volume(self) -> float:
        return sphere_volume(self.dim_complex)

    def contains(self, states: np.ndarray, tol: float) -> BoolArray:
        norms = np.linalg.norm(states, axis=1)
        return np.isfinite(norms) & (np.abs(norms - 1.0) <= tol)

    def project(self, states: np.ndarray) -> np.ndarray:
        return states / np.linalg.norm(states, axis=1, keepdims=True)

    def sample(self, n: int, rng: RandomStream, upper: Optional[float] = None) -> np.ndarray:
        return sample_uniform_sphere(self.dim_complex, rng, size=n)

    def integrate(
        self,
        fn: BatchFunction,
        region: Region,
        n_mc: int,
        rng: RandomStream,
        breakpoints: Sequence[float] = (),
    ) -> MonteCarloEstimate:
        def restricted(points: np.ndarray) -> np.ndarray:
            values = np.zeros(len(points))
            mask = region.contains(points)
            if np.any(mask):
                values[mask] = np.asarray(fn(points[mask]), dtype=float).reshape(-1)
            return values

        return mc_integral_on_sphere(restricted, self.dim_complex, n_mc, rng)

    def point_pairs(self, state: np.ndarray) -> List[List[float]]:
        return [[float(z.real), float(z.imag)] for z in np.asarray(state).reshape(-1)]

    def __repr__(self) -> str:
        return f"ComplexSphere(dim_complex={self.dim_complex})"


class HalfLine(StateSpace):
    """[lower, inf) with Lebesgue measure.

    ``tail_decay`` is the polynomial decay rate integrands are declared to
    have at infinity; it is needed to integrate over unbounded regions.
    """

    dtype = float
    width = 1

    def __init__(self, lower: float, tail_decay: Optional[float] = None):
        if not (lower > 0 and math.isfinite(lower)):
            raise InvalidArgumentError(f"lower must be positive and finite, got {lower}")
        self.lower = float(lower)
        self.tail_decay = tail_decay

    def contains(self, states: np.ndarray, tol: float) -> BoolArray:
        x = states[:, 0]
        return np.isfinite(x) & (x >= self.lower - tol * max(1.0, self.lower))

    def project(self, states: np.ndarray) -> np.ndarray:
        return np.maximum(states, self.lower)

    def sample(self, n: int, rng: RandomStream, upper: Optional[float] = None) -> np.ndarray:
        """Log-uniform points on [lower, upper]."""
        top = DEFAULT_HALF_LINE_UPPER if upper is None else float(upper)
        if not top > self.lower:
            raise InvalidArgumentError(f"upper {top} must exceed lower {self.lower}")
        u = rng.generator().random(n)
        x = self.lower * np.exp(u * math.log(top / self.lower))
        return x.reshape(n, 1)

    def integrate(
        self,
        fn: BatchFunction,
        region: Region,
        n_mc: int,
        rng: RandomStream,
        breakpoints: Sequence[float] = (),
    ) -> MonteCarloEstimate:
        """Adaptive quadrature over an interval region; ``n_mc`` and ``rng`` are unused."""
        if isinstance(region, HalfLineInterval):
            a, b = max(self.lower, region.lower), region.upper
        elif isinstance(region, WholeSpace):
            a, b = self.lower, math.inf
        else:
            raise UnsupportedOperationError(
                f"half-line integration needs an interval region, got {region.label}"
            )
        if b <= a:
            return MonteCarloEstimate(value=0.0, std_error=0.0, n_samples=1)

        def scalar(x: float) -> float:
            return float(np.asarray(fn(np.array([[x]])), dtype=float).reshape(-1)[0])

        value = integrate_1d(
            scalar,
            a,
            b,
            breakpoints=breakpoints,
            decay_rate=self.tail_decay if math.isinf(b) else None,
        )
        return MonteCarloEstimate(value=value, std_error=0.0, n_samples=1)

    def point_pairs(self, state: np.ndarray) -> List[List[float]]:
        return [[float(np.asarray(state).reshape(-1)[0]), 0.0]]

    def __repr__(self) -> str:
        return f"HalfLine(lower={self.lower})"
