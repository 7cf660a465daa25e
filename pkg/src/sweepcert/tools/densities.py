"""Density callbacks with singular-set descriptions.

A density is evaluated on batches of states of shape (n, width) and may
describe where it blows up: ``singular_distance`` gives a distance proxy
to the singular set and ``breakpoints`` lists kinks for 1-D quadrature.
Densities that can be sampled also act as initial-state samplers.
"""

from abc import ABC, abstractmethod
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from ..errors import InvalidArgumentError, UnsupportedOperationError
from .numerics import RandomStream, sample_uniform_sphere, sphere_volume

StateSampler = Callable[[int, RandomStream], np.ndarray]


class Density(ABC):
    """Non-negative function on a state space."""

    name: str = "density"

    @abstractmethod
    def __call__(self, states: np.ndarray) -> np.ndarray:
        """Values at a batch of states; +inf on the singular set."""

    def singular_distance(self, states: np.ndarray) -> Optional[np.ndarray]:
        """Distance proxy to the singular set, or None when there is none."""
        return None

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return ()

    def sample(self, n: int, rng: RandomStream) -> np.ndarray:
        """Draw ``n`` states distributed with this (normalized) density."""
        raise UnsupportedOperationError(f"{self.name} cannot be sampled")


class UniformSphereDensity(Density):
    """Normalized Riemannian measure on the unit sphere of C^N."""

    name = "uniform_sphere"

    def __init__(self, dim_complex: int):
        self.dim_complex = int(dim_complex)
        self.value = 1.0 / sphere_volume(self.dim_complex)

    def __call__(self, states: np.ndarray) -> np.ndarray:
        return np.full(len(states), self.value)

    def sample(self, n: int, rng: RandomStream) -> np.ndarray:
        return sample_uniform_sphere(self.dim_complex, rng, size=n)


class UniformIntervalDensity(Density):
    """Uniform probability density on [lower, upper] of the half-line."""

    name = "uniform_interval"

    def __init__(self, lower: float, upper: float):
        if not upper > lower:
            raise InvalidArgumentError(f"empty interval [{lower}, {upper}]")
        self.lower = float(lower)
        self.upper = float(upper)

    def __call__(self, states: np.ndarray) -> np.ndarray:
        x = np.asarray(states, dtype=float).reshape(len(states), -1)[:, 0]
        inside = (x >= self.lower) & (x <= self.upper)
        return np.where(inside, 1.0 / (self.upper - self.lower), 0.0)

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return (self.lower, self.upper)

    def sample(self, n: int, rng: RandomStream) -> np.ndarray:
        u = rng.generator().random(n)
        return (self.lower + (self.upper - self.lower) * u).reshape(n, 1)


class FunctionDensity(Density):
    """Density wrapping a user callback."""

    def __init__(
        self,
        fn: Callable[[np.ndarray], npt.ArrayLike],
        name: str = "custom",
        singular_distance: Optional[Callable[[np.ndarray], npt.ArrayLike]] = None,
        breakpoints: Sequence[float] = (),
        sampler: Optional[StateSampler] = None,
    ):
        self.fn = fn
        self.name = name
        self._singular_distance = singular_distance
        self._breakpoints = tuple(float(b) for b in breakpoints)
        self._sampler = sampler

    def __call__(self, states: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(states), dtype=float).reshape(len(states))

    def singular_distance(self, states: np.ndarray) -> Optional[np.ndarray]:
        if self._singular_distance is None:
            return None
        return np.asarray(self._singular_distance(states), dtype=float).reshape(len(states))

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return self._breakpoints

    def sample(self, n: int, rng: RandomStream) -> np.ndarray:
        if self._sampler is None:
            return super().sample(n, rng)
        return self._sampler(n, rng)
