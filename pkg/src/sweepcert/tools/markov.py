"""Markov processes driven by state-dependent iterated function systems.

Provides the generic engine shared by the bundled models: one-step
sampling, trajectory ensembles, pointwise Perron-operator evaluation,
set-mass estimation and the duality self-check between the Perron operator
and transition probabilities.
"""

import logging
import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from ..constants import DEFAULT_BLOCK_SIZE, NORM_DRIFT_GUARD, WEIGHT_SUM_TOLERANCE
from ..errors import (
    InvalidArgumentError,
    ModelInconsistencyError,
    SingularEvaluationError,
)
from ..models.reports import MonteCarloEstimate
from ..utils.simple_logger import log_complete, log_start
from .densities import Density, StateSampler
from .numerics import RandomStream, summarize_samples
from .spaces import Region, StateSpace


logger = logging.getLogger(__name__)

BranchFunction = Callable[[int, np.ndarray], np.ndarray]
BranchScalar = Callable[[int, np.ndarray], npt.ArrayLike]


@dataclass(frozen=True)
class TrajectorySnapshot:
    """States of every trajectory of an ensemble at one step index."""

    step_index: int
    states: np.ndarray

    def __post_init__(self) -> None:
        self.states.setflags(write=False)

    @property
    def n_trajectories(self) -> int:
        return len(self.states)


class MarkovProcess(ABC):
    """Discrete-time Markov process with a Perron operator on densities."""

    state_space: StateSpace
    name: str = "markov"

    @abstractmethod
    def advance(self, states: np.ndarray, uniforms: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """One step for a batch, consuming exactly one uniform per state.

        Returns:
            (branch indices, next states)
        """

    @abstractmethod
    def transition_probability(self, states: np.ndarray, region: Region) -> np.ndarray:
        """P(x, A) for each state x of the batch."""

    @abstractmethod
    def perron(self, rho: Density, states: np.ndarray, on_singular: str = "raise") -> np.ndarray:
        """Perron operator applied to ``rho`` at a batch of states.

        With ``on_singular="mask"`` points where ``rho`` is not finite at a
        preimage come back as NaN instead of raising.
        """


@dataclass
class IfsModel(MarkovProcess):
    """State-dependent iterated function system.

    All callables are vectorized over a batch of states: ``forward_map(k, X)``
    and ``inverse_map(k, X)`` return states, ``inv_jacobian_det(k, X)`` returns
    |det D S_k^-1| at X and ``weight(k, X)`` returns p_k(X). Branches are
    indexed from 0.
    """

    branch_count: int
    forward_map: BranchFunction
    inverse_map: BranchFunction
    inv_jacobian_det: BranchScalar
    weight: BranchScalar
    state_space: StateSpace
    name: str = "ifs"
    check_weights: bool = field(default=True)

    def __post_init__(self) -> None:
        if self.branch_count < 1:
            raise InvalidArgumentError(f"branch_count must be >= 1, got {self.branch_count}")

    def weights(self, states: np.ndarray) -> np.ndarray:
        """Branch weights as an (n, K) array, checked to form probability vectors."""
        w = np.column_stack(
            [np.asarray(self.weight(k, states), dtype=float).reshape(len(states))
             for k in range(self.branch_count)]
        )
        if self.check_weights:
            if np.any(w < 0.0):
                raise ModelInconsistencyError("negative branch weight")
            deviation = float(np.max(np.abs(w.sum(axis=1) - 1.0))) if len(w) else 0.0
            if deviation > WEIGHT_SUM_TOLERANCE:
                raise ModelInconsistencyError(
                    f"branch weights sum to 1 only within {deviation:.3e}"
                )
        return w

    def advance(self, states: np.ndarray, uniforms: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        w = self.weights(states)
        cumulative = np.cumsum(w, axis=1)
        # inverse-CDF walk; the last branch absorbs rounding in the cumulative sum
        branches = np.minimum(
            (uniforms[:, None] >= cumulative).sum(axis=1), self.branch_count - 1
        )
        next_states = np.empty_like(states)
        for k in range(self.branch_count):
            mask = branches == k
            if np.any(mask):
                next_states[mask] = self.forward_map(k, states[mask])
        return branches, next_states

    def transition_probability(self, states: np.ndarray, region: Region) -> np.ndarray:
        w = self.weights(states)
        total = np.zeros(len(states))
        for k in range(self.branch_count):
            total += w[:, k] * region.contains(self.forward_map(k, states))
        return total

    def perron(self, rho: Density, states: np.ndarray, on_singular: str = "raise") -> np.ndarray:
        if on_singular not in ("raise", "mask"):
            raise InvalidArgumentError(f"on_singular must be 'raise' or 'mask', got {on_singular!r}")
        total = np.zeros(len(states))
        singular = np.zeros(len(states), dtype=bool)
        for k in range(self.branch_count):
            pre = self.inverse_map(k, states)
            values = np.asarray(rho(pre), dtype=float)
            bad = ~np.isfinite(values)
            if np.any(bad):
                if on_singular == "raise":
                    raise SingularEvaluationError(
                        f"density not finite at {int(bad.sum())} preimages of branch {k}",
                        branch=k,
                        indices=np.flatnonzero(bad).tolist(),
                    )
                singular |= bad
                values = np.where(bad, 0.0, values)
            p = np.asarray(self.weight(k, pre), dtype=float).reshape(len(states))
            jac = np.asarray(self.inv_jacobian_det(k, states), dtype=float).reshape(len(states))
            total += p * values * jac
        if np.any(singular):
            total[singular] = np.nan
        return total


def _single(model: MarkovProcess, x: npt.ArrayLike) -> Tuple[np.ndarray, bool]:
    return model.state_space.as_batch(x)


def transition_probability(model: MarkovProcess, x: npt.ArrayLike, region: Region) -> npt.ArrayLike:
    """P(x, A) = sum of weights of branches sending x into A."""
    states, single = _single(model, x)
    result = model.transition_probability(states, region)
    return float(result[0]) if single else result


def step(model: MarkovProcess, x: npt.ArrayLike, rng: RandomStream) -> Tuple[int, np.ndarray]:
    """Draw one branch with probability p_k(x) and apply it.

    Returns:
        (0-based branch index, next state)
    """
    states, _ = _single(model, x)
    if len(states) != 1:
        raise InvalidArgumentError("step takes a single state; use run_ensemble for batches")
    uniform = rng.generator().random(1)
    branches, next_states = model.advance(states, uniform)
    model.state_space.guard(next_states)
    next_states = model.state_space.project(next_states)
    return int(branches[0]), next_states[0]


def _validate_checkpoints(checkpoints: Sequence[int]) -> List[int]:
    points = [int(c) for c in checkpoints]
    if not points:
        raise InvalidArgumentError("at least one checkpoint is required")
    if points[0] < 0 or any(b <= a for a, b in zip(points, points[1:])):
        raise InvalidArgumentError(f"checkpoints must be non-negative and strictly increasing: {points}")
    return points


def _run_block(
    model: MarkovProcess,
    initial_sampler: StateSampler,
    count: int,
    checkpoints: List[int],
    stream: RandomStream,
    drift_guard: float,
) -> List[np.ndarray]:
    space = model.state_space
    states, _ = space.as_batch(initial_sampler(count, stream.substream(0)))
    if len(states) != count:
        raise InvalidArgumentError(f"initial sampler returned {len(states)} states, expected {count}")
    space.guard(states, drift_guard)
    states = space.project(states)
    generator = stream.substream(1).generator()

    captured: List[np.ndarray] = []
    n = 0
    for target in checkpoints:
        while n < target:
            _, states = model.advance(states, generator.random(count))
            space.guard(states, drift_guard)
            states = space.project(states)
            n += 1
        captured.append(states.copy())
    return captured


def run_ensemble(
    model: MarkovProcess,
    initial_sampler: StateSampler,
    n_traj: int,
    checkpoints: Sequence[int],
    rng: RandomStream,
    *,
    workers: int = 1,
    block_size: int = DEFAULT_BLOCK_SIZE,
    drift_guard: float = NORM_DRIFT_GUARD,
) -> List[TrajectorySnapshot]:
    """Simulate ``n_traj`` independent trajectories and snapshot them.

    Trajectories are split into fixed blocks of ``block_size``. Block b
    draws its initial states from ``rng.substream(b).substream(0)`` and its
    step uniforms from ``rng.substream(b).substream(1)``, one uniform per
    trajectory per step. Blocks are reassembled in block order, so the
    result does not depend on ``workers``.

    Raises:
        IntegrityError: If a state drifts off the state space by more than
            ``drift_guard`` before renormalization
    """
    if n_traj < 1:
        raise InvalidArgumentError(f"n_traj must be positive, got {n_traj}")
    if block_size < 1 or workers < 1:
        raise InvalidArgumentError("block_size and workers must be positive")
    points = _validate_checkpoints(checkpoints)

    n_blocks = math.ceil(n_traj / block_size)
    counts = [min(block_size, n_traj - b * block_size) for b in range(n_blocks)]
    log_start(logger, f"{model.name}: {n_traj} trajectories to step {points[-1]} "
                      f"({n_blocks} blocks, {workers} workers)")

    def run(b: int) -> List[np.ndarray]:
        logger.debug(f"block {b}: {counts[b]} trajectories")
        return _run_block(model, initial_sampler, counts[b], points, rng.substream(b), drift_guard)

    if workers == 1 or n_blocks == 1:
        blocks = [run(b) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            blocks = list(executor.map(run, range(n_blocks)))

    snapshots = [
        TrajectorySnapshot(step_index=c, states=np.concatenate([blk[i] for blk in blocks]))
        for i, c in enumerate(points)
    ]
    log_complete(logger, f"{model.name}: ensemble finished")
    return snapshots


def perron_pointwise(model: MarkovProcess, rho: Density, x: npt.ArrayLike) -> npt.ArrayLike:
    """Perron operator of ``model`` applied to ``rho`` at x (single state or batch).

    For an IFS this is sum_k p_k(S_k^-1 x) rho(S_k^-1 x) |det D S_k^-1(x)|.

    Raises:
        SingularEvaluationError: If rho is not finite at a preimage
    """
    states, single = _single(model, x)
    result = model.perron(rho, states)
    return float(result[0]) if single else result


def set_mass(snapshot: TrajectorySnapshot, region: Region) -> MonteCarloEstimate:
    """Fraction of trajectories in ``region`` with its binomial standard error."""
    n = snapshot.n_trajectories
    hits = int(np.count_nonzero(region.contains(snapshot.states)))
    p = hits / n
    return MonteCarloEstimate(value=p, std_error=math.sqrt(p * (1.0 - p) / n), n_samples=n)


def duality_residual(
    model: MarkovProcess,
    rho: Density,
    region: Region,
    n_mc: int,
    rng: RandomStream,
) -> MonteCarloEstimate:
    """Estimate of int_A P rho dm - int rho(x) P(x, A) dm.

    The left side integrates 1_A times the Perron image on
    ``rng.substream(0)``; the right side averages the exact transition
    probability over states sampled from ``rho`` on ``rng.substream(1)``.
    Standard errors are combined in quadrature.
    """
    space = model.state_space
    lhs = space.integrate(
        lambda s: model.perron(rho, s),
        region,
        n_mc,
        rng.substream(0),
        breakpoints=rho.breakpoints,
    )

    samples, _ = space.as_batch(rho.sample(n_mc, rng.substream(1)))
    probabilities = model.transition_probability(samples, region)
    value, std_error = summarize_samples(probabilities)
    rhs = MonteCarloEstimate(value=value, std_error=std_error, n_samples=len(samples))

    residual = lhs.combined_with(rhs)
    logger.info(
        f"duality on {region.label}: lhs={lhs.value:.6g}±{lhs.std_error:.2g} "
        f"rhs={rhs.value:.6g}±{rhs.std_error:.2g}"
    )
    return residual
