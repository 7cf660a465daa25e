"""Shared numerical substrate.

Reproducible random streams, uniform sampling on complex unit spheres,
finite-difference Jacobian determinants on spheres, one-dimensional adaptive
quadrature and Monte Carlo integration over spheres with error estimates.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
from scipy import integrate

from ..constants import (
    DEFAULT_FD_STEP,
    DEFAULT_QUAD_REL_TOL,
    DEFAULT_QUAD_TOL,
    FD_DISAGREEMENT_TOLERANCE,
    MAX_NONFINITE_FRACTION,
    QUAD_SUBDIVISION_LIMIT,
)
from ..errors import InvalidArgumentError, QuadratureError, SingularityExposureError
from ..models.reports import MonteCarloEstimate


logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
ComplexArray = npt.NDArray[np.complex128]
SphereMap = Callable[[FloatArray], FloatArray]
StateFunction = Callable[[ComplexArray], npt.ArrayLike]

_UINT64_MAX = 2**64 - 1
_UNIT_NORM_CHECK = 1e-10


@dataclass(frozen=True)
class RandomStream:
    """Reproducible, splittable random stream.

    A stream is an immutable value identified by ``(seed, stream_index)`` and
    the lineage of parent stream indices it was split from. Every call to
    :meth:`generator` restarts the same sequence, so any operation that takes
    a stream is a pure function of its inputs and the stream identity.

    Streams use the counter-based Philox bit generator keyed through
    ``SeedSequence(seed, spawn_key=lineage + (stream_index,))``, which gives
    identical sequences on every platform and statistically independent
    sequences for distinct indices.
    """

    seed: int
    stream_index: int = 0
    lineage: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= int(self.seed) <= _UINT64_MAX:
            raise InvalidArgumentError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if int(self.stream_index) < 0:
            raise InvalidArgumentError(f"stream_index must be non-negative, got {self.stream_index}")
        if any(int(i) < 0 for i in self.lineage):
            raise InvalidArgumentError("lineage indices must be non-negative")

    def seed_sequence(self) -> np.random.SeedSequence:
        """Seed sequence identifying this stream."""
        spawn_key = tuple(int(i) for i in self.lineage) + (int(self.stream_index),)
        return np.random.SeedSequence(entropy=int(self.seed), spawn_key=spawn_key)

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        return np.random.Generator(np.random.Philox(self.seed_sequence()))

    def substream(self, index: int) -> "RandomStream":
        """Child stream ``index`` of this stream."""
        return RandomStream(
            seed=self.seed,
            stream_index=int(index),
            lineage=tuple(self.lineage) + (int(self.stream_index),),
        )


@dataclass(frozen=True)
class FiniteDifferenceResult:
    """Finite-difference determinant with its step-halving diagnostics."""

    value: float
    error_bound: float
    numeric_warning: bool
    step: float


def sphere_volume(dim_complex: int) -> float:
    """Riemannian volume of the unit sphere S^{2N-1} in C^N = R^{2N}.

    vol(S^{2N-1}) = 2 pi^N / (N-1)!
    """
    if dim_complex < 1:
        raise InvalidArgumentError(f"dim_complex must be >= 1, got {dim_complex}")
    return 2.0 * math.pi**dim_complex / math.factorial(dim_complex - 1)


def gaussian_sphere_points(
    generator: np.random.Generator, n: int, dim_complex: int
) -> ComplexArray:
    """Draw ``n`` uniform points on the complex unit sphere of C^dim_complex.

    Normalized standard Gaussian 2N-vectors are exactly uniform by rotation
    invariance. Real parts come first in the draw order.
    """
    gauss = generator.standard_normal((n, 2 * dim_complex))
    points = gauss[:, :dim_complex] + 1j * gauss[:, dim_complex:]
    norms = np.linalg.norm(points, axis=1, keepdims=True)
    return points / norms


def sample_uniform_sphere(
    dim_complex: int, rng: RandomStream, size: Optional[int] = None
) -> ComplexArray:
    """Sample from the normalized Riemannian measure on the unit sphere of C^N.

    Args:
        dim_complex: Complex dimension N (>= 1)
        rng: Random stream to draw from
        size: Number of points; None returns a single state of shape (N,)

    Returns:
        Unit-norm complex vector(s)
    """
    if dim_complex < 1:
        raise InvalidArgumentError(f"dim_complex must be >= 1, got {dim_complex}")
    n = 1 if size is None else int(size)
    if n < 1:
        raise InvalidArgumentError(f"size must be positive, got {size}")
    points = gaussian_sphere_points(rng.generator(), n, dim_complex)
    return points[0] if size is None else points


def tangent_basis(point: FloatArray) -> FloatArray:
    """Orthonormal basis of the tangent space of the unit sphere at ``point``.

    Standard basis vectors are orthogonalized against ``point`` by modified
    Gram-Schmidt in order of increasing |point_j| (stable sort), dropping the
    coordinate most aligned with ``point``. The frame is therefore a
    deterministic function of the point.

    Returns:
        Array of shape (n, n-1) whose columns span the tangent space.
    """
    p = np.asarray(point, dtype=float)
    n = p.size
    order = np.argsort(np.abs(p), kind="stable")[: n - 1]
    basis = [p / np.linalg.norm(p)]
    for j in order:
        v = np.zeros(n)
        v[j] = 1.0
        for _ in range(2):  # re-orthogonalize once
            for b in basis:
                v = v - (b @ v) * b
        v = v / np.linalg.norm(v)
        basis.append(v)
    return np.column_stack(basis[1:]) if n > 1 else np.zeros((1, 0))


def _retract(v: FloatArray) -> FloatArray:
    return v / np.linalg.norm(v)


def _tangent_jacobian(
    sphere_map: SphereMap,
    point: FloatArray,
    step: float,
    frame_in: FloatArray,
    frame_out: FloatArray,
) -> float:
    columns = []
    for t in frame_in.T:
        plus = np.asarray(sphere_map(_retract(point + step * t)), dtype=float)
        minus = np.asarray(sphere_map(_retract(point - step * t)), dtype=float)
        columns.append((plus - minus) / (2.0 * step))
    differential = np.column_stack(columns)
    return float(abs(np.linalg.det(frame_out.T @ differential)))


def fd_jacobian_det_on_sphere(
    sphere_map: SphereMap,
    point: FloatArray,
    step: float = DEFAULT_FD_STEP,
) -> FiniteDifferenceResult:
    """Finite-difference |det| of a sphere map's differential on tangent spaces.

    Central differences along an orthonormal tangent frame at ``point`` are
    projected onto a tangent frame at the image. The estimate at ``step`` and
    ``step / 2`` is combined by Richardson extrapolation; when the two
    disagree by more than FD_DISAGREEMENT_TOLERANCE (relative) the result
    carries ``numeric_warning=True``.

    Args:
        sphere_map: Smooth map sending unit real vectors to unit real vectors
        point: Unit real vector
        step: Finite-difference step (> 0)

    Returns:
        FiniteDifferenceResult with value, error bound and warning flag
    """
    if not step > 0:
        raise InvalidArgumentError(f"step must be positive, got {step}")
    p = np.asarray(point, dtype=float).ravel()
    if abs(np.linalg.norm(p) - 1.0) > _UNIT_NORM_CHECK:
        raise InvalidArgumentError("point must have unit norm")
    image = np.asarray(sphere_map(p), dtype=float).ravel()
    if abs(np.linalg.norm(image) - 1.0) > _UNIT_NORM_CHECK:
        raise InvalidArgumentError("map must send unit vectors to unit vectors")
    if p.size == 1:
        return FiniteDifferenceResult(value=1.0, error_bound=0.0, numeric_warning=False, step=step)

    frame_in = tangent_basis(p)
    frame_out = tangent_basis(image)
    coarse = _tangent_jacobian(sphere_map, p, step, frame_in, frame_out)
    fine = _tangent_jacobian(sphere_map, p, step / 2.0, frame_in, frame_out)

    value = fine + (fine - coarse) / 3.0
    gap = abs(fine - coarse)
    scale = max(1.0, abs(value))
    roundoff = 8.0 * p.size * np.finfo(float).eps / step * scale
    numeric_warning = gap > FD_DISAGREEMENT_TOLERANCE * scale
    if numeric_warning:
        logger.warning(
            f"Finite-difference determinant unstable at step={step:g}: "
            f"step-halving gap {gap:.3e} (value {value:.6g})"
        )
    return FiniteDifferenceResult(
        value=float(value),
        error_bound=float(4.0 * gap + roundoff),
        numeric_warning=bool(numeric_warning),
        step=step,
    )


def integrate_1d(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = DEFAULT_QUAD_TOL,
    *,
    rel_tol: float = DEFAULT_QUAD_REL_TOL,
    breakpoints: Sequence[float] = (),
    decay_rate: Optional[float] = None,
) -> float:
    """Adaptive quadrature of a real function over [a, b], b possibly +inf.

    Infinite upper limits are mapped to [0, 1) by x = a + t / (1 - t). The
    integrand must then decay at least like x^-decay_rate with decay_rate > 1,
    which the caller declares.

    Args:
        f: Scalar integrand
        a: Finite lower limit
        b: Upper limit (float or math.inf)
        tol: Absolute error target
        rel_tol: Relative error target; the result is accepted when the
            error estimate is below max(tol, rel_tol * |value|)
        breakpoints: Interior points where f is discontinuous or kinked
        decay_rate: Declared polynomial decay rate for infinite b

    Returns:
        Integral estimate

    Raises:
        QuadratureError: If the tolerance is not reached within budget
    """
    if not math.isfinite(a):
        raise InvalidArgumentError("lower limit must be finite")
    if b == a:
        return 0.0
    if b < a:
        raise InvalidArgumentError(f"upper limit {b} below lower limit {a}")

    if math.isinf(b):
        if decay_rate is None or decay_rate <= 1.0:
            raise InvalidArgumentError(
                "infinite upper limit requires a declared decay_rate > 1"
            )

        def integrand(t: float) -> float:
            s = 1.0 - t
            return float(f(a + t / s)) / (s * s)

        lo, hi = 0.0, 1.0
        points = [(x - a) / (1.0 + x - a) for x in breakpoints if x > a]
    else:
        def integrand(t: float) -> float:
            return float(f(t))

        lo, hi = float(a), float(b)
        points = [float(x) for x in breakpoints if a < x < b]

    kwargs = dict(epsabs=tol, epsrel=rel_tol, limit=QUAD_SUBDIVISION_LIMIT)
    if points:
        kwargs["points"] = sorted(set(points))

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, error = integrate.quad(integrand, lo, hi, **kwargs)
        except integrate.IntegrationWarning as exc:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                value, error = integrate.quad(integrand, lo, hi, **kwargs)
            raise QuadratureError(
                f"Quadrature on [{a}, {b}] did not converge: {exc}",
                best_estimate=float(value),
                error_estimate=float(error),
            ) from exc

    if error > max(tol, rel_tol * abs(value)):
        raise QuadratureError(
            f"Quadrature on [{a}, {b}] error estimate {error:.3e} exceeds tolerance",
            best_estimate=float(value),
            error_estimate=float(error),
        )
    return float(value)


def summarize_samples(values: FloatArray, scale: float = 1.0) -> Tuple[float, float]:
    """Mean and standard error of samples, both multiplied by ``scale``.

    The mean is accumulated relative to the first sample so that a constant
    sample returns that constant exactly.
    """
    if values.size == 0:
        raise InvalidArgumentError("cannot summarize an empty sample")
    shift = float(values[0])
    deviations = values - shift
    mean = shift + float(deviations.mean())
    if np.all(values >= 0.0):
        mean = max(mean, 0.0)
    std_error = float(deviations.std(ddof=1)) / math.sqrt(values.size) if values.size > 1 else 0.0
    return scale * mean, scale * std_error


def mc_integral_on_sphere(
    g: StateFunction,
    dim_complex: int,
    n: int,
    rng: RandomStream,
) -> MonteCarloEstimate:
    """Monte Carlo estimate of the integral of ``g`` over the unit sphere of C^N.

    ``g`` is called once with an (n, N) complex array and must return n
    values. Non-finite evaluations (samples on a singular set) are rejected
    and counted; more than MAX_NONFINITE_FRACTION of them is an error.

    Returns:
        MonteCarloEstimate with value = vol(S^{2N-1}) * sample mean
    """
    if n < 1:
        raise InvalidArgumentError(f"n must be positive, got {n}")
    points = sample_uniform_sphere(dim_complex, rng, size=n)
    values = np.asarray(g(points), dtype=float).reshape(n)

    finite = np.isfinite(values)
    n_rejected = int(n - finite.sum())
    if n_rejected > MAX_NONFINITE_FRACTION * n:
        raise SingularityExposureError(
            f"{n_rejected} of {n} samples evaluated to non-finite values",
            n_rejected=n_rejected,
            n_samples=n,
        )
    if n_rejected:
        logger.warning(f"Rejected {n_rejected} non-finite evaluations out of {n}")

    kept = values[finite]
    value, std_error = summarize_samples(kept, scale=sphere_volume(dim_complex))
    return MonteCarloEstimate(
        value=value,
        std_error=std_error,
        n_samples=int(kept.size),
        n_rejected=n_rejected,
    )
