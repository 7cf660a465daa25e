"""
Quantum non-demolition measurement model on the complex unit sphere.

A measurement ensemble is a list of K invertible complex N x N matrices
M_k with sum_k M_k^* M_k = I. Outcome k occurs with probability
||M_k phi||^2 and maps the state to M_k phi / ||M_k phi||. This module
provides the measurement maps, the closed-form Jacobian determinants of
those maps on the sphere, the explicit Perron operator, the Fock Lyapunov
density and the factorized subinvariance ratio of diagonal ensembles.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from ..constants import (
    COMPLETENESS_TOLERANCE,
    FOCK_SINGULAR_THRESHOLD,
    INVERTIBILITY_TOLERANCE,
    NEAR_SINGULAR_NORM,
    NORM_TOLERANCE,
)
from ..errors import (
    EnsembleValidationError,
    InvalidArgumentError,
    NearSingularError,
    SingularEvaluationError,
    UnsupportedOperationError,
)
from .densities import Density
from .markov import IfsModel
from .spaces import ComplexSphere


logger = logging.getLogger(__name__)

_UNIT_CHECK = 1e-10


def _as_states(phi: npt.ArrayLike, dtype: type = complex) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(phi, dtype=dtype)
    if arr.ndim == 1:
        return arr.reshape(1, -1), True
    if arr.ndim != 2:
        raise InvalidArgumentError(f"states must be 1-D or 2-D, got shape {arr.shape}")
    return arr, False


def _check_unit(states: np.ndarray) -> None:
    deviation = np.abs(np.linalg.norm(states, axis=1) - 1.0)
    if np.any(deviation > _UNIT_CHECK):
        raise InvalidArgumentError(f"state norm deviates from 1 by {float(deviation.max()):.3e}")


def _apply(matrix: np.ndarray, states: np.ndarray) -> np.ndarray:
    images = states @ matrix.T
    norms = np.linalg.norm(images, axis=1, keepdims=True)
    if np.any(norms < NEAR_SINGULAR_NORM):
        raise NearSingularError(f"measurement sent a state to norm {float(norms.min()):.3e}")
    return images / norms


def apply_measurement(M: npt.ArrayLike, phi: npt.ArrayLike) -> np.ndarray:
    """Measurement map M phi / ||M phi|| for one state or a batch.

    Raises:
        NearSingularError: If ||M phi|| < 1e-14
    """
    matrix = np.asarray(M, dtype=complex)
    states, single = _as_states(phi)
    result = _apply(matrix, states)
    return result[0] if single else result


def inverse_measurement(M: npt.ArrayLike, phi: npt.ArrayLike) -> np.ndarray:
    """Inverse measurement map M^-1 phi / ||M^-1 phi||."""
    matrix = np.asarray(M, dtype=complex)
    _abs_det_or_raise(matrix)
    return apply_measurement(np.linalg.inv(matrix), phi)


def _abs_det_or_raise(matrix: np.ndarray) -> float:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {matrix.shape}")
    abs_det = float(abs(np.linalg.det(matrix)))
    if abs_det <= INVERTIBILITY_TOLERANCE:
        raise InvalidArgumentError(f"matrix is singular (|det| = {abs_det:.3e})")
    return abs_det


def jacobian_det_real(M: npt.ArrayLike, phi: npt.ArrayLike) -> npt.ArrayLike:
    """|det| of the differential of phi -> M phi / ||M phi|| on the real sphere.

    Equals |det M| / ||M phi||^N for a real invertible N x N matrix M.
    """
    matrix = np.asarray(M)
    if np.iscomplexobj(matrix):
        if np.any(matrix.imag != 0.0):
            raise InvalidArgumentError("jacobian_det_real needs a real matrix")
        matrix = matrix.real
    matrix = matrix.astype(float)
    abs_det = _abs_det_or_raise(matrix)
    states, single = _as_states(phi, dtype=float)
    _check_unit(states)
    n = matrix.shape[0]
    result = abs_det / np.linalg.norm(states @ matrix.T, axis=1) ** n
    return float(result[0]) if single else result


def jacobian_det_complex(M: npt.ArrayLike, phi: npt.ArrayLike) -> npt.ArrayLike:
    """|det| of the measurement map's differential on the complex sphere.

    Equals |det M|^2 / ||M phi||^(2N) for a complex invertible N x N matrix M.
    """
    matrix = np.asarray(M, dtype=complex)
    abs_det = _abs_det_or_raise(matrix)
    states, single = _as_states(phi)
    _check_unit(states)
    n = matrix.shape[0]
    result = abs_det**2 / np.linalg.norm(states @ matrix.T, axis=1) ** (2 * n)
    return float(result[0]) if single else result


def realify_matrix(M: npt.ArrayLike) -> np.ndarray:
    """Real 2N x 2N block form [[Re M, -Im M], [Im M, Re M]]."""
    matrix = np.asarray(M, dtype=complex)
    return np.block([[matrix.real, -matrix.imag], [matrix.imag, matrix.real]])


def realify_state(phi: npt.ArrayLike) -> np.ndarray:
    """Real coordinates (Re phi, Im phi) matching :func:`realify_matrix`."""
    arr = np.asarray(phi, dtype=complex)
    return np.concatenate([arr.real, arr.imag], axis=-1)


@dataclass(frozen=True)
class MeasurementEnsemble:
    """Validated family of measurement matrices.

    Diagonal ensembles keep the K x N table of entries m_k(i); all ensembles
    keep the matrices with precomputed inverses and |det|. Matrices that are
    not Hermitian positive definite are accepted and listed in ``flags``.
    """

    kind: str
    matrices: np.ndarray
    inverses: np.ndarray
    abs_dets: np.ndarray
    completeness_residual: float
    table: Optional[np.ndarray] = None
    flags: Tuple[str, ...] = ()

    @property
    def n_outcomes(self) -> int:
        return int(self.matrices.shape[0])

    @property
    def dim(self) -> int:
        return int(self.matrices.shape[1])

    @property
    def is_diagonal(self) -> bool:
        return self.kind == "diagonal"

    @property
    def is_valid(self) -> bool:
        return (
            abs(self.completeness_residual) < COMPLETENESS_TOLERANCE
            and bool(np.all(self.abs_dets > INVERTIBILITY_TOLERANCE))
        )

    @classmethod
    def from_diagonal(cls, table: npt.ArrayLike, validate: bool = True) -> "MeasurementEnsemble":
        """Ensemble of diagonal matrices diag(m_k(1), ..., m_k(N)).

        Raises:
            EnsembleValidationError: If ``validate`` and the table violates
                completeness, invertibility, the (0, 1) entry range or
                row-wise distinctness
        """
        entries = np.asarray(table, dtype=float)
        if entries.ndim != 2 or entries.size == 0:
            raise InvalidArgumentError(f"diagonal table must be K x N, got shape {entries.shape}")
        matrices = np.stack([np.diag(row).astype(complex) for row in entries])
        ensemble = cls._build("diagonal", matrices, entries)
        if validate:
            ensemble.validate()
        return ensemble

    @classmethod
    def from_matrices(cls, matrices: Sequence[npt.ArrayLike], validate: bool = True) -> "MeasurementEnsemble":
        """General ensemble from K complex N x N matrices."""
        stacked = np.asarray(matrices, dtype=complex)
        if stacked.ndim != 3 or stacked.shape[1] != stacked.shape[2] or stacked.shape[0] == 0:
            raise InvalidArgumentError(f"expected K x N x N matrices, got shape {stacked.shape}")
        ensemble = cls._build("general", stacked, None)
        if validate:
            ensemble.validate()
        return ensemble

    @classmethod
    def _build(cls, kind: str, matrices: np.ndarray, table: Optional[np.ndarray]) -> "MeasurementEnsemble":
        abs_dets = np.array([abs(np.linalg.det(m)) for m in matrices])
        inverses = np.stack([
            np.linalg.inv(m) if d > INVERTIBILITY_TOLERANCE else np.full_like(m, np.nan)
            for m, d in zip(matrices, abs_dets)
        ])
        residual = completeness_residual(matrices)

        flags: List[str] = []
        for k, m in enumerate(matrices):
            if np.max(np.abs(m - m.conj().T)) > NORM_TOLERANCE:
                flags.append(f"M_{k} is not Hermitian")
            elif np.min(np.linalg.eigvalsh(m)) <= 0.0:
                flags.append(f"M_{k} is not positive definite")
        for flag in flags:
            logger.warning(f"Measurement ensemble: {flag}")

        return cls(
            kind=kind,
            matrices=matrices,
            inverses=inverses,
            abs_dets=abs_dets,
            completeness_residual=residual,
            table=table,
            flags=tuple(flags),
        )

    def validate(self) -> None:
        """Raise EnsembleValidationError unless every invariant holds."""
        problems = []
        if abs(self.completeness_residual) >= COMPLETENESS_TOLERANCE:
            problems.append(f"completeness residual {self.completeness_residual:.3e}")
        if np.any(self.abs_dets <= INVERTIBILITY_TOLERANCE):
            problems.append(f"singular matrix (min |det| {float(self.abs_dets.min()):.3e})")
        if self.table is not None:
            if np.any((self.table <= 0.0) | (self.table >= 1.0)):
                problems.append("diagonal entries must lie in (0, 1)")
            for k, row in enumerate(self.table):
                if len(np.unique(row)) != len(row):
                    problems.append(f"diagonal entries of M_{k} are not distinct")
        if problems:
            raise EnsembleValidationError(
                "invalid measurement ensemble: " + "; ".join(problems),
                completeness_residual=self.completeness_residual,
                abs_determinants=self.abs_dets.tolist(),
            )


def completeness_residual(matrices: npt.ArrayLike) -> float:
    """Entry of sum_k M_k^* M_k - I with the largest magnitude (signed when real)."""
    stacked = np.asarray(matrices, dtype=complex)
    gram = np.einsum("kji,kjl->il", stacked.conj(), stacked)
    residual = gram - np.eye(stacked.shape[1])
    entry = residual.flat[int(np.argmax(np.abs(residual)))]
    if abs(entry.imag) <= np.finfo(float).eps:
        return float(entry.real)
    return float(abs(entry))


def outcome_probabilities(ensemble: MeasurementEnsemble, phi: npt.ArrayLike) -> np.ndarray:
    """p_k(phi) = ||M_k phi||^2; shape (K,) for one state, (n, K) for a batch."""
    states, single = _as_states(phi)
    if ensemble.table is not None:
        probs = (np.abs(states) ** 2) @ (ensemble.table**2).T
    else:
        images = np.einsum("kij,nj->nki", ensemble.matrices, states)
        probs = np.sum(np.abs(images) ** 2, axis=2)
    return probs[0] if single else probs


def _inverse_images(ensemble: MeasurementEnsemble, k: int, states: np.ndarray) -> np.ndarray:
    if ensemble.table is not None:
        return states / ensemble.table[k]
    return states @ ensemble.inverses[k].T


def perron_qnd(
    ensemble: MeasurementEnsemble,
    rho: Density,
    phi: npt.ArrayLike,
    on_singular: str = "raise",
) -> npt.ArrayLike:
    """Explicit Perron operator of the measurement chain.

    P rho(phi) = sum_k |det M_k^-1|^2 / ||M_k^-1 phi||^(2N+2)
                 * rho(M_k^-1 phi / ||M_k^-1 phi||)

    Raises:
        SingularEvaluationError: If rho is not finite at an inverse image
            and ``on_singular`` is "raise"; with "mask" such points are NaN
    """
    states, single = _as_states(phi)
    n = ensemble.dim
    total = np.zeros(len(states))
    singular = np.zeros(len(states), dtype=bool)
    for k in range(ensemble.n_outcomes):
        pre = _inverse_images(ensemble, k, states)
        norms = np.linalg.norm(pre, axis=1)
        values = np.asarray(rho(pre / norms[:, None]), dtype=float)
        bad = ~np.isfinite(values)
        if np.any(bad):
            if on_singular == "raise":
                raise SingularEvaluationError(
                    f"density not finite at {int(bad.sum())} inverse images of outcome {k}",
                    branch=k,
                    indices=np.flatnonzero(bad).tolist(),
                )
            singular |= bad
            values = np.where(bad, 0.0, values)
        total += values / (ensemble.abs_dets[k] ** 2 * norms ** (2 * n + 2))
    if np.any(singular):
        total[singular] = np.nan
    return float(total[0]) if single else total


def subinvariance_ratio(ensemble: MeasurementEnsemble, phi: npt.ArrayLike) -> npt.ArrayLike:
    """sum_k 1 / ||M_k^-1 phi||^2 for a diagonal ensemble.

    For the Fock Lyapunov density the Perron image factorizes as this ratio
    times the density, and the ratio never exceeds 1.

    Raises:
        UnsupportedOperationError: For non-diagonal ensembles
    """
    if ensemble.table is None:
        raise UnsupportedOperationError("subinvariance_ratio is defined for diagonal ensembles only")
    states, single = _as_states(phi)
    weights = np.abs(states) ** 2
    inverse_norms = weights @ (1.0 / ensemble.table**2).T
    ratio = np.sum(1.0 / inverse_norms, axis=1)
    return float(ratio[0]) if single else ratio


class FockLyapunovDensity(Density):
    """rho(phi) = 1 / prod_i |phi_i|^2, infinite on the coordinate hyperplanes."""

    name = "fock_lyapunov"

    def __init__(self, dim_complex: int):
        if dim_complex < 1:
            raise InvalidArgumentError(f"dim_complex must be >= 1, got {dim_complex}")
        self.dim_complex = int(dim_complex)

    def __call__(self, states: np.ndarray) -> np.ndarray:
        moduli = np.abs(np.asarray(states, dtype=complex))
        singular = np.min(moduli, axis=1) < FOCK_SINGULAR_THRESHOLD
        with np.errstate(divide="ignore", over="ignore"):
            values = 1.0 / np.prod(moduli**2, axis=1)
        return np.where(singular, np.inf, values)

    def singular_distance(self, states: np.ndarray) -> np.ndarray:
        return np.min(np.abs(np.asarray(states, dtype=complex)), axis=1)


def fock_proximity(states: np.ndarray, delta: float) -> np.ndarray:
    """True where max_i |phi_i|^2 >= 1 - delta."""
    return np.max(np.abs(states) ** 2, axis=1) >= 1.0 - delta


def to_ifs_model(ensemble: MeasurementEnsemble, check_weights: bool = True) -> IfsModel:
    """Generic iterated-function-system view of the measurement chain.

    Branch k maps phi to M_k phi / ||M_k phi|| with weight ||M_k phi||^2;
    its inverse Jacobian determinant on the sphere is
    |det M_k^-1|^2 / ||M_k^-1 phi||^(2N).
    """
    n = ensemble.dim
    inv_abs_dets = 1.0 / ensemble.abs_dets

    def forward(k: int, states: np.ndarray) -> np.ndarray:
        if ensemble.table is not None:
            images = states * ensemble.table[k]
            return images / np.linalg.norm(images, axis=1, keepdims=True)
        return _apply(ensemble.matrices[k], states)

    def inverse(k: int, states: np.ndarray) -> np.ndarray:
        pre = _inverse_images(ensemble, k, states)
        return pre / np.linalg.norm(pre, axis=1, keepdims=True)

    def inv_jacobian(k: int, states: np.ndarray) -> np.ndarray:
        norms = np.linalg.norm(_inverse_images(ensemble, k, states), axis=1)
        return inv_abs_dets[k] ** 2 / norms ** (2 * n)

    def weight(k: int, states: np.ndarray) -> np.ndarray:
        if ensemble.table is not None:
            return (np.abs(states) ** 2) @ (ensemble.table[k] ** 2)
        return np.sum(np.abs(states @ ensemble.matrices[k].T) ** 2, axis=1)

    return IfsModel(
        branch_count=ensemble.n_outcomes,
        forward_map=forward,
        inverse_map=inverse,
        inv_jacobian_det=inv_jacobian,
        weight=weight,
        state_space=ComplexSphere(n),
        name="qnd",
        check_weights=check_weights,
    )
