"""Exception types shared across sweepcert."""

from typing import Optional, Sequence


class SweepcertError(Exception):
    """Base exception for all sweepcert failures."""
    pass


class InvalidArgumentError(SweepcertError, ValueError):
    """Argument outside the documented domain of an operation."""
    pass


class UnsupportedOperationError(SweepcertError):
    """Operation is not defined for the given model kind."""
    pass


class QuadratureError(SweepcertError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, best_estimate: float, error_estimate: float):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


class SingularityExposureError(SweepcertError):
    """Too many Monte Carlo samples landed on a singular set."""

    def __init__(self, message: str, n_rejected: int, n_samples: int):
        super().__init__(message)
        self.n_rejected = n_rejected
        self.n_samples = n_samples


class ModelInconsistencyError(SweepcertError):
    """Branch weights of a model do not form a probability vector."""
    pass


class SingularEvaluationError(SweepcertError):
    """A density evaluated to a non-finite value at a branch preimage."""

    def __init__(
        self,
        message: str,
        branch: int,
        indices: Optional[Sequence[int]] = None,
    ):
        super().__init__(message)
        self.branch = branch
        self.indices = list(indices) if indices is not None else []


class IntegrityError(SweepcertError):
    """A trajectory left its state space beyond the drift guard."""
    pass


class NearSingularError(SweepcertError):
    """A measurement matrix sent a unit state to (almost) zero."""
    pass


class EnsembleValidationError(SweepcertError):
    """Measurement matrices violate completeness or invertibility."""

    def __init__(
        self,
        message: str,
        completeness_residual: float,
        abs_determinants: Sequence[float],
    ):
        super().__init__(message)
        self.completeness_residual = completeness_residual
        self.abs_determinants = list(abs_determinants)
