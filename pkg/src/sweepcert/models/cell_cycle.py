"""Cell-cycle size process parameters."""

import math

from pydantic import BaseModel, ConfigDict, Field


class CellCycleModel(BaseModel):
    """Parameters of the cell-size-at-birth process.

    ``alpha`` shapes the division-time tail, ``sigma`` is the minimum size at
    birth and ``beta`` is the candidate certificate exponent of the Lyapunov
    density x^(-1+beta).
    """
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(..., gt=0, description="Tail exponent")
    sigma: float = Field(..., gt=0, description="Minimum size at birth")
    beta: float = Field(0.0, ge=0, description="Certificate exponent")

    @property
    def sweeps_to_infinity(self) -> bool:
        """Regime in which small-beta certificates can exist (alpha ln sigma >= -1)."""
        return self.alpha * math.log(self.sigma) >= -1.0

    @property
    def certificate_slope_at_zero(self) -> float:
        """Derivative of the certificate margin at beta = 0."""
        return -self.alpha * math.log(self.sigma) - 1.0

    def with_beta(self, beta: float) -> "CellCycleModel":
        """Copy with a different certificate exponent."""
        return CellCycleModel(alpha=self.alpha, sigma=self.sigma, beta=beta)
