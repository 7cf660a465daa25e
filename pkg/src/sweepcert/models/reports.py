"""
Report data models.

Defines the structured outcomes of certification runs, sweeping
experiments and the validation battery. Reports contain no timestamps so
that identical inputs serialize to identical bytes.
"""

from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Verdict(str, Enum):
    """Outcome of a subinvariance certificate check."""
    CERTIFIED = "certified"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"


class TrendVerdict(str, Enum):
    """Outcome of a set-mass trend test."""
    DECAYING = "decaying"
    NOT_DECAYING = "not decaying"


class MonteCarloEstimate(BaseModel):
    """Monte Carlo estimate with its standard error."""
    model_config = ConfigDict(frozen=True)

    value: float = Field(..., description="Point estimate")
    std_error: float = Field(..., ge=0, description="Standard error of the estimate")
    n_samples: int = Field(..., gt=0, description="Number of samples used")
    n_rejected: int = Field(0, ge=0, description="Non-finite samples rejected")

    def combined_with(self, other: "MonteCarloEstimate") -> "MonteCarloEstimate":
        """Difference self - other with independent errors added in quadrature."""
        return MonteCarloEstimate(
            value=self.value - other.value,
            std_error=(self.std_error**2 + other.std_error**2) ** 0.5,
            n_samples=min(self.n_samples, other.n_samples),
            n_rejected=self.n_rejected + other.n_rejected,
        )


class IntegrabilityEstimate(BaseModel):
    """Integral of a candidate density over one admissible family member."""
    member_id: int = Field(..., ge=0, description="Index of the member in its family")
    member_param: float = Field(..., description="epsilon or interval end a")
    estimate: Optional[float] = Field(None, description="Integral estimate, None on failure")
    std_error: Optional[float] = Field(None, ge=0, description="Standard error (0 for quadrature)")
    method: str = Field(..., description="monte_carlo or quadrature")
    detail: Optional[str] = Field(None, description="Failure reason if not finite")

    @property
    def finite(self) -> bool:
        """Whether the member passed the local integrability check."""
        return (
            self.estimate is not None
            and self.std_error is not None
            and self.estimate == self.estimate
            and abs(self.estimate) != float("inf")
            and abs(self.std_error) != float("inf")
        )


class Violation(BaseModel):
    """Sample point where the candidate density failed strict subinvariance."""
    sample_id: int = Field(..., ge=0)
    point: List[List[float]] = Field(..., description="Coordinates as [re, im] pairs")
    ratio: float = Field(..., description="Pu(x) / u(x)")


class MarginSample(BaseModel):
    """Relative margin at one certification sample."""
    sample_id: int = Field(..., ge=0)
    singular_distance: Optional[float] = Field(None, description="Distance proxy to the singular set")
    ratio: float = Field(..., description="Pu(x) / u(x)")
    margin: float = Field(..., description="1 - Pu(x) / u(x)")


class CertificateReport(BaseModel):
    """Outcome of a proper-subinvariance certificate check."""
    model_kind: str = Field(..., description="qnd or cell")
    density: str = Field(..., description="Name of the candidate density")
    n_points: int = Field(..., ge=0, description="Accepted sample points")
    min_margin: Optional[float] = Field(None, description="Smallest relative margin 1 - Pu/u")
    mean_margin: Optional[float] = Field(None, description="Mean relative margin")
    margin_floor: float = Field(..., ge=0)
    exclusion_radius: float = Field(..., ge=0)
    n_resampled: int = Field(0, ge=0, description="Points rejected after singular evaluation")
    n_violations: int = Field(0, ge=0)
    violations: List[Violation] = Field(default_factory=list, description="First recorded violations")
    integrability: List[IntegrabilityEstimate] = Field(default_factory=list)
    verdict: Verdict
    parameters: Dict[str, float] = Field(default_factory=dict, description="Model and certificate parameters")
    diagnostics: List[str] = Field(default_factory=list)
    samples: List[MarginSample] = Field(default_factory=list, description="Per-sample margins")
    seed: Optional[int] = None
    config_digest: Optional[str] = None

    model_config = ConfigDict(use_enum_values=False)

    @model_validator(mode="after")
    def check_verdict(self) -> "CertificateReport":
        if self.verdict == Verdict.CERTIFIED:
            if self.n_violations or self.min_margin is None or self.min_margin <= self.margin_floor:
                raise ValueError("certified verdict requires no violations and min_margin > margin_floor")
            if not all(item.finite for item in self.integrability):
                raise ValueError("certified verdict requires finite integrability estimates")
        if self.verdict == Verdict.VIOLATED and self.n_violations == 0:
            raise ValueError("violated verdict requires at least one violation")
        return self


class MemberMass(BaseModel):
    """Probability that a trajectory lies in a family member at a checkpoint."""
    member_id: int = Field(..., ge=0)
    member_param: float
    checkpoint: int = Field(..., ge=0)
    mass: float = Field(..., ge=0, le=1)
    std_error: float = Field(..., ge=0)


class MemberTrend(BaseModel):
    """Trend verdict for one family member across checkpoints."""
    member_id: int = Field(..., ge=0)
    member_param: float
    initial_mass: float = Field(..., ge=0, le=1)
    final_mass: float = Field(..., ge=0, le=1)
    verdict: TrendVerdict


class FockProximityReport(BaseModel):
    """Fraction of trajectories within delta of a basis state (informational)."""
    delta: float = Field(..., ge=0, le=1)
    checkpoints: List[int]
    fractions: List[float]
    std_errors: List[float]
    non_decreasing: bool = Field(..., description="Observed trend, not a pass/fail criterion")


class SweepingReport(BaseModel):
    """Set-mass decay experiment over an admissible family."""
    model_kind: str
    family_kind: str
    n_trajectories: int = Field(..., gt=0)
    checkpoints: List[int]
    masses: List[MemberMass]
    trends: List[MemberTrend]
    trend_rule: str = Field(
        "non-increasing within 3 combined std errors between consecutive checkpoints "
        "and final mass below initial mass",
        description="Rule used for trend verdicts",
    )
    fock_proximity: Optional[FockProximityReport] = None
    seed: Optional[int] = None
    config_digest: Optional[str] = None

    def mass_of(self, member_id: int, checkpoint: int) -> MemberMass:
        """Look up the mass entry for a member at a checkpoint."""
        for entry in self.masses:
            if entry.member_id == member_id and entry.checkpoint == checkpoint:
                return entry
        raise KeyError((member_id, checkpoint))

    def trend_of(self, member_id: int) -> MemberTrend:
        """Look up the trend verdict for a member."""
        for trend in self.trends:
            if trend.member_id == member_id:
                return trend
        raise KeyError(member_id)


class ValidationCheck(BaseModel):
    """One entry of the self-consistency battery."""
    name: str
    value: float = Field(..., description="Observed discrepancy or residual")
    tolerance: float = Field(..., ge=0)
    passed: bool
    detail: str = ""


class ValidationReport(BaseModel):
    """All checks run by the validate command."""
    model_kind: str
    checks: List[ValidationCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        """True when every check passed."""
        return all(check.passed for check in self.checks)

    def add(
        self,
        name: str,
        value: float,
        tolerance: float,
        detail: str = "",
        passed: Optional[bool] = None,
    ) -> ValidationCheck:
        """Record a check.

        Unless ``passed`` is given explicitly, the check passes when
        |value| <= tolerance (NaN never passes).
        """
        if passed is None:
            passed = bool(value == value and abs(value) <= tolerance)
        check = ValidationCheck(
            name=name, value=float(value), tolerance=tolerance, passed=bool(passed), detail=detail
        )
        self.checks.append(check)
        return check
