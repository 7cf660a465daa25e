"""
Admissible family models.

An admissible family is a nested sequence of finite-measure sets whose
union exhausts the state space up to the limit set of sweeping.
"""

from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from ..constants import DEFAULT_INTERVAL_FAMILY, DEFAULT_SPHERE_FAMILY


class FamilyKind(str, Enum):
    """Supported admissible family shapes."""
    SPHERE_MIN_COORDINATE = "sphere_min_coordinate"  # {phi: min_i |phi_i| >= eps}
    HALF_LINE_INTERVAL = "half_line_interval"  # [sigma, a)


class AdmissibleFamilySpec(BaseModel):
    """Parameter grid describing an admissible family.

    For the sphere kind every parameter is an epsilon in (0, 1); for the
    half-line kind every parameter is an interval end ``a`` strictly above
    the lower end ``lower``.
    """
    kind: FamilyKind
    params: List[float] = Field(..., min_length=1, description="epsilon list or interval ends")
    lower: Optional[float] = Field(None, gt=0, description="Lower end sigma of half-line members")

    @field_validator("params")
    @classmethod
    def check_params_finite(cls, v: List[float]) -> List[float]:
        for p in v:
            if not p == p or p in (float("inf"), float("-inf")):
                raise ValueError("family parameters must be finite")
        return v

    @model_validator(mode="after")
    def check_member_ranges(self) -> "AdmissibleFamilySpec":
        if self.kind == FamilyKind.SPHERE_MIN_COORDINATE:
            if any(not 0.0 < eps < 1.0 for eps in self.params):
                raise ValueError("sphere family epsilons must lie in (0, 1)")
        else:
            if self.lower is None:
                raise ValueError("half-line family requires a lower end")
            if any(a <= self.lower for a in self.params):
                raise ValueError(f"interval ends must exceed the lower end {self.lower}")
        return self

    @classmethod
    def default_sphere(cls) -> "AdmissibleFamilySpec":
        """Default epsilon grid on the complex sphere."""
        return cls(kind=FamilyKind.SPHERE_MIN_COORDINATE, params=list(DEFAULT_SPHERE_FAMILY))

    @classmethod
    def default_half_line(cls, lower: float) -> "AdmissibleFamilySpec":
        """Default interval ends on [lower, inf).

        The grid {1, 2, 4, 8} is used when it lies above ``lower``; otherwise
        the same ratios are applied to ``lower``.
        """
        ends = list(DEFAULT_INTERVAL_FAMILY)
        if min(ends) <= lower:
            ends = [2.0 * lower * e for e in DEFAULT_INTERVAL_FAMILY]
        return cls(kind=FamilyKind.HALF_LINE_INTERVAL, params=ends, lower=lower)

    def members(self) -> List[Tuple[int, float]]:
        """(member_id, parameter) pairs in configuration order."""
        return list(enumerate(self.params))
