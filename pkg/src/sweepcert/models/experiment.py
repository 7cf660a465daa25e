"""
Experiment configuration models.

One JSON document describes one experiment: the model, the random seed,
the ensemble size, the admissible family, certificate settings and where
reports go. Every section rejects unknown keys.
"""

import hashlib
import json
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..constants import (
    DEFAULT_EXCLUSION_RADIUS,
    DEFAULT_HALF_LINE_UPPER,
    DEFAULT_MARGIN_FLOOR,
)
from .cell_cycle import CellCycleModel
from .family import AdmissibleFamilySpec, FamilyKind


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class QndModelConfig(_Section):
    """Quantum non-demolition ensemble given as a diagonal table or full matrices.

    ``diagonal`` is a K x N table of positive entries m_k(i). ``matrices`` is
    a list of K row-major N x N matrices whose entries are [re, im] pairs.
    """
    kind: Literal["qnd"]
    diagonal: Optional[List[List[float]]] = None
    matrices: Optional[List[List[List[Tuple[float, float]]]]] = None

    @model_validator(mode="after")
    def check_one_representation(self) -> "QndModelConfig":
        if (self.diagonal is None) == (self.matrices is None):
            raise ValueError("give exactly one of 'diagonal' or 'matrices'")
        if self.diagonal is not None:
            rows = self.diagonal
            if not rows or not rows[0]:
                raise ValueError("diagonal table must be non-empty")
            if any(len(row) != len(rows[0]) for row in rows):
                raise ValueError("diagonal table rows must have equal length")
            if any(not (0.0 < m < float("inf")) for row in rows for m in row):
                raise ValueError("diagonal entries must be positive and finite")
        else:
            mats = self.matrices or []
            if not mats:
                raise ValueError("matrices must be non-empty")
            n = len(mats[0])
            for mat in mats:
                if len(mat) != n or any(len(row) != n for row in mat):
                    raise ValueError("matrices must all be square with the same size")
        return self

    @property
    def dim(self) -> int:
        if self.diagonal is not None:
            return len(self.diagonal[0])
        return len((self.matrices or [[]])[0])

    def diagonal_table(self) -> np.ndarray:
        return np.asarray(self.diagonal, dtype=float)

    def complex_matrices(self) -> np.ndarray:
        """Matrices as a complex array of shape (K, N, N)."""
        pairs = np.asarray(self.matrices, dtype=float)
        return pairs[..., 0] + 1j * pairs[..., 1]


class CellModelConfig(_Section):
    """Cell-cycle process with a fixed or searched certificate exponent."""
    kind: Literal["cell"]
    alpha: float = Field(..., gt=0)
    sigma: float = Field(..., gt=0)
    beta: Union[Annotated[float, Field(ge=0)], Literal["auto"]] = "auto"
    beta_max: float = Field(1.0, gt=0, description="Upper end of the beta search grid")
    beta_grid: int = Field(100, ge=2, le=100000, description="Number of grid points in the search")
    initial_upper: Optional[float] = Field(
        None, gt=0, description="Initial sizes are uniform on [sigma, initial_upper]; default 2 sigma"
    )

    @model_validator(mode="after")
    def check_initial_upper(self) -> "CellModelConfig":
        if self.initial_upper is not None and self.initial_upper <= self.sigma:
            raise ValueError("initial_upper must exceed sigma")
        return self

    def to_model(self, beta: float = 0.0) -> CellCycleModel:
        return CellCycleModel(alpha=self.alpha, sigma=self.sigma, beta=beta)


ModelConfig = Annotated[Union[QndModelConfig, CellModelConfig], Field(discriminator="kind")]


class FamilyConfig(_Section):
    """Admissible family override; defaults follow the model kind."""
    kind: Optional[FamilyKind] = None
    params: Optional[List[float]] = Field(None, min_length=1)


class CertificateConfig(_Section):
    """Sampling plan of the subinvariance check."""
    n_points: int = Field(10_000, ge=1, le=10_000_000)
    exclusion_radius: float = Field(DEFAULT_EXCLUSION_RADIUS, ge=0, lt=1)
    margin_floor: float = Field(DEFAULT_MARGIN_FLOOR, ge=0, lt=1)
    upper: float = Field(DEFAULT_HALF_LINE_UPPER, gt=0, description="Upper end of half-line sampling")
    n_integrability_samples: int = Field(100_000, ge=1, le=100_000_000)


class OutputConfig(_Section):
    directory: str = Field("results", min_length=1)
    formats: List[Literal["json", "csv"]] = Field(default_factory=lambda: ["json", "csv"])

    @property
    def csv(self) -> bool:
        return "csv" in self.formats


class ExperimentConfig(_Section):
    """Complete experiment document."""
    model: ModelConfig
    seed: int = Field(0, ge=0, le=2**64 - 1)
    n_trajectories: int = Field(10_000, ge=1, le=100_000_000)
    horizon: int = Field(200, ge=0, le=10_000_000)
    checkpoints: Optional[List[int]] = None
    fock_delta: float = Field(0.01, ge=0, le=1, description="Fock-proximity threshold delta")
    family: FamilyConfig = Field(default_factory=FamilyConfig)
    certificate: CertificateConfig = Field(default_factory=CertificateConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @field_validator("checkpoints")
    @classmethod
    def check_checkpoints(cls, v: Optional[List[int]]) -> Optional[List[int]]:
        if v is None:
            return v
        if not v or v[0] != 0:
            raise ValueError("checkpoints must start at 0")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("checkpoints must be strictly increasing")
        return v

    @model_validator(mode="after")
    def check_horizon(self) -> "ExperimentConfig":
        if self.checkpoints is not None and self.checkpoints[-1] > self.horizon:
            raise ValueError("checkpoints must not exceed horizon")
        if self.family.kind is not None:
            expected = (
                FamilyKind.SPHERE_MIN_COORDINATE
                if self.model.kind == "qnd"
                else FamilyKind.HALF_LINE_INTERVAL
            )
            if self.family.kind != expected:
                raise ValueError(f"family kind {self.family.kind.value} does not fit model {self.model.kind}")
        # Surface family range errors at load time
        try:
            self.family_spec()
        except ValidationError as exc:
            raise ValueError(f"invalid family: {exc.errors()[0]['msg']}") from exc
        return self

    def resolved_checkpoints(self) -> List[int]:
        """Configured checkpoints, or 0, horizon/4, horizon/2 and horizon."""
        if self.checkpoints is not None:
            return list(self.checkpoints)
        points = {0, self.horizon // 4, self.horizon // 2, self.horizon}
        return sorted(points)

    def family_spec(self) -> AdmissibleFamilySpec:
        """Admissible family for this model, with defaults filled in."""
        if self.model.kind == "qnd":
            if self.family.params is None:
                return AdmissibleFamilySpec.default_sphere()
            return AdmissibleFamilySpec(kind=FamilyKind.SPHERE_MIN_COORDINATE, params=self.family.params)
        sigma = self.model.sigma
        if self.family.params is None:
            return AdmissibleFamilySpec.default_half_line(sigma)
        return AdmissibleFamilySpec(
            kind=FamilyKind.HALF_LINE_INTERVAL, params=self.family.params, lower=sigma
        )

    def canonical_json(self) -> str:
        """Key-sorted compact JSON of the fully defaulted config."""
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        """sha256 of the canonical JSON, embedded in every report."""
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExperimentConfig":
        """Read and validate a UTF-8 JSON experiment document.

        Raises:
            OSError: If the file cannot be read
            json.JSONDecodeError: If the document is not JSON
            pydantic.ValidationError: If the document does not match the schema
        """
        text = Path(path).read_text(encoding="utf-8")
        return cls.model_validate(json.loads(text))
