"""
Data models for sweepcert.

This module provides Pydantic models for experiment configuration, model
parameters and the structured reports written by the command line.
"""

from .cell_cycle import CellCycleModel
from .experiment import (
    CellModelConfig,
    CertificateConfig,
    ExperimentConfig,
    FamilyConfig,
    OutputConfig,
    QndModelConfig,
)
from .family import AdmissibleFamilySpec, FamilyKind
from .reports import (
    CertificateReport,
    FockProximityReport,
    IntegrabilityEstimate,
    MarginSample,
    MemberMass,
    MemberTrend,
    MonteCarloEstimate,
    SweepingReport,
    TrendVerdict,
    ValidationCheck,
    ValidationReport,
    Verdict,
    Violation,
)

__all__ = [
    # Model parameters
    "CellCycleModel",
    "AdmissibleFamilySpec",
    "FamilyKind",
    # Experiment configuration
    "ExperimentConfig",
    "QndModelConfig",
    "CellModelConfig",
    "FamilyConfig",
    "CertificateConfig",
    "OutputConfig",
    # Reports
    "MonteCarloEstimate",
    "IntegrabilityEstimate",
    "Violation",
    "MarginSample",
    "CertificateReport",
    "Verdict",
    "MemberMass",
    "MemberTrend",
    "TrendVerdict",
    "FockProximityReport",
    "SweepingReport",
    "ValidationCheck",
    "ValidationReport",
]
