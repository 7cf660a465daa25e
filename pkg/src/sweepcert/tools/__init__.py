"""Numerical tools: Markov engine, bundled models and certificate checks."""

from .cell_cycle import (
    CellCycleProcess,
    PowerDensity,
    certificate_margin,
    find_beta,
    kernel_eval,
    perron_power_closed_form,
    sample_daughter_size,
)
from .certify import (
    CertificationPlan,
    check_local_integrability,
    check_proper_subinvariance,
    fock_proximity_diagnostic,
    sweeping_diagnostic,
)
from .densities import Density, FunctionDensity, UniformIntervalDensity, UniformSphereDensity
from .markov import (
    IfsModel,
    MarkovProcess,
    TrajectorySnapshot,
    duality_residual,
    perron_pointwise,
    run_ensemble,
    step,
    transition_probability,
)
from .numerics import (
    RandomStream,
    fd_jacobian_det_on_sphere,
    integrate_1d,
    mc_integral_on_sphere,
    sample_uniform_sphere,
)
from .qnd import (
    FockLyapunovDensity,
    MeasurementEnsemble,
    apply_measurement,
    inverse_measurement,
    jacobian_det_complex,
    jacobian_det_real,
    outcome_probabilities,
    perron_qnd,
    subinvariance_ratio,
    to_ifs_model,
)
from .spaces import (
    ComplexSphere,
    HalfLine,
    HalfLineInterval,
    PredicateRegion,
    SphereMinCoordinate,
    WholeSpace,
)

__all__ = [
    # Numerics
    "RandomStream",
    "sample_uniform_sphere",
    "fd_jacobian_det_on_sphere",
    "integrate_1d",
    "mc_integral_on_sphere",
    # State spaces and densities
    "ComplexSphere",
    "HalfLine",
    "WholeSpace",
    "SphereMinCoordinate",
    "HalfLineInterval",
    "PredicateRegion",
    "Density",
    "FunctionDensity",
    "UniformSphereDensity",
    "UniformIntervalDensity",
    # Markov engine
    "MarkovProcess",
    "IfsModel",
    "TrajectorySnapshot",
    "transition_probability",
    "step",
    "run_ensemble",
    "perron_pointwise",
    "duality_residual",
    # Quantum non-demolition measurements
    "MeasurementEnsemble",
    "FockLyapunovDensity",
    "apply_measurement",
    "inverse_measurement",
    "outcome_probabilities",
    "jacobian_det_real",
    "jacobian_det_complex",
    "perron_qnd",
    "subinvariance_ratio",
    "to_ifs_model",
    # Cell cycle
    "CellCycleProcess",
    "PowerDensity",
    "kernel_eval",
    "sample_daughter_size",
    "perron_power_closed_form",
    "certificate_margin",
    "find_beta",
    # Certification
    "CertificationPlan",
    "check_proper_subinvariance",
    "check_local_integrability",
    "sweeping_diagnostic",
    "fock_proximity_diagnostic",
]
