"""
Lyapunov-density certificates and sweeping diagnostics.

The certificate check samples points of the state space, evaluates the
Perron image of a candidate density there and records the relative margin
1 - Pu(x)/u(x). Local integrability is checked on every member of an
admissible family. The sweeping diagnostic runs a trajectory ensemble and
tracks the probability mass left in each family member over time.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..constants import (
    DEFAULT_BLOCK_SIZE,
    DEFAULT_EXCLUSION_RADIUS,
    DEFAULT_HALF_LINE_UPPER,
    DEFAULT_MARGIN_FLOOR,
    MAX_RECORDED_VIOLATIONS,
    MAX_RESAMPLE_FRACTION,
    TREND_SLACK_STD_ERRORS,
)
from ..errors import (
    InvalidArgumentError,
    QuadratureError,
    SingularityExposureError,
    UnsupportedOperationError,
)
from ..models.family import AdmissibleFamilySpec, FamilyKind
from ..models.reports import (
    CertificateReport,
    FockProximityReport,
    IntegrabilityEstimate,
    MarginSample,
    MemberMass,
    MemberTrend,
    MonteCarloEstimate,
    SweepingReport,
    TrendVerdict,
    Verdict,
    Violation,
)
from ..utils.simple_logger import log_complete, log_start, log_update
from .densities import Density, StateSampler, UniformSphereDensity
from .markov import MarkovProcess, run_ensemble, set_mass
from .numerics import RandomStream
from .qnd import MeasurementEnsemble, fock_proximity, to_ifs_model
from .spaces import (
    ComplexSphere,
    HalfLineInterval,
    Region,
    SphereMinCoordinate,
    StateSpace,
)


logger = logging.getLogger(__name__)

_MAX_SAMPLING_ROUNDS = 64


@dataclass(frozen=True)
class CertificationPlan:
    """Sampling plan for the subinvariance check."""

    n_points: int = 10_000
    exclusion_radius: float = DEFAULT_EXCLUSION_RADIUS
    margin_floor: float = DEFAULT_MARGIN_FLOOR
    upper: float = DEFAULT_HALF_LINE_UPPER
    max_resample_fraction: float = MAX_RESAMPLE_FRACTION

    def __post_init__(self) -> None:
        if self.n_points < 1:
            raise InvalidArgumentError(f"n_points must be positive, got {self.n_points}")
        if self.exclusion_radius < 0 or self.margin_floor < 0:
            raise InvalidArgumentError("exclusion_radius and margin_floor must be non-negative")


def family_regions(family: AdmissibleFamilySpec) -> List[Region]:
    """Regions of the family members in member order."""
    if family.kind == FamilyKind.SPHERE_MIN_COORDINATE:
        return [SphereMinCoordinate(eps) for eps in family.params]
    lower = float(family.lower)  # type: ignore[arg-type]
    return [HalfLineInterval(lower, a) for a in family.params]


def _integrability_method(space: StateSpace) -> str:
    return "monte_carlo" if isinstance(space, ComplexSphere) else "quadrature"


def check_local_integrability(
    u: Density,
    family: AdmissibleFamilySpec,
    state_space: StateSpace,
    n_mc: int,
    rng: RandomStream,
) -> List[IntegrabilityEstimate]:
    """Integral of ``u`` over every family member.

    Sphere members are integrated by Monte Carlo on ``rng.substream(i)``;
    half-line members by adaptive quadrature. A member whose integral cannot
    be estimated (singular exposure or quadrature failure) is reported with
    no estimate and a failure detail.
    """
    method = _integrability_method(state_space)
    estimates = []
    for (member_id, param), region in zip(family.members(), family_regions(family)):
        try:
            result = state_space.integrate(u, region, n_mc, rng.substream(member_id), u.breakpoints)
            estimate = IntegrabilityEstimate(
                member_id=member_id,
                member_param=param,
                estimate=result.value,
                std_error=result.std_error,
                method=method,
            )
        except (SingularityExposureError, QuadratureError) as exc:
            logger.warning(f"Integrability failed on member {member_id} ({region.label}): {exc}")
            estimate = IntegrabilityEstimate(
                member_id=member_id, member_param=param, method=method, detail=str(exc)
            )
        if not estimate.finite and estimate.detail is None:
            estimate = estimate.model_copy(update={"detail": "non-finite estimate"})
        log_update(logger, f"member {member_id} ({region.label}): {estimate.estimate}")
        estimates.append(estimate)
    return estimates


def _draw_points(
    process: MarkovProcess,
    u: Density,
    plan: CertificationPlan,
    rng: RandomStream,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, Optional[np.ndarray], int]:
    """Accepted points with their ratios, in draw order."""
    space = process.state_space
    kept_points: List[np.ndarray] = []
    kept_pu: List[np.ndarray] = []
    kept_u: List[np.ndarray] = []
    kept_dist: List[np.ndarray] = []
    accepted = 0
    resampled = 0

    for round_index in range(_MAX_SAMPLING_ROUNDS):
        need = plan.n_points - accepted
        if need <= 0:
            break
        points, _ = space.as_batch(space.sample(need, rng.substream(round_index), plan.upper))
        distance = u.singular_distance(points)
        if distance is not None:
            points = points[distance >= plan.exclusion_radius]
            distance = distance[distance >= plan.exclusion_radius]
        if len(points) == 0:
            continue

        u_values = np.asarray(u(points), dtype=float)
        pu_values = process.perron(u, points, on_singular="mask")
        ok = np.isfinite(u_values) & np.isfinite(pu_values) & (u_values > 0.0)
        n_bad = int(np.count_nonzero(~ok))
        if n_bad:
            resampled += n_bad
            logger.warning(f"Singular evaluation at {n_bad} sample points; resampling")
        take = np.flatnonzero(ok)[:need]
        kept_points.append(points[take])
        kept_pu.append(pu_values[take])
        kept_u.append(u_values[take])
        if distance is not None:
            kept_dist.append(distance[take])
        accepted += len(take)

    if accepted == 0:
        raise SingularityExposureError(
            "no certification point could be evaluated", n_rejected=resampled, n_samples=0
        )
    if accepted < plan.n_points:
        logger.warning(
            f"Only {accepted} of {plan.n_points} certification points accepted "
            f"after {_MAX_SAMPLING_ROUNDS} sampling rounds"
        )
    return (
        np.concatenate(kept_points),
        np.concatenate(kept_pu),
        np.concatenate(kept_u),
        np.concatenate(kept_dist) if kept_dist else None,
        resampled,
    )


def check_proper_subinvariance(
    process: MarkovProcess,
    u: Density,
    plan: CertificationPlan,
    rng: RandomStream,
    *,
    family: Optional[AdmissibleFamilySpec] = None,
    integrability_samples: int = 100_000,
    integrability_rng: Optional[RandomStream] = None,
    parameters: Optional[Dict[str, float]] = None,
    model_kind: Optional[str] = None,
) -> CertificateReport:
    """Check Pu < u at sampled points outside the singular-set exclusion zone.

    Points within ``plan.exclusion_radius`` of the singular set of ``u`` are
    excluded before evaluation. Points where ``u`` or its Perron image is
    still not finite are logged, counted and redrawn. A ratio Pu/u >= 1 is a
    violation. The verdict is certified only when there are no violations,
    the smallest margin exceeds ``plan.margin_floor``, every integrability
    estimate is finite, at most ``plan.max_resample_fraction`` of the
    evaluated points had to be redrawn and all ``plan.n_points`` points were
    drawn within the sampling-round limit; any violation gives violated;
    everything else is inconclusive.
    """
    log_start(logger, f"Certifying {u.name} for {process.name} on {plan.n_points} points")
    points, pu_values, u_values, distance, resampled = _draw_points(process, u, plan, rng)
    space = process.state_space

    ratios = pu_values / u_values
    margins = 1.0 - ratios
    violating = np.flatnonzero(ratios >= 1.0)
    violations = [
        Violation(sample_id=int(i), point=space.point_pairs(points[i]), ratio=float(ratios[i]))
        for i in violating[:MAX_RECORDED_VIOLATIONS]
    ]
    samples = [
        MarginSample(
            sample_id=i,
            singular_distance=None if distance is None else float(distance[i]),
            ratio=float(ratios[i]),
            margin=float(margins[i]),
        )
        for i in range(len(ratios))
    ]

    integrability: List[IntegrabilityEstimate] = []
    if family is not None:
        integrability = check_local_integrability(
            u, family, space, integrability_samples, integrability_rng or rng.substream(_MAX_SAMPLING_ROUNDS)
        )

    min_margin = float(margins.min())
    diagnostics: List[str] = []
    resample_fraction = resampled / (len(ratios) + resampled)
    if resample_fraction > plan.max_resample_fraction:
        diagnostics.append(
            f"{resampled} of {len(ratios) + resampled} points were resampled "
            f"({resample_fraction:.3%} > {plan.max_resample_fraction:.3%})"
        )
    short = len(ratios) < plan.n_points
    if short:
        diagnostics.append(f"only {len(ratios)} of {plan.n_points} planned points could be drawn")
    if len(violating):
        verdict = Verdict.VIOLATED
        diagnostics.append(f"{len(violating)} points with Pu/u >= 1 (max ratio {float(ratios.max()):.12g})")
    elif (
        min_margin > plan.margin_floor
        and all(item.finite for item in integrability)
        and resample_fraction <= plan.max_resample_fraction
        and not short
    ):
        verdict = Verdict.CERTIFIED
    else:
        verdict = Verdict.INCONCLUSIVE
        if min_margin <= plan.margin_floor:
            diagnostics.append(f"min margin {min_margin:.3e} does not exceed floor {plan.margin_floor:.3e}")
        if not all(item.finite for item in integrability):
            diagnostics.append("local integrability failed on at least one family member")

    report = CertificateReport(
        model_kind=model_kind or process.name,
        density=u.name,
        n_points=len(ratios),
        min_margin=min_margin,
        mean_margin=float(margins.mean()),
        margin_floor=plan.margin_floor,
        exclusion_radius=plan.exclusion_radius,
        n_resampled=resampled,
        n_violations=len(violating),
        violations=violations,
        integrability=integrability,
        verdict=verdict,
        parameters=dict(parameters or {}),
        diagnostics=diagnostics,
        samples=samples,
        seed=rng.seed,
    )
    log_complete(logger, f"{verdict.value} (min margin {min_margin:.3e}, {len(violating)} violations)")
    return report


def trend_verdict(estimates: Sequence[MonteCarloEstimate]) -> TrendVerdict:
    """Decaying when masses never rise by more than 3 combined std errors
    between consecutive checkpoints and the final mass is below the first."""
    for prev, curr in zip(estimates, estimates[1:]):
        slack = TREND_SLACK_STD_ERRORS * math.hypot(prev.std_error, curr.std_error)
        if curr.value > prev.value + slack:
            return TrendVerdict.NOT_DECAYING
    if len(estimates) < 2 or not estimates[-1].value < estimates[0].value:
        return TrendVerdict.NOT_DECAYING
    return TrendVerdict.DECAYING


def sweeping_diagnostic(
    process: MarkovProcess,
    initial_sampler: StateSampler,
    family: AdmissibleFamilySpec,
    checkpoints: Sequence[int],
    n_traj: int,
    rng: RandomStream,
    *,
    workers: int = 1,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> SweepingReport:
    """Probability mass of each family member at each checkpoint.

    mass(A, n) is the fraction of trajectories in A at step n, with the
    binomial standard error sqrt(p (1 - p) / n_traj).
    """
    points = list(checkpoints)
    if not points or points[0] != 0:
        raise InvalidArgumentError("checkpoints must include 0 as the first entry")
    snapshots = run_ensemble(
        process, initial_sampler, n_traj, points, rng, workers=workers, block_size=block_size
    )

    masses: List[MemberMass] = []
    trends: List[MemberTrend] = []
    for (member_id, param), region in zip(family.members(), family_regions(family)):
        estimates = [set_mass(snapshot, region) for snapshot in snapshots]
        for snapshot, est in zip(snapshots, estimates):
            masses.append(
                MemberMass(
                    member_id=member_id,
                    member_param=param,
                    checkpoint=snapshot.step_index,
                    mass=est.value,
                    std_error=est.std_error,
                )
            )
        verdict = trend_verdict(estimates)
        trends.append(
            MemberTrend(
                member_id=member_id,
                member_param=param,
                initial_mass=estimates[0].value,
                final_mass=estimates[-1].value,
                verdict=verdict,
            )
        )
        log_update(
            logger,
            f"member {member_id} ({region.label}): {estimates[0].value:.4f} -> "
            f"{estimates[-1].value:.4f} ({verdict.value})",
        )

    return SweepingReport(
        model_kind=process.name,
        family_kind=family.kind.value,
        n_trajectories=n_traj,
        checkpoints=points,
        masses=masses,
        trends=trends,
        seed=rng.seed,
    )


def fock_proximity_diagnostic(
    ensemble: MeasurementEnsemble,
    n_traj: int,
    horizon: int,
    delta: float,
    rng: RandomStream,
    *,
    checkpoints: Optional[Sequence[int]] = None,
    initial_sampler: Optional[StateSampler] = None,
    workers: int = 1,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> FockProximityReport:
    """Fraction of trajectories with max_i |phi_i|^2 >= 1 - delta over time.

    Informational only. Trajectories start uniform on the sphere unless an
    ``initial_sampler`` is given; checkpoints default to five evenly spaced
    steps from 0 to ``horizon``.

    Raises:
        UnsupportedOperationError: For non-diagonal ensembles
    """
    if not ensemble.is_diagonal:
        raise UnsupportedOperationError("Fock proximity is defined for diagonal ensembles only")
    if not 0.0 <= delta <= 1.0:
        raise InvalidArgumentError(f"delta must lie in [0, 1], got {delta}")
    if checkpoints is None:
        checkpoints = sorted({round(horizon * i / 4) for i in range(5)})

    process = to_ifs_model(ensemble)
    if initial_sampler is None:
        initial_sampler = UniformSphereDensity(ensemble.dim).sample

    snapshots = run_ensemble(
        process, initial_sampler, n_traj, checkpoints, rng, workers=workers, block_size=block_size
    )
    fractions: List[float] = []
    std_errors: List[float] = []
    for snapshot in snapshots:
        p = float(np.mean(fock_proximity(snapshot.states, delta)))
        fractions.append(p)
        std_errors.append(math.sqrt(p * (1.0 - p) / n_traj))

    non_decreasing = all(
        b >= a - TREND_SLACK_STD_ERRORS * math.hypot(sa, sb)
        for a, b, sa, sb in zip(fractions, fractions[1:], std_errors, std_errors[1:])
    )
    return FockProximityReport(
        delta=delta,
        checkpoints=list(checkpoints),
        fractions=fractions,
        std_errors=std_errors,
        non_decreasing=non_decreasing,
    )
