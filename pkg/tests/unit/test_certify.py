"""Unit tests for certificate checks and sweeping diagnostics."""

import logging

import numpy as np
import pytest

from sweepcert.errors import InvalidArgumentError, UnsupportedOperationError
from sweepcert.models import AdmissibleFamilySpec, FamilyKind, MonteCarloEstimate, TrendVerdict, Verdict
from sweepcert.tools.cell_cycle import CellCycleProcess, PowerDensity, find_beta
from sweepcert.tools.certify import (
    CertificationPlan,
    check_local_integrability,
    check_proper_subinvariance,
    family_regions,
    fock_proximity_diagnostic,
    sweeping_diagnostic,
    trend_verdict,
)
from sweepcert.tools.densities import FunctionDensity, UniformIntervalDensity, UniformSphereDensity
from sweepcert.tools.numerics import RandomStream
from sweepcert.tools.qnd import FockLyapunovDensity, MeasurementEnsemble, to_ifs_model
from sweepcert.tools.spaces import ComplexSphere, HalfLineInterval, SphereMinCoordinate


def estimates(values, se=0.01):
    return [MonteCarloEstimate(value=v, std_error=se, n_samples=1000) for v in values]


@pytest.fixture
def cell_certificate(cell_model):
    beta = find_beta(cell_model)
    return CellCycleProcess(cell_model.with_beta(beta)), PowerDensity(beta, cell_model.sigma)


class TestCertificationPlan:
    """Test plan validation."""

    def test_defaults(self):
        """Defaults follow the documented constants."""
        plan = CertificationPlan()
        assert plan.n_points == 10_000
        assert plan.exclusion_radius == 1e-3
        assert plan.margin_floor == 1e-9

    def test_invalid_points(self):
        """At least one point is required."""
        with pytest.raises(InvalidArgumentError):
            CertificationPlan(n_points=0)


class TestFamilies:
    """Test family regions."""

    def test_sphere_regions(self):
        """Sphere members are min-coordinate regions."""
        regions = family_regions(AdmissibleFamilySpec.default_sphere())
        assert all(isinstance(r, SphereMinCoordinate) for r in regions)
        assert len(regions) == 4

    def test_half_line_regions(self):
        """Half-line members are intervals [sigma, a)."""
        family = AdmissibleFamilySpec.default_half_line(0.5)
        regions = family_regions(family)
        assert family.params == [1.0, 2.0, 4.0, 8.0]
        assert all(isinstance(r, HalfLineInterval) for r in regions)
        assert regions[0].lower == 0.5

    def test_half_line_fallback_grid(self):
        """With sigma >= 1 the default ends scale with sigma."""
        family = AdmissibleFamilySpec.default_half_line(1.5)
        assert family.params == [3.0, 6.0, 12.0, 24.0]
        assert family.kind == FamilyKind.HALF_LINE_INTERVAL


class TestQndCertificate:
    """Test the subinvariance check on the measurement model."""

    def test_fock_density_certified(self, diagonal_ensemble):
        """The Fock density is properly subinvariant for the diagonal example."""
        report = check_proper_subinvariance(
            to_ifs_model(diagonal_ensemble),
            FockLyapunovDensity(2),
            CertificationPlan(n_points=2000),
            RandomStream(seed=1),
            family=AdmissibleFamilySpec.default_sphere(),
            integrability_samples=20000,
            integrability_rng=RandomStream(seed=2),
        )
        assert report.verdict == Verdict.CERTIFIED
        assert report.n_points == 2000
        assert report.min_margin > 0.0
        assert report.n_violations == 0
        assert len(report.integrability) == 4
        assert all(item.finite and item.method == "monte_carlo" for item in report.integrability)
        assert all(s.singular_distance >= 1e-3 for s in report.samples)

    def test_margin_bounded_by_factorized_ratio(self, diagonal_ensemble):
        """Margins match 1 - ratio for every sample."""
        report = check_proper_subinvariance(
            to_ifs_model(diagonal_ensemble),
            FockLyapunovDensity(2),
            CertificationPlan(n_points=200),
            RandomStream(seed=3),
        )
        for sample in report.samples:
            assert sample.margin == pytest.approx(1.0 - sample.ratio, abs=1e-12)
            assert sample.ratio < 1.0

    def test_uniform_density_violates(self, diagonal_ensemble):
        """The uniform density is not subinvariant near basis states."""
        report = check_proper_subinvariance(
            to_ifs_model(diagonal_ensemble),
            UniformSphereDensity(2),
            CertificationPlan(n_points=500),
            RandomStream(seed=4),
        )
        assert report.verdict == Verdict.VIOLATED
        assert report.n_violations > 0
        assert len(report.violations) == min(report.n_violations, 100)
        assert all(v.ratio >= 1.0 for v in report.violations)
        assert len(report.violations[0].point) == 2

    def test_deterministic(self, diagonal_ensemble):
        """Same streams, same report."""
        args = (to_ifs_model(diagonal_ensemble), FockLyapunovDensity(2), CertificationPlan(n_points=300))
        a = check_proper_subinvariance(*args, RandomStream(seed=5))
        b = check_proper_subinvariance(*args, RandomStream(seed=5))
        assert a.model_dump_json() == b.model_dump_json()

    def test_short_draw_is_inconclusive(self, diagonal_ensemble, caplog):
        """An exclusion zone covering almost the whole sphere leaves the plan unfilled."""
        with caplog.at_level(logging.WARNING, logger="sweepcert.tools.certify"):
            report = check_proper_subinvariance(
                to_ifs_model(diagonal_ensemble),
                FockLyapunovDensity(2),
                CertificationPlan(n_points=2000, exclusion_radius=0.7),
                RandomStream(seed=16),
            )
        assert report.n_points < 2000
        assert report.n_violations == 0
        assert report.min_margin > 0.0
        assert report.verdict == Verdict.INCONCLUSIVE
        assert any("of 2000 planned points" in d for d in report.diagnostics)
        assert any("certification points accepted" in r.getMessage() for r in caplog.records)

    def test_failed_integrability_is_reported(self):
        """A density that is infinite everywhere cannot be integrated."""
        u = FunctionDensity(lambda s: np.full(len(s), np.inf), name="infinite")
        results = check_local_integrability(
            u, AdmissibleFamilySpec.default_sphere(), ComplexSphere(2), 1000, RandomStream(seed=1)
        )
        assert all(not item.finite for item in results)
        assert all(item.detail for item in results)


class TestCellCertificate:
    """Test the subinvariance check on the cell-cycle model."""

    def test_power_density_certified(self, cell_model, cell_certificate):
        """x^(-1+beta) is certified at the searched beta."""
        process, u = cell_certificate
        report = check_proper_subinvariance(
            process,
            u,
            CertificationPlan(n_points=300),
            RandomStream(seed=6),
            family=AdmissibleFamilySpec.default_half_line(cell_model.sigma),
            parameters={"beta": u.beta},
            model_kind="cell",
        )
        assert report.verdict == Verdict.CERTIFIED
        assert report.min_margin > 0.003
        assert report.parameters["beta"] == u.beta
        assert all(item.method == "quadrature" and item.std_error == 0.0 for item in report.integrability)

    def test_margin_floor_makes_inconclusive(self, cell_certificate):
        """A margin floor above the observed margin gives inconclusive."""
        process, u = cell_certificate
        report = check_proper_subinvariance(
            process, u, CertificationPlan(n_points=100, margin_floor=0.5), RandomStream(seed=7)
        )
        assert report.verdict == Verdict.INCONCLUSIVE
        assert any("floor" in d for d in report.diagnostics)


class TestIdentityChain:
    """A single identity outcome leaves every density and set unchanged."""

    @pytest.fixture
    def identity_model(self):
        return to_ifs_model(MeasurementEnsemble.from_matrices([np.eye(2)]))

    def test_no_proper_subinvariance(self, identity_model):
        """Pu = u up to rounding, so nothing is certified."""
        report = check_proper_subinvariance(
            identity_model, FockLyapunovDensity(2), CertificationPlan(n_points=500), RandomStream(seed=12)
        )
        assert report.verdict in (Verdict.VIOLATED, Verdict.INCONCLUSIVE)
        assert abs(report.min_margin) < 1e-12
        assert all(abs(s.margin) < 1e-12 for s in report.samples)

    def test_masses_stay_constant(self, identity_model):
        """Set masses never move and the trend is not decaying."""
        family = AdmissibleFamilySpec.default_sphere()
        report = sweeping_diagnostic(
            identity_model,
            UniformSphereDensity(2).sample,
            family,
            [0, 5, 10],
            1000,
            RandomStream(seed=13),
        )
        for member_id, _ in family.members():
            masses = [report.mass_of(member_id, c).mass for c in (0, 5, 10)]
            assert masses[0] == masses[1] == masses[2]
            assert report.trend_of(member_id).verdict == TrendVerdict.NOT_DECAYING
        member = family.params.index(0.3)
        assert 0.0 < report.mass_of(member, 0).mass < 1.0


class TestTrendVerdict:
    """Test the decay rule."""

    def test_decaying(self):
        """Monotone decrease is decaying."""
        assert trend_verdict(estimates([0.9, 0.6, 0.4, 0.2])) == TrendVerdict.DECAYING

    def test_noise_within_slack(self):
        """Small rises within three combined errors are tolerated."""
        assert trend_verdict(estimates([0.9, 0.5, 0.53, 0.2])) == TrendVerdict.DECAYING

    def test_rise_beyond_slack(self):
        """A significant rise is not decaying."""
        assert trend_verdict(estimates([0.9, 0.3, 0.6, 0.2])) == TrendVerdict.NOT_DECAYING

    def test_flat(self):
        """Flat masses are not decaying."""
        assert trend_verdict(estimates([0.5, 0.5, 0.5])) == TrendVerdict.NOT_DECAYING

    def test_single_checkpoint(self):
        """One checkpoint carries no trend."""
        assert trend_verdict(estimates([0.5])) == TrendVerdict.NOT_DECAYING


class TestSweepingDiagnostic:
    """Test the set-mass decay experiment."""

    def test_qnd_mass_decays(self, diagonal_ensemble):
        """Mass of A_0.1 decays as trajectories approach basis states."""
        family = AdmissibleFamilySpec.default_sphere()
        report = sweeping_diagnostic(
            to_ifs_model(diagonal_ensemble),
            UniformSphereDensity(2).sample,
            family,
            [0, 10, 20, 40],
            2000,
            RandomStream(seed=8),
        )
        assert len(report.masses) == 16
        assert report.family_kind == "sphere_min_coordinate"
        member = family.params.index(0.1)
        assert report.mass_of(member, 40).mass < report.mass_of(member, 0).mass
        assert report.trend_of(member).verdict == TrendVerdict.DECAYING

    def test_binomial_errors(self, diagonal_ensemble):
        """std_error = sqrt(p (1 - p) / n)."""
        report = sweeping_diagnostic(
            to_ifs_model(diagonal_ensemble),
            UniformSphereDensity(2).sample,
            AdmissibleFamilySpec.default_sphere(),
            [0, 5],
            500,
            RandomStream(seed=9),
        )
        for entry in report.masses:
            assert entry.std_error == pytest.approx(np.sqrt(entry.mass * (1 - entry.mass) / 500))

    def test_cell_mass_decays(self, cell_model):
        """Small cells disappear as sizes sweep to infinity."""
        report = sweeping_diagnostic(
            CellCycleProcess(cell_model),
            UniformIntervalDensity(0.5, 1.0).sample,
            AdmissibleFamilySpec.default_half_line(0.5),
            [0, 10, 25],
            2000,
            RandomStream(seed=10),
        )
        assert report.mass_of(0, 0).mass == 1.0
        assert report.mass_of(0, 25).mass < 0.5

    def test_checkpoints_start_at_zero(self, diagonal_ensemble):
        """The first checkpoint must be 0."""
        with pytest.raises(InvalidArgumentError):
            sweeping_diagnostic(
                to_ifs_model(diagonal_ensemble),
                UniformSphereDensity(2).sample,
                AdmissibleFamilySpec.default_sphere(),
                [5, 10],
                10,
                RandomStream(seed=1),
            )


class TestFockProximity:
    """Test the Fock proximity diagnostic."""

    def test_fraction_grows(self, diagonal_ensemble):
        """Trajectories concentrate near basis states."""
        report = fock_proximity_diagnostic(diagonal_ensemble, 2000, 40, 0.01, RandomStream(seed=11))
        assert report.checkpoints == [0, 10, 20, 30, 40]
        assert report.fractions[-1] > report.fractions[0]
        assert report.non_decreasing

    def test_nondiagonal_rejected(self, nondiagonal_ensemble):
        """Only diagonal ensembles have basis-state attractors."""
        with pytest.raises(UnsupportedOperationError):
            fock_proximity_diagnostic(nondiagonal_ensemble, 10, 5, 0.01, RandomStream(seed=1))

    def test_delta_range(self, diagonal_ensemble):
        """delta must lie in [0, 1]."""
        with pytest.raises(InvalidArgumentError):
            fock_proximity_diagnostic(diagonal_ensemble, 10, 5, 1.5, RandomStream(seed=1))

    def test_basis_state_start_stays_at_one(self, diagonal_ensemble):
        """Trajectories started at e_1 never leave it."""
        e1 = np.array([1.0, 0.0], dtype=complex)
        report = fock_proximity_diagnostic(
            diagonal_ensemble,
            500,
            40,
            0.01,
            RandomStream(seed=14),
            initial_sampler=lambda n, rng: np.tile(e1, (n, 1)),
        )
        assert report.fractions == [1.0] * 5
        assert report.std_errors == [0.0] * 5
        assert report.non_decreasing

    def test_vacuous_delta(self, diagonal_ensemble):
        """delta = 1 accepts every state."""
        report = fock_proximity_diagnostic(diagonal_ensemble, 500, 40, 1.0, RandomStream(seed=15))
        assert report.fractions == [1.0] * 5
