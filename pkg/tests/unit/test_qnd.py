"""Unit tests for the quantum non-demolition measurement model."""

import numpy as np
import pytest

from sweepcert.errors import (
    EnsembleValidationError,
    InvalidArgumentError,
    NearSingularError,
    SingularEvaluationError,
    UnsupportedOperationError,
)
from sweepcert.tools.densities import UniformSphereDensity
from sweepcert.tools.markov import perron_pointwise
from sweepcert.tools.numerics import (
    RandomStream,
    fd_jacobian_det_on_sphere,
    sample_uniform_sphere,
    sphere_volume,
)
from sweepcert.tools.qnd import (
    FockLyapunovDensity,
    MeasurementEnsemble,
    apply_measurement,
    completeness_residual,
    fock_proximity,
    inverse_measurement,
    jacobian_det_complex,
    jacobian_det_real,
    outcome_probabilities,
    perron_qnd,
    realify_matrix,
    realify_state,
    subinvariance_ratio,
    to_ifs_model,
)
from sweepcert.tools.spaces import ComplexSphere


E1 = np.array([1.0, 0.0], dtype=complex)
BALANCED = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)


def normalized_map(matrix):
    return lambda p: (matrix @ p) / np.linalg.norm(matrix @ p)


def random_real_pairs(count, dims=(2, 3, 4), seed=0):
    """Well-conditioned random real matrices with random unit vectors."""
    gen = np.random.default_rng(seed)
    for i in range(count):
        n = dims[i % len(dims)]
        matrix = 2.0 * np.eye(n) + 0.5 * gen.standard_normal((n, n))
        phi = gen.standard_normal(n)
        yield matrix, phi / np.linalg.norm(phi)


def random_complex_pairs(count, dims=(2, 3), seed=1):
    gen = np.random.default_rng(seed)
    for i in range(count):
        n = dims[i % len(dims)]
        matrix = 2.0 * np.eye(n) + 0.5 * (gen.standard_normal((n, n)) + 1j * gen.standard_normal((n, n)))
        phi = gen.standard_normal(n) + 1j * gen.standard_normal(n)
        yield matrix, phi / np.linalg.norm(phi)


class TestMeasurementMaps:
    """Test the normalized measurement maps."""

    def test_apply_measurement_is_unit(self):
        """M phi / ||M phi|| lies on the sphere."""
        phi = apply_measurement(np.diag([0.6, 0.8]), BALANCED)
        assert np.linalg.norm(phi) == pytest.approx(1.0)
        assert np.allclose(phi, np.array([0.6, 0.8]))

    def test_inverse_undoes_forward(self):
        """M^-1 maps the image back to the state."""
        matrix = np.array([[1.0, 0.5j], [0.2, 0.9]])
        image = apply_measurement(matrix, BALANCED)
        assert np.allclose(inverse_measurement(matrix, image), BALANCED)

    def test_near_singular(self):
        """States sent to norm < 1e-14 raise NearSingularError."""
        with pytest.raises(NearSingularError):
            apply_measurement(np.diag([1e-16, 1.0]), E1)

    def test_inverse_of_singular_matrix(self):
        """Singular matrices have no inverse map."""
        with pytest.raises(InvalidArgumentError):
            inverse_measurement(np.zeros((2, 2)), E1)

    def test_batch_shape(self):
        """Batches keep their shape."""
        phis = sample_uniform_sphere(3, RandomStream(seed=1), size=7)
        assert apply_measurement(np.eye(3) * 2.0, phis).shape == (7, 3)


class TestJacobians:
    """Test the closed-form Jacobian determinants against oracles."""

    def test_real_closed_form_matches_finite_differences(self):
        """|det M| / ||M phi||^N agrees with tangent finite differences."""
        for matrix, phi in random_real_pairs(105):
            closed = jacobian_det_real(matrix, phi)
            fd = fd_jacobian_det_on_sphere(normalized_map(matrix), phi, 1e-6)
            assert fd.value == pytest.approx(closed, rel=1e-5)

    def test_complex_matches_realified(self):
        """Complex closed form equals the real formula on the realified map."""
        for matrix, phi in random_complex_pairs(104):
            closed = jacobian_det_complex(matrix, phi)
            realified = jacobian_det_real(realify_matrix(matrix), realify_state(phi))
            assert closed == pytest.approx(realified, rel=1e-10)

    def test_complex_matches_finite_differences(self):
        """Complex closed form agrees with finite differences on R^(2N)."""
        for matrix, phi in random_complex_pairs(20, seed=5):
            real_matrix = realify_matrix(matrix)
            fd = fd_jacobian_det_on_sphere(normalized_map(real_matrix), realify_state(phi), 1e-6)
            assert fd.value == pytest.approx(jacobian_det_complex(matrix, phi), rel=1e-5)

    def test_chain_rule(self):
        """det(D M) at phi times det(D M^-1) at the image is 1."""
        for matrix, phi in random_complex_pairs(30, seed=2):
            image = apply_measurement(matrix, phi)
            product = jacobian_det_complex(matrix, phi) * jacobian_det_complex(np.linalg.inv(matrix), image)
            assert product == pytest.approx(1.0, rel=1e-10)

    def test_diagonal_value(self):
        """diag(0.6, 0.8) at e_1 has det 0.2304 / 0.36^2."""
        assert jacobian_det_complex(np.diag([0.6, 0.8]), E1) == pytest.approx(0.2304 / 0.36**2)

    def test_batch_evaluation(self):
        """Batched evaluation matches pointwise evaluation."""
        matrix = np.array([[1.0, 0.3j], [0.1, 0.7]])
        phis = sample_uniform_sphere(2, RandomStream(seed=4), size=5)
        batch = jacobian_det_complex(matrix, phis)
        assert np.allclose(batch, [jacobian_det_complex(matrix, p) for p in phis], rtol=1e-14)

    def test_non_unit_state_rejected(self):
        """Jacobians are defined on the unit sphere only."""
        with pytest.raises(InvalidArgumentError):
            jacobian_det_real(np.eye(2), np.array([1.0, 1.0]))

    def test_singular_matrix_rejected(self):
        """Singular matrices are rejected."""
        with pytest.raises(InvalidArgumentError):
            jacobian_det_complex(np.array([[1.0, 2.0], [2.0, 4.0]]), E1)

    def test_realify_shapes(self):
        """Realification doubles the dimension."""
        assert realify_matrix(np.eye(3)).shape == (6, 6)
        assert realify_state(np.array([1j, 0.0])).tolist() == [0.0, 0.0, 1.0, 0.0]


class TestEnsemble:
    """Test ensemble construction and validation."""

    def test_diagonal_is_complete(self, diagonal_ensemble):
        """0.6 / 0.8 rows satisfy completeness to 1e-12."""
        assert abs(diagonal_ensemble.completeness_residual) < 1e-12
        assert diagonal_ensemble.is_valid
        assert diagonal_ensemble.is_diagonal
        assert diagonal_ensemble.n_outcomes == 2
        assert diagonal_ensemble.dim == 2

    def test_nondiagonal_is_complete(self, nondiagonal_ensemble):
        """W_k D_k U construction is complete and flagged non-Hermitian."""
        assert nondiagonal_ensemble.is_valid
        assert not nondiagonal_ensemble.is_diagonal
        assert any("Hermitian" in flag for flag in nondiagonal_ensemble.flags)

    def test_incomplete_ensemble_rejected(self):
        """0.36 + 0.49 - 1 = -0.15 fails completeness."""
        with pytest.raises(EnsembleValidationError) as exc_info:
            MeasurementEnsemble.from_diagonal([[0.6, 0.8], [0.7, 0.6]])
        assert exc_info.value.completeness_residual == pytest.approx(-0.15)

    def test_incomplete_ensemble_without_validation(self):
        """validate=False builds the ensemble and reports it invalid."""
        ensemble = MeasurementEnsemble.from_diagonal([[0.6, 0.8], [0.7, 0.6]], validate=False)
        assert not ensemble.is_valid
        assert ensemble.completeness_residual == pytest.approx(-0.15)

    def test_completeness_residual_function(self, diagonal_table):
        """Residual of the diagonal matrices vanishes."""
        matrices = [np.diag(row) for row in diagonal_table]
        assert abs(completeness_residual(matrices)) < 1e-12

    def test_repeated_diagonal_entries_rejected(self):
        """Each outcome needs distinct diagonal entries."""
        with pytest.raises(EnsembleValidationError, match="not distinct"):
            MeasurementEnsemble.from_diagonal([[0.6, 0.6], [0.8, 0.8]])

    def test_entries_outside_unit_interval_rejected(self):
        """Diagonal entries must lie in (0, 1)."""
        with pytest.raises(EnsembleValidationError):
            MeasurementEnsemble.from_diagonal([[1.0, 0.0], [0.0, 1.0]])

    def test_singular_matrix_rejected(self):
        """A singular matrix fails invertibility."""
        with pytest.raises(EnsembleValidationError) as exc_info:
            MeasurementEnsemble.from_matrices([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
        assert min(exc_info.value.abs_determinants) == 0.0

    def test_bad_shape(self):
        """Non-square matrices are argument errors."""
        with pytest.raises(InvalidArgumentError):
            MeasurementEnsemble.from_matrices([np.ones((2, 3))])

    def test_outcome_probabilities_sum_to_one(self, nondiagonal_ensemble):
        """p_k(phi) form a probability vector."""
        phis = sample_uniform_sphere(2, RandomStream(seed=2), size=50)
        probs = outcome_probabilities(nondiagonal_ensemble, phis)
        assert probs.shape == (50, 2)
        assert np.max(np.abs(probs.sum(axis=1) - 1.0)) < 1e-12

    def test_outcome_probabilities_at_basis_state(self, diagonal_ensemble):
        """p_k(e_1) = m_k(1)^2."""
        assert np.allclose(outcome_probabilities(diagonal_ensemble, E1), [0.36, 0.64])


class TestPerronQnd:
    """Test the explicit Perron operator."""

    def test_uniform_density_at_basis_state(self, diagonal_ensemble):
        """Two terms 0.2025 and 1.137778 times the uniform density."""
        rho = UniformSphereDensity(2)
        expected = (0.2025 + 0.64 / 0.5625) / sphere_volume(2)
        assert perron_qnd(diagonal_ensemble, rho, E1) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("fixture_name", ["diagonal_ensemble", "nondiagonal_ensemble"])
    def test_matches_generic_route(self, fixture_name, request):
        """Explicit formula equals the generic IFS Perron operator."""
        ensemble = request.getfixturevalue(fixture_name)
        rho = UniformSphereDensity(2)
        phis = sample_uniform_sphere(2, RandomStream(seed=3), size=1000)
        direct = perron_qnd(ensemble, rho, phis)
        generic = perron_pointwise(to_ifs_model(ensemble), rho, phis)
        assert np.max(np.abs(generic - direct) / np.abs(direct)) < 1e-12

    def test_fock_matches_generic_route(self, diagonal_ensemble):
        """The same holds for the Fock density away from its singular set."""
        rho = FockLyapunovDensity(2)
        phis = sample_uniform_sphere(2, RandomStream(seed=4), size=500)
        phis = phis[np.min(np.abs(phis), axis=1) >= 1e-3]
        direct = perron_qnd(diagonal_ensemble, rho, phis)
        generic = perron_pointwise(to_ifs_model(diagonal_ensemble), rho, phis)
        assert np.max(np.abs(generic - direct) / direct) < 1e-12

    def test_singular_density_raises(self, diagonal_ensemble):
        """The Fock density is infinite at the preimage of e_1."""
        with pytest.raises(SingularEvaluationError):
            perron_qnd(diagonal_ensemble, FockLyapunovDensity(2), E1)

    def test_singular_density_masked(self, diagonal_ensemble):
        """With on_singular='mask' the point is NaN."""
        values = perron_qnd(diagonal_ensemble, FockLyapunovDensity(2), np.stack([E1, BALANCED]), on_singular="mask")
        assert np.isnan(values[0])
        assert values[1] == pytest.approx(3.6864, rel=1e-12)


class TestFockDensity:
    """Test the Fock Lyapunov density and its subinvariance ratio."""

    def test_density_values(self):
        """1 / prod |phi_i|^2 is 4 at the balanced state and infinite at e_1."""
        u = FockLyapunovDensity(2)
        values = u(np.stack([BALANCED, E1]))
        assert values[0] == pytest.approx(4.0)
        assert np.isinf(values[1])

    def test_singular_distance(self):
        """Distance proxy is min_i |phi_i|."""
        u = FockLyapunovDensity(2)
        assert u.singular_distance(np.stack([BALANCED]))[0] == pytest.approx(1.0 / np.sqrt(2.0))

    def test_ratio_at_special_points(self, diagonal_ensemble):
        """Ratio is 1 at e_1 and 0.9216 at the balanced state."""
        assert subinvariance_ratio(diagonal_ensemble, E1) == pytest.approx(1.0, abs=1e-12)
        assert subinvariance_ratio(diagonal_ensemble, BALANCED) == pytest.approx(0.9216, abs=1e-10)

    def test_factorization(self, diagonal_ensemble):
        """P u = ratio * u and ratio <= 1 at 10^4 random states."""
        u = FockLyapunovDensity(2)
        phis = sample_uniform_sphere(2, RandomStream(seed=10), size=10000)
        phis = phis[np.min(np.abs(phis), axis=1) >= 1e-3]
        ratio = subinvariance_ratio(diagonal_ensemble, phis)
        image = perron_qnd(diagonal_ensemble, u, phis)
        assert np.max(np.abs(image - ratio * u(phis)) / image) < 1e-10
        assert np.all(ratio <= 1.0 + 1e-12)

    def test_ratio_needs_diagonal_ensemble(self, nondiagonal_ensemble):
        """The factorized ratio is diagonal-only."""
        with pytest.raises(UnsupportedOperationError):
            subinvariance_ratio(nondiagonal_ensemble, BALANCED)

    def test_fock_proximity(self):
        """Basis states are within any delta; the balanced state is not."""
        hits = fock_proximity(np.stack([E1, BALANCED]), 0.01)
        assert hits.tolist() == [True, False]


class TestIfsView:
    """Test the generic IFS view of a measurement ensemble."""

    def test_weights_are_probabilities(self, nondiagonal_ensemble):
        """Branch weights sum to one."""
        model = to_ifs_model(nondiagonal_ensemble)
        phis = sample_uniform_sphere(2, RandomStream(seed=6), size=20)
        assert np.allclose(model.weights(phis).sum(axis=1), 1.0)

    def test_state_space(self, diagonal_ensemble):
        """The view lives on the complex sphere."""
        model = to_ifs_model(diagonal_ensemble)
        assert isinstance(model.state_space, ComplexSphere)
        assert model.name == "qnd"
        assert model.branch_count == 2

    def test_forward_and_inverse(self, nondiagonal_ensemble):
        """Inverse branch undoes the forward branch."""
        model = to_ifs_model(nondiagonal_ensemble)
        phis = sample_uniform_sphere(2, RandomStream(seed=7), size=10)
        for k in range(2):
            assert np.allclose(model.inverse_map(k, model.forward_map(k, phis)), phis)
