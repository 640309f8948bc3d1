import numpy as np
import pytest

from bayesdecide import (CorrelationMatrix, LossSpec, ValidationError,
                         VectorPosterior, default_eigen_weights,
                         epl_multivariate, estimate_correlation,
                         optimize_eigen, project, spectral_decompose)
from bayesdecide.eigen import jacobi_eigh

# spectrum of the 2x2 equicorrelation matrix with rho = 0.6
RHO = 0.6
LAMBDAS_2X2 = (1.6, 0.4)


def corr2(rho=RHO):
    return CorrelationMatrix([[1.0, rho], [rho, 1.0]])


class TestJacobi:
    def test_diagonal_matrix(self):
        vals, vecs = jacobi_eigh(np.diag([3.0, 1.0, 2.0]))
        assert sorted(vals) == pytest.approx([1.0, 2.0, 3.0])
        assert np.allclose(np.abs(vecs), np.eye(3))

    def test_reconstruction(self):
        rng = np.random.default_rng(2)
        a = rng.normal(size=(8, 8))
        sym = a + a.T
        vals, vecs = jacobi_eigh(sym)
        assert np.allclose(vecs @ np.diag(vals) @ vecs.T, sym, atol=1e-10)
        assert np.allclose(vecs.T @ vecs, np.eye(8), atol=1e-12)

    def test_agrees_with_characteristic_roots(self):
        # 2x2 equicorrelation: roots of (1-l)^2 = rho^2
        vals, _ = jacobi_eigh(corr2().entries)
        assert sorted(vals) == pytest.approx(sorted(LAMBDAS_2X2))


class TestSpectralDecompose:
    def test_descending_order_and_sign(self):
        d = spectral_decompose(corr2())
        assert d.eigenvalues == pytest.approx(LAMBDAS_2X2)
        s = 1.0 / np.sqrt(2.0)
        assert np.allclose(d.eigenvectors[:, 0], [s, s])
        assert np.allclose(np.abs(d.eigenvectors[:, 1]), [s, s])
        # first nonzero entry of each column is positive
        assert d.eigenvectors[0, 1] > 0

    def test_identity_spectrum(self):
        d = spectral_decompose(CorrelationMatrix(np.eye(4)))
        assert np.allclose(d.eigenvalues, 1.0)
        assert np.allclose(d.eigenvectors, np.eye(4))

    def test_trace_preserved(self):
        rng = np.random.default_rng(3)
        draws = rng.multivariate_normal(
            np.zeros(5), np.eye(5) * 2 + 0.5, size=4000)
        corr = estimate_correlation(draws)
        d = spectral_decompose(corr)
        assert d.eigenvalues.sum() == pytest.approx(5.0, abs=1e-9)


class TestCorrelationValidation:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValidationError):
            CorrelationMatrix([[1.0, 0.5], [0.3, 1.0]])

    def test_rejects_nonunit_diagonal(self):
        with pytest.raises(ValidationError):
            CorrelationMatrix([[2.0, 0.0], [0.0, 1.0]])

    def test_rejects_singular(self):
        with pytest.raises(ValidationError, match="positive-definite"):
            CorrelationMatrix([[1.0, 1.0], [1.0, 1.0]])

    def test_rejects_oversize(self):
        with pytest.raises(ValidationError, match="64"):
            CorrelationMatrix(np.eye(65))


class TestProjection:
    def _post(self, n=20_000, seed=1, rho=RHO):
        rng = np.random.default_rng(seed)
        cov = np.array([[1.0, rho], [rho, 1.0]])
        return VectorPosterior(rng.multivariate_normal([1.0, 2.0], cov, size=n))

    def test_projection_variances_match_spectrum(self):
        post = self._post()
        d = spectral_decompose(corr2())
        v0 = project(d, post, 0).moments()[1]
        v1 = project(d, post, 1).moments()[1]
        assert v0 == pytest.approx(LAMBDAS_2X2[0], abs=0.05)
        assert v1 == pytest.approx(LAMBDAS_2X2[1], abs=0.02)

    def test_projections_nearly_uncorrelated(self):
        post = self._post()
        d = spectral_decompose(corr2())
        s0 = project(d, post, 0)
        s1 = project(d, post, 1)
        # draws keep their pairing through the stable sort only if we
        # project manually, so correlate the raw projections instead
        z0 = post.draws @ d.eigenvectors[:, 0]
        z1 = post.draws @ d.eigenvectors[:, 1]
        assert abs(np.corrcoef(z0, z1)[0, 1]) < 0.02
        assert s0.moments()[0] == pytest.approx(np.mean(z0))
        assert s1.moments()[0] == pytest.approx(np.mean(z1))

    def test_index_out_of_range(self):
        post = self._post(n=100)
        d = spectral_decompose(corr2())
        with pytest.raises(ValidationError):
            project(d, post, 2)


class TestOptimizeEigen:
    def test_all_sel_recovers_vector_mean(self):
        rng = np.random.default_rng(9)
        cov = np.array([[1.0, RHO], [RHO, 1.0]])
        post = VectorPosterior(
            rng.multivariate_normal([1.0, -2.0], cov, size=30_000))
        d = spectral_decompose(corr2())
        action = optimize_eigen(d, post, [LossSpec.sel(), LossSpec.sel()])
        assert np.allclose(action, post.mean(), atol=1e-6)

    def test_asymmetric_loss_shifts_along_eigenvector(self):
        rng = np.random.default_rng(10)
        cov = np.array([[1.0, RHO], [RHO, 1.0]])
        post = VectorPosterior(
            rng.multivariate_normal([0.0, 0.0], cov, size=30_000))
        d = spectral_decompose(corr2())
        action = optimize_eigen(d, post, [LossSpec.qtl(0.9), LossSpec.sel()])
        # shift = (q90 of first projection) * eigenvector 0
        shift = action - post.mean()
        direction = shift / np.linalg.norm(shift)
        assert np.allclose(np.abs(direction), d.eigenvectors[:, 0], atol=0.05)
        assert np.linalg.norm(shift) > 1.0  # q90 of sd-1.26 projection

    def test_action_minimizes_joint_epl(self):
        rng = np.random.default_rng(11)
        cov = np.array([[1.0, RHO], [RHO, 1.0]])
        post = VectorPosterior(
            rng.multivariate_normal([1.0, 2.0], cov, size=5_000))
        d = spectral_decompose(corr2())
        losses = [LossSpec.sel(), LossSpec.qtl(0.7)]
        a_star = optimize_eigen(d, post, losses)
        base = epl_multivariate(d, post, losses, a_star)
        rng2 = np.random.default_rng(0)
        for _ in range(20):
            perturbed = a_star + rng2.normal(scale=0.1, size=2)
            assert epl_multivariate(d, post, losses, perturbed) >= base - 1e-9

    def test_loss_count_mismatch(self):
        post = VectorPosterior(np.zeros((5, 2)) + [[1.0, 2.0]] * 5)
        d = spectral_decompose(corr2())
        with pytest.raises(ValidationError):
            optimize_eigen(d, post, [LossSpec.sel()])


class TestEplMultivariate:
    def test_weights_scale_terms(self):
        rng = np.random.default_rng(12)
        post = VectorPosterior(rng.normal(size=(2_000, 2)))
        d = spectral_decompose(CorrelationMatrix(np.eye(2)))
        losses = [LossSpec.sel(), LossSpec.sel()]
        a = np.array([0.5, 0.5])
        plain = epl_multivariate(d, post, losses, a)
        doubled = epl_multivariate(d, post, losses, a, weights=[2.0, 2.0])
        assert doubled == pytest.approx(2.0 * plain)

    def test_default_weights_are_eigenvalues(self):
        d = spectral_decompose(corr2())
        assert np.allclose(default_eigen_weights(d), LAMBDAS_2X2)

    def test_nonpositive_weight_rejected(self):
        post = VectorPosterior(np.ones((3, 2)) * [[1.0, 2.0]])
        d = spectral_decompose(corr2())
        with pytest.raises(ValidationError):
            epl_multivariate(d, post, [LossSpec.sel()] * 2, [1.0, 2.0],
                             weights=[1.0, 0.0])


class TestEstimateCorrelation:
    def test_recovers_known_correlation(self):
        rng = np.random.default_rng(21)
        cov = np.array([[1.0, RHO], [RHO, 1.0]])
        draws = rng.multivariate_normal([0, 0], cov, size=50_000)
        corr = estimate_correlation(draws)
        assert corr.entries[0, 1] == pytest.approx(RHO, abs=0.01)

    def test_unit_diagonal_exact(self):
        rng = np.random.default_rng(22)
        corr = estimate_correlation(rng.normal(size=(500, 4)))
        assert np.all(np.diag(corr.entries) == 1.0)

    def test_too_few_draws(self):
        with pytest.raises(ValidationError):
            estimate_correlation(np.ones((3, 3)) + np.eye(3))

    def test_constant_coordinate_rejected(self):
        rng = np.random.default_rng(23)
        draws = rng.normal(size=(100, 2))
        draws[:, 1] = 5.0
        with pytest.raises(ValidationError, match="zero variance"):
            estimate_correlation(draws)

    def test_duplicated_coordinate_rejected(self):
        rng = np.random.default_rng(24)
        x = rng.normal(size=100)
        with pytest.raises(ValidationError):
            estimate_correlation(np.column_stack([x, x]))
