import numpy as np
import pytest
from numpy.testing import assert_allclose

from handeyecov.errors import DimensionMismatchError, NearSingularError, NonPSDError, RankDeficientError
from handeyecov.liegroup import exp_so3, left_jacobian_inv, log_so3
from handeyecov.noise import (
    backward_propagate,
    draw_gaussian,
    forward_propagate,
    gaussian_factor,
    make_rng,
    regularize,
    rotvec_covariance,
    sample_noisy_pose,
    validate_cov3,
)
from handeyecov.poses import DecoupledPose


class TestValidateCov3:
    def test_accepts_psd(self):
        cov = np.diag([1.0, 2.0, 0.0])
        assert_allclose(validate_cov3(cov), cov)

    def test_symmetrizes_roundoff(self):
        cov = np.diag([1.0, 2.0, 3.0])
        cov[0, 1] = 1e-13
        out = validate_cov3(cov)
        assert_allclose(out, out.T, atol=0)

    def test_rejects_asymmetric(self):
        cov = np.eye(3)
        cov[0, 1] = 1e-6
        with pytest.raises(NonPSDError):
            validate_cov3(cov)

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(NonPSDError):
            validate_cov3(np.diag([1.0, -1e-6, 1.0]))

    def test_tolerates_tiny_negative_eigenvalue(self):
        validate_cov3(np.diag([1.0, -1e-14, 1.0]))

    def test_rejects_shape(self):
        with pytest.raises(DimensionMismatchError):
            validate_cov3(np.eye(2))

    def test_rejects_nan(self):
        with pytest.raises(NonPSDError):
            validate_cov3(np.full((3, 3), np.nan))


class TestRegularize:
    def test_singular_gets_jitter(self):
        assert_allclose(regularize(np.zeros((3, 3))), 1e-15 * np.eye(3), atol=0)

    def test_regular_unchanged(self):
        cov = np.diag([1.0, 2.0, 3.0])
        assert_allclose(regularize(cov), cov, atol=0)

    def test_stack_only_singular_members(self):
        covs = np.stack([np.eye(3), np.zeros((3, 3))])
        out = regularize(covs)
        assert_allclose(out[0], np.eye(3), atol=0)
        assert_allclose(out[1], 1e-15 * np.eye(3), atol=0)


class TestGaussian:
    def test_zero_covariance_zero_factor(self):
        assert not np.any(gaussian_factor(np.zeros((3, 3))))

    def test_factor_reproduces_covariance(self):
        cov = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 0.5]])
        L = gaussian_factor(cov)
        assert_allclose(L @ L.T, cov, atol=1e-14)

    def test_rank_deficient_factor(self):
        u = np.array([1.0, 2.0, 3.0])
        cov = np.outer(u, u)
        L = gaussian_factor(cov)
        assert_allclose(L @ L.T, cov, atol=1e-12)

    def test_draws_match_covariance(self):
        cov = np.diag([0.5, 0.2, 0.3])
        x = draw_gaussian(cov, 0, size=200000)
        assert x.shape == (200000, 3)
        assert_allclose(x.T @ x / len(x), cov, atol=0.01)

    def test_single_draw_shape(self):
        assert draw_gaussian(np.eye(3), 0).shape == (3,)

    def test_deterministic(self):
        assert_allclose(draw_gaussian(np.eye(3), 42, 5), draw_gaussian(np.eye(3), 42, 5), atol=0)

    def test_generator_passthrough(self):
        rng = make_rng(1)
        assert make_rng(rng) is rng


class TestSampleNoisyPose:
    def test_zero_covariance_returns_mean(self):
        mean = DecoupledPose(exp_so3([0.1, 0.2, 0.3]), [1.0, 2.0, 3.0])
        pose = sample_noisy_pose(mean, np.zeros((3, 3)), np.zeros((3, 3)), 0)
        assert pose.allclose(mean, atol=0)

    def test_perturbation_statistics(self):
        mean = DecoupledPose(exp_so3([0.3, -0.2, 1.0]), [0.5, 0.0, -0.5])
        cov_rot = 1e-4 * np.diag([0.5, 0.2, 0.3])
        cov_trans = 1e-4 * np.diag([0.7, 0.2, 0.8])
        rng = make_rng(5)
        poses = [sample_noisy_pose(mean, cov_rot, cov_trans, rng) for _ in range(5000)]
        xi_rot = log_so3(np.stack([p.rotation for p in poses]) @ mean.rotation.T)
        xi_trans = np.stack([p.translation for p in poses]) - mean.translation
        assert_allclose(xi_rot.T @ xi_rot / len(poses), cov_rot, atol=1e-5)
        assert_allclose(xi_trans.T @ xi_trans / len(poses), cov_trans, atol=1e-5)

    def test_rejects_non_psd(self):
        with pytest.raises(NonPSDError):
            sample_noisy_pose(DecoupledPose.identity(), -np.eye(3), np.eye(3), 0)

    def test_reproducible(self):
        mean = DecoupledPose.identity()
        a = sample_noisy_pose(mean, np.eye(3), np.eye(3), 9)
        b = sample_noisy_pose(mean, np.eye(3), np.eye(3), 9)
        assert a == b


class TestForwardPropagate:
    def test_linear_map(self):
        J = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 0.0]])
        cov = np.eye(3)
        assert_allclose(forward_propagate(cov, J), J @ J.T)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            forward_propagate(np.eye(3), np.ones((2, 2)))

    def test_non_square(self):
        with pytest.raises(DimensionMismatchError):
            forward_propagate(np.ones((2, 3)), np.ones((2, 3)))


class TestBackwardPropagate:
    def test_matches_linear_least_squares(self, rng):
        J = rng.standard_normal((10, 3))
        P = np.diag(rng.uniform(1.0, 2.0, 10))
        assert_allclose(backward_propagate(J, P), np.linalg.inv(J.T @ P @ J), rtol=1e-10, atol=1e-14)

    def test_rank_deficient(self):
        J = np.zeros((6, 3))
        J[:, 0] = 1.0
        with pytest.raises(RankDeficientError):
            backward_propagate(J, np.eye(6))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            backward_propagate(np.ones((6, 3)), np.eye(5))


class TestRotvecCovariance:
    def test_identity_at_zero(self):
        cov = np.diag([1.0, 2.0, 3.0])
        assert_allclose(rotvec_covariance(np.zeros(3), cov), cov)

    def test_transport(self):
        v = np.array([0.3, -0.4, 0.5])
        cov = np.diag([1.0, 2.0, 3.0])
        Jinv = left_jacobian_inv(v)
        assert_allclose(rotvec_covariance(v, cov), Jinv @ cov @ Jinv.T, rtol=1e-12, atol=1e-14)

    def test_stacked(self):
        v = np.array([[0.1, 0.0, 0.0], [0.0, 0.2, 0.0]])
        covs = np.stack([np.eye(3), 2.0 * np.eye(3)])
        out = rotvec_covariance(v, covs)
        assert out.shape == (2, 3, 3)
        assert_allclose(out[1], rotvec_covariance(v[1], covs[1]))

    def test_near_singular(self):
        with pytest.raises(NearSingularError):
            rotvec_covariance([2.0 * np.pi, 0.0, 0.0], np.eye(3))
