import numpy as np
import pytest
from numpy.testing import assert_allclose

from handeyecov.datagen import SyntheticConfig, generate_dataset
from handeyecov.errors import InsufficientDataError, RankDeficientError
from handeyecov.liegroup import exp_so3, hat, log_so3
from handeyecov.poses import DecoupledPose, MeasurementPair, MeasurementSet, NoisyPose
from handeyecov.transsolve import (
    TransMeasurement,
    build_q,
    build_translation_jacobian,
    closed_form_pose,
    closed_form_translation,
    rotation_residuals,
    solution_pose,
    solve_axxb,
    solve_translation,
    translation_measurements,
    translation_residuals,
)


def pure_translation_pairs(X):
    """Pairs whose robot motions do not rotate."""
    pairs = []
    for i in range(4):
        A = DecoupledPose(np.eye(3), [i, 1.0, -i])
        pairs.append(MeasurementPair(NoisyPose.exact(A), NoisyPose.exact(X.inverse() @ A @ X)))
    return MeasurementSet(pairs)


class TestBuildQ:
    def test_mean(self, exact_pairs, X_true):
        m = build_q(X_true.rotation, np.zeros((3, 3)), exact_pairs[0])
        pair = exact_pairs[0]
        assert_allclose(m.q, X_true.rotation @ pair.B.translation - pair.A.translation)
        assert_allclose(m.R_A, pair.A.rotation)

    def test_covariance(self):
        R = exp_so3([0.1, 0.4, -0.2])
        cov_R = np.diag([1e-4, 2e-4, 3e-4])
        A = NoisyPose(DecoupledPose(exp_so3([0.5, 0.0, 0.0]), [1.0, 0.0, 0.0]), 1e-3 * np.eye(3), 2e-3 * np.eye(3))
        B = NoisyPose(DecoupledPose(exp_so3([0.0, 0.5, 0.0]), [0.0, 2.0, 1.0]), np.zeros((3, 3)), 5e-3 * np.eye(3))
        m = build_q(R, cov_R, MeasurementPair(A, B))
        H = hat(R @ B.translation)
        expected = 2e-3 * np.eye(3) + R @ (5e-3 * np.eye(3)) @ R.T + H @ cov_R @ H.T
        assert_allclose(m.cov_q, expected, rtol=1e-12, atol=1e-16)
        assert_allclose(m.cov_RA, 1e-3 * np.eye(3))

    def test_one_per_pair(self, noisy_pairs, X_true):
        assert len(translation_measurements(X_true.rotation, np.zeros((3, 3)), noisy_pairs)) == 30


class TestTranslationJacobian:
    def test_finite_differences(self, rng, random_rotations):
        h = 1e-6
        for R in random_rotations(rng, 50):
            t = rng.standard_normal(3)
            jac_t, jac_xi = build_translation_jacobian(t, R[None])

            def f(delta, tt):
                return np.concatenate((delta, (exp_so3(delta) @ R - np.eye(3)) @ tt))

            num_t = np.empty((6, 3))
            num_xi = np.empty((6, 3))
            for i in range(3):
                e = np.zeros(3)
                e[i] = h
                num_t[:, i] = (f(np.zeros(3), t + e) - f(np.zeros(3), t - e)) / (2 * h)
                num_xi[:, i] = (f(e, t) - f(-e, t)) / (2 * h)
            assert_allclose(jac_t[0], num_t, atol=1e-6)
            assert_allclose(jac_xi[0], num_xi, atol=1e-5)

    def test_rotation_block_follows_log_residual(self, rng, random_rotations):
        h = 1e-6
        for RA in random_rotations(rng, 20):
            RA_hat = exp_so3(0.2 * rng.standard_normal(3)) @ RA
            r0 = log_so3(RA @ RA_hat.T)
            _, jac_xi = build_translation_jacobian(np.zeros(3), RA_hat[None], r0[None])

            def residual(delta):
                return log_so3(RA @ (exp_so3(delta) @ RA_hat).T)

            num = np.empty((3, 3))
            for i in range(3):
                e = np.zeros(3)
                e[i] = h
                num[:, i] = -(residual(e) - residual(-e)) / (2 * h)
            assert_allclose(jac_xi[0, :3], num, atol=1e-6)

    def test_rotation_block_identity_at_zero_residual(self, rng, random_rotations):
        R = random_rotations(rng, 4)
        _, plain = build_translation_jacobian(np.ones(3), R)
        _, exact = build_translation_jacobian(np.ones(3), R, np.zeros((4, 3)))
        assert_allclose(exact, plain, atol=1e-15)


class TestClosedFormTranslation:
    def test_exact_data(self, exact_pairs, X_true):
        t = closed_form_translation(X_true.rotation, exact_pairs)
        assert np.linalg.norm(t - X_true.translation) < 1e-9

    def test_pure_translation_unobservable(self, X_true):
        with pytest.raises(RankDeficientError):
            closed_form_translation(X_true.rotation, pure_translation_pairs(X_true))

    def test_one_pair(self, exact_pairs, X_true):
        with pytest.raises(InsufficientDataError):
            closed_form_translation(X_true.rotation, exact_pairs[:1])

    def test_closed_form_pose(self, exact_pairs, X_true):
        assert closed_form_pose(exact_pairs).allclose(X_true, atol=1e-9)


class TestSolveTranslation:
    def test_noisy_estimate_close(self, noisy_pairs, X_true):
        rot, trans = solve_axxb(noisy_pairs)
        assert np.linalg.norm(trans.translation - X_true.translation) < 0.05
        assert trans.refined_RAs.shape == (30, 3, 3)

    def test_covariance_symmetric_psd(self, noisy_pairs):
        _, trans = solve_axxb(noisy_pairs)
        assert_allclose(trans.cov_trans, trans.cov_trans.T, atol=0)
        assert np.all(np.linalg.eigvalsh(trans.cov_trans) > 0)

    def test_unobservable(self):
        measurements = [
            TransMeasurement(np.eye(3), np.array([0.0, 0.0, i]), 1e-6 * np.eye(3), 1e-6 * np.eye(3)) for i in range(3)
        ]
        with pytest.raises(RankDeficientError):
            solve_translation(measurements)

    def test_one_measurement(self):
        m = TransMeasurement(exp_so3([0.3, 0.0, 0.0]), np.zeros(3), np.eye(3), np.eye(3))
        with pytest.raises(InsufficientDataError):
            solve_translation([m])

    def test_reduces_to_linear_least_squares(self, exact_pairs, X_true):
        sigma2 = 1e-4
        measurements = [
            m._replace(cov_RA=np.zeros((3, 3)), cov_q=sigma2 * np.eye(3))
            for m in translation_measurements(X_true.rotation, np.zeros((3, 3)), exact_pairs)
        ]
        D = exact_pairs.RA - np.eye(3)
        expected = sigma2 * np.linalg.inv(np.einsum("kji,kjl->il", D, D))
        sol = solve_translation(measurements)
        assert_allclose(sol.cov_trans, expected, rtol=1e-6)
        assert_allclose(sol.translation, X_true.translation, atol=1e-9)

    def test_explicit_start(self, noisy_pairs):
        rot, reference = solve_axxb(noisy_pairs)
        measurements = translation_measurements(rot.rotation, rot.cov_rot, noisy_pairs)
        sol = solve_translation(measurements, init=reference.translation + 0.1)
        assert_allclose(sol.translation, reference.translation, atol=1e-8)

    def test_objective_non_increasing(self, noisy_pairs):
        _, trans = solve_axxb(noisy_pairs)
        assert len(trans.objectives) == trans.iterations
        assert np.all(np.diff(trans.objectives) <= 0)

    @pytest.mark.parametrize("lam", [1e-5, 1e-4])
    def test_converges_across_seeds(self, X_true, lam):
        config = SyntheticConfig(lam=lam, k=30, M=1)
        for seed in range(50):
            _, trans = solve_axxb(generate_dataset(config, X_true, seed=seed))
            assert np.all(np.diff(trans.objectives) <= 0), f"seed {seed}"
            assert np.linalg.norm(trans.translation - X_true.translation) < 0.1, f"seed {seed}"


class TestSolveAXXB:
    def test_noise_free_recovery(self, exact_pairs, X_true):
        rot, trans = solve_axxb(exact_pairs)
        assert np.linalg.norm(rot.rotation - X_true.rotation) < 1e-9
        assert np.linalg.norm(trans.translation - X_true.translation) < 1e-9

    def test_noise_free_residual_floor(self, exact_pairs):
        rot, trans = solve_axxb(exact_pairs)
        assert np.max(rotation_residuals(rot.rotation, exact_pairs)) <= 1e-10
        assert np.max(translation_residuals(rot.rotation, trans.translation, exact_pairs)) <= 1e-10

    def test_one_pair(self, exact_pairs):
        with pytest.raises(InsufficientDataError):
            solve_axxb(exact_pairs[:1])

    def test_covariance_homogeneous(self, noisy_pairs):
        base = SyntheticConfig(lam=1e-5).covariances()
        _, trans = solve_axxb(noisy_pairs)
        _, scaled = solve_axxb(noisy_pairs.with_covariances(*(10.0 * c for c in base)))
        assert_allclose(scaled.cov_trans, 10.0 * trans.cov_trans, rtol=1e-6)
        assert_allclose(scaled.translation, trans.translation, atol=1e-10)

    def test_solution_pose(self, noisy_pairs):
        rot, trans = solve_axxb(noisy_pairs)
        X = solution_pose(rot, trans)
        assert_allclose(X.rotation, rot.rotation)
        assert_allclose(X.cov_trans, trans.cov_trans)


class TestResiduals:
    def test_zero_for_exact_data(self, exact_pairs, X_true):
        assert np.max(rotation_residuals(X_true.rotation, exact_pairs)) < 1e-9
        assert np.max(translation_residuals(X_true.rotation, X_true.translation, exact_pairs)) < 1e-9

    def test_positive_for_wrong_pose(self, exact_pairs, X_true):
        res = translation_residuals(X_true.rotation, X_true.translation + 1.0, exact_pairs)
        assert res.shape == (10,)
        assert np.all(res > 0)

    def test_rotation_residual_across_branch_cut(self):
        X = DecoupledPose(exp_so3([0.3, -0.2, 0.5]), [0.1, 0.2, 0.3])
        A = DecoupledPose(exp_so3([0.0, 0.0, np.pi - 1e-4]), [0.5, 0.0, 0.0])
        B = X.inverse() @ A @ X
        # pushes the camera rotation past π so its logarithm wraps
        axis = X.rotation.T @ np.array([0.0, 0.0, 1.0])
        B_noisy = DecoupledPose(exp_so3(2e-4 * axis) @ B.rotation, B.translation)
        pairs = MeasurementSet([MeasurementPair(NoisyPose.exact(A), NoisyPose.exact(B_noisy))])
        assert rotation_residuals(X.rotation, pairs)[0] == pytest.approx(2e-4, rel=1e-5)

    def test_rotation_residual_at_exact_half_turn(self):
        A = DecoupledPose(exp_so3([0.0, 0.0, np.pi]), [0.0, 0.0, 0.0])
        X = DecoupledPose(exp_so3([np.pi, 0.0, 0.0]), [0.0, 0.0, 0.0])
        pairs = MeasurementSet([MeasurementPair(NoisyPose.exact(A), NoisyPose.exact(X.inverse() @ A @ X))])
        assert rotation_residuals(X.rotation, pairs)[0] < 1e-9
