import numpy as np
import pytest
from numpy.testing import assert_allclose

from handeyecov.errors import InvalidRotationError, NearSingularError, NonSkewError
from handeyecov.liegroup import (
    conjugate_identity_check,
    exp_so3,
    hat,
    left_jacobian,
    left_jacobian_inv,
    log_so3,
    orthonormality_error,
    rotation_angle,
    validate_rotation,
    vee,
)


class TestHat:
    def test_cross_product(self, rng):
        v, w = rng.standard_normal((2, 3))
        assert_allclose(hat(v) @ w, np.cross(v, w), atol=1e-15)

    def test_skew_symmetric(self, rng):
        S = hat(rng.standard_normal(3))
        assert_allclose(S, -S.T)

    def test_stacked(self, rng):
        v = rng.standard_normal((4, 5, 3))
        S = hat(v)
        assert S.shape == (4, 5, 3, 3)
        assert_allclose(S[2, 3], hat(v[2, 3]))

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            hat(np.zeros(4))


class TestVee:
    def test_inverse_of_hat(self, rng):
        v = rng.standard_normal((10, 3))
        assert_allclose(vee(hat(v)), v)

    def test_rejects_non_skew(self):
        with pytest.raises(NonSkewError):
            vee(np.eye(3))

    def test_tolerates_roundoff(self):
        S = hat([1.0, 2.0, 3.0])
        S[0, 1] += 1e-12
        assert_allclose(vee(S), [1.0, 2.0, 3.0], atol=1e-11)


class TestExp:
    def test_zero(self):
        assert_allclose(exp_so3(np.zeros(3)), np.eye(3), atol=0)

    def test_rotation_about_z(self):
        theta = 0.3
        expected = np.array(
            [
                [np.cos(theta), -np.sin(theta), 0.0],
                [np.sin(theta), np.cos(theta), 0.0],
                [0.0, 0.0, 1.0],
            ]
        )
        assert_allclose(exp_so3([0.0, 0.0, theta]), expected, atol=1e-15)

    def test_orthonormal(self, rng):
        R = exp_so3(3.0 * rng.standard_normal((100, 3)))
        for m in R:
            assert orthonormality_error(m) < 1e-12

    def test_small_angle_branch(self):
        v = np.array([1e-10, -2e-10, 3e-10])
        assert_allclose(exp_so3(v), np.eye(3) + hat(v), atol=1e-18)


class TestLog:
    def test_identity(self):
        assert_allclose(log_so3(np.eye(3)), np.zeros(3), atol=0)

    def test_roundtrip_random(self, rng, random_rotations):
        R = random_rotations(rng, 10000)
        assert_allclose(exp_so3(log_so3(R)), R, atol=1e-9)

    @pytest.mark.parametrize("angle", [1e-10, 1e-6, 1.0, np.pi - 1e-3, np.pi - 1e-6, np.pi])
    def test_roundtrip_special_angles(self, rng, angle):
        axes = rng.standard_normal((20, 3))
        axes /= np.linalg.norm(axes, axis=1, keepdims=True)
        R = exp_so3(angle * axes)
        v = log_so3(R)
        assert_allclose(exp_so3(v), R, atol=1e-9)
        assert_allclose(np.linalg.norm(v, axis=1), angle, rtol=1e-6)

    def test_recovers_vector_below_pi(self, rng):
        v = rng.standard_normal((50, 3))
        v *= (rng.uniform(0.0, np.pi - 1e-2, 50) / np.linalg.norm(v, axis=1))[:, None]
        assert_allclose(log_so3(exp_so3(v)), v, atol=1e-10)

    def test_canonical_branch(self):
        # 1.5π about z is -0.5π about z
        v = log_so3(exp_so3([0.0, 0.0, 1.5 * np.pi]))
        assert_allclose(v, [0.0, 0.0, -0.5 * np.pi], atol=1e-12)

    def test_rotation_angle(self):
        assert_allclose(rotation_angle(exp_so3([0.0, 0.4, 0.0])), 0.4)


class TestLeftJacobian:
    def test_identity_at_zero(self):
        assert_allclose(left_jacobian(np.zeros(3)), np.eye(3), atol=0)
        assert_allclose(left_jacobian_inv(np.zeros(3)), np.eye(3), atol=0)

    def test_inverse(self, rng):
        v = rng.standard_normal((200, 3))
        v *= (rng.uniform(0.0, 3.0, 200) / np.linalg.norm(v, axis=1))[:, None]
        product = left_jacobian(v) @ left_jacobian_inv(v)
        assert_allclose(product, np.broadcast_to(np.eye(3), product.shape), atol=1e-10)

    def test_inverse_small_angle(self):
        v = np.array([1e-9, 2e-9, -1e-9])
        assert_allclose(left_jacobian(v) @ left_jacobian_inv(v), np.eye(3), atol=1e-15)

    def test_finite_differences(self, rng):
        # exp(v + δ) ≈ exp(J(v)·δ)·exp(v)
        h = 1e-6
        for v in rng.standard_normal((20, 3)):
            R = exp_so3(v)
            numeric = np.empty((3, 3))
            for i in range(3):
                e = np.zeros(3)
                e[i] = h
                plus = log_so3(exp_so3(v + e) @ R.T)
                minus = log_so3(exp_so3(v - e) @ R.T)
                numeric[:, i] = (plus - minus) / (2 * h)
            assert_allclose(numeric, left_jacobian(v), atol=1e-5)

    def test_singular_at_two_pi(self):
        with pytest.raises(NearSingularError):
            left_jacobian_inv([0.0, 2.0 * np.pi, 0.0])

    def test_singular_in_stack(self):
        v = np.array([[0.1, 0.0, 0.0], [0.0, 0.0, 4.0 * np.pi + 1e-8]])
        with pytest.raises(NearSingularError):
            left_jacobian_inv(v)


class TestConjugateIdentity:
    def test_holds(self, rng, random_rotations):
        R = random_rotations(rng, 10)
        for m, v in zip(R, rng.standard_normal((10, 3))):
            assert conjugate_identity_check(m, v)

    def test_fails_for_non_rotation(self):
        assert not conjugate_identity_check(2.0 * np.eye(3), [1.0, 0.0, 0.0])


class TestValidateRotation:
    def test_passes_exact(self):
        R = exp_so3([0.1, 0.2, 0.3])
        assert validate_rotation(R) is not None
        assert_allclose(validate_rotation(R), R, atol=0)

    def test_repairs_small_error(self, caplog):
        R = exp_so3([0.1, 0.2, 0.3]) + 1e-7 * np.array([[1.0, 0, 0], [0, 0, 0], [0, 0, 0]])
        repaired = validate_rotation(R)
        assert orthonormality_error(repaired) < 1e-12
        assert "Re-orthonormalized" in caplog.text

    def test_rejects_large_error(self):
        with pytest.raises(InvalidRotationError):
            validate_rotation(exp_so3([0.1, 0.2, 0.3]) * 1.01)

    def test_rejects_reflection(self):
        with pytest.raises(InvalidRotationError):
            validate_rotation(np.diag([1.0, 1.0, -1.0]))

    def test_rejects_shape(self):
        with pytest.raises(InvalidRotationError):
            validate_rotation(np.eye(4))

    def test_rejects_nan(self):
        R = np.eye(3)
        R[0, 0] = np.nan
        with pytest.raises(InvalidRotationError):
            validate_rotation(R)
