import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from handeyecov.compound import bracket1, bracket2, compound_poses, propagate_chain, repair_psd, sample_chain
from handeyecov.errors import InsufficientDataError, NonPSDError
from handeyecov.liegroup import exp_so3, hat
from handeyecov.poses import DecoupledPose, NoisyPose


def chain(scale):
    p1 = NoisyPose(
        DecoupledPose(exp_so3([0.3, -0.5, 0.8]), [0.4, 0.1, -0.2]),
        scale * np.diag([0.5, 0.2, 0.3]),
        scale * np.diag([0.1, 0.2, 0.5]),
    )
    p2 = NoisyPose(
        DecoupledPose(exp_so3([-1.0, 0.2, 0.4]), [0.3, -0.6, 0.5]),
        scale * np.diag([0.7, 0.2, 0.8]),
        scale * np.diag([0.7, 0.8, 0.1]),
    )
    return p1, p2


class TestBrackets:
    def test_bracket1(self):
        M = np.diag([1.0, 2.0, 3.0])
        assert_allclose(bracket1(M), np.diag([-5.0, -4.0, -3.0]))

    def test_bracket2(self):
        M = np.diag([1.0, 2.0, 3.0])
        N = np.eye(3)
        assert_allclose(bracket2(M, N), bracket1(M) @ bracket1(N) + bracket1(N @ M))


class TestRepairPSD:
    def test_passthrough(self):
        cov = np.diag([1.0, 2.0, 3.0])
        assert_allclose(repair_psd(cov), cov, atol=0)

    def test_clips_roundoff(self, caplog):
        with caplog.at_level(logging.WARNING):
            out = repair_psd(np.diag([1.0, 1.0, -1e-13]))
        assert np.linalg.eigvalsh(out)[0] >= 0.0
        assert "PSD repair" in caplog.text

    def test_rejects_indefinite(self):
        with pytest.raises(NonPSDError):
            repair_psd(np.diag([1.0, 1.0, -1e-6]))


class TestCompoundPoses:
    def test_mean_composes(self):
        p1, p2 = chain(1e-4)
        assert compound_poses(p1, p2).mean.allclose(p1.mean @ p2.mean, atol=1e-15)

    def test_exact_poses(self):
        p1, p2 = chain(0.0)
        out = compound_poses(p1, p2)
        assert not np.any(out.cov_rot)
        assert not np.any(out.cov_trans)

    def test_isotropic_left_only(self):
        p1, p2 = chain(0.0)
        p1 = p1.with_covariances(cov_rot=1e-3 * np.eye(3))
        assert_allclose(compound_poses(p1, p2).cov_rot, 1e-3 * np.eye(3), atol=1e-18)

    def test_first_order_translation(self):
        p1, p2 = chain(1e-4)
        R1 = p1.rotation
        H = hat(R1 @ p2.translation)
        expected = p1.cov_trans + R1 @ p2.cov_trans @ R1.T + H @ p1.cov_rot @ H.T
        assert_allclose(compound_poses(p1, p2).cov_trans, expected, rtol=1e-12, atol=1e-18)

    def test_higher_order_terms_quadratic(self):
        # the correction beyond Σ₁ + Σ₂' is bilinear in the covariances
        def correction(scale):
            p1, p2 = chain(scale)
            R1 = p1.rotation
            return compound_poses(p1, p2).cov_rot - p1.cov_rot - R1 @ p2.cov_rot @ R1.T

        small = np.linalg.norm(correction(1e-3))
        large = np.linalg.norm(correction(2e-3))
        assert small > 0.0
        assert large / small == pytest.approx(4.0, rel=1e-6)

    def test_symmetric(self):
        out = compound_poses(*chain(1e-2))
        assert_allclose(out.cov_rot, out.cov_rot.T, atol=0)
        assert_allclose(out.cov_trans, out.cov_trans.T, atol=0)


class TestPropagateChain:
    def test_single_pose(self):
        p1, _ = chain(1e-4)
        assert propagate_chain([p1]) is p1

    def test_empty(self):
        with pytest.raises(InsufficientDataError):
            propagate_chain([])

    def test_left_to_right(self):
        p1, p2 = chain(1e-4)
        p3 = NoisyPose(DecoupledPose(exp_so3([0.0, 0.4, 0.0]), [1.0, 0.0, 0.0]), 1e-4 * np.eye(3), 1e-4 * np.eye(3))
        out = propagate_chain([p1, p2, p3])
        expected = compound_poses(compound_poses(p1, p2), p3)
        assert_allclose(out.cov_rot, expected.cov_rot, atol=0)

    def test_matches_monte_carlo(self):
        p1, p2 = chain(1e-4)
        predicted = propagate_chain([p1, p2])
        cov_rot, cov_trans = sample_chain([p1, p2], 100000, 0)
        assert np.linalg.norm(predicted.cov_rot - cov_rot) / np.linalg.norm(cov_rot) < 0.05
        assert np.linalg.norm(predicted.cov_trans - cov_trans) / np.linalg.norm(cov_trans) < 0.05


class TestSampleChain:
    def test_needs_samples(self):
        with pytest.raises(InsufficientDataError):
            sample_chain(list(chain(1e-4)), 1, 0)

    def test_empty(self):
        with pytest.raises(InsufficientDataError):
            sample_chain([], 10, 0)

    def test_reproducible(self):
        a = sample_chain(list(chain(1e-4)), 100, 5)
        b = sample_chain(list(chain(1e-4)), 100, 5)
        assert_allclose(a[0], b[0], atol=0)
