# -*- coding: utf-8 -*-
#
# Copyright © HandEyeCov Project Contributors
# Licensed under the terms of the GNU GPLv3+ License
# (see handeyecov/__init__.py for details)

"""
# Translation Solver

Covariance-weighted estimation of the translation part t of X and its
covariance Σ_t, given the rotation estimate R* and its covariance Σ_R.

The translation constraint ``R_A·t + t_A = R·t_B + t`` is rewritten as
``(R_A − I)·t = q`` with ``q = R*·t_B − t_A``. Each measurement
contributes ``V_i = (R_Ai, q_i)`` and a nuisance rotation ``R̂_Ai``. The
iteration is the same Schur-complement scheme as the rotation solver, with
t as the global parameter.
"""

import logging
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from handeyecov.config import SolverSettings
from handeyecov.errors import InsufficientDataError, RankDeficientError
from handeyecov.liegroup import exp_so3, hat, left_jacobian_inv, log_so3
from handeyecov.noise import symmetrize
from handeyecov.poses import DecoupledPose, MeasurementPair, MeasurementSet, NoisyPose
from handeyecov.rotsolve import (
    RotSolution,
    SchurProblem,
    block_weights,
    closed_form_rotation,
    rotation_measurements,
    schur_complement,
    solve_rotation,
)


log = logging.getLogger(__name__)


OBSERVABILITY_TOLERANCE = 1e-6


class TransMeasurement(NamedTuple):
    """
    A translation measurement.

    Attributes
    ----------
    R_A : ndarray
        Measured robot rotation.
    q : ndarray
        ``R*·t_B − t_A``.
    cov_RA : ndarray
        Covariance of R_A.
    cov_q : ndarray
        Covariance of q.
    """
    R_A: np.ndarray
    q: np.ndarray
    cov_RA: np.ndarray
    cov_q: np.ndarray


class TransSolution(NamedTuple):
    """
    Result of ``solve_translation``.

    Attributes
    ----------
    translation : ndarray
        The estimate t*.
    cov_trans : ndarray
        Σ_t.
    refined_RAs : ndarray
        The refined R̂_Ai, shape (k, 3, 3).
    iterations : int
        Number of linearizations performed.
    final_update_norm : float
        Infinity norm of the last update vector.
    objectives : tuple of float
        Weighted objective at each accepted iterate, non-increasing.
    """
    translation: np.ndarray
    cov_trans: np.ndarray
    refined_RAs: np.ndarray
    iterations: int
    final_update_norm: float
    objectives: Tuple[float, ...] = ()


def build_q(R_star: np.ndarray, cov_R_star: np.ndarray, pair: MeasurementPair) -> TransMeasurement:
    """
    Forms ``q = R*·t_B − t_A`` with its first-order covariance

    ```
    Σ_q = Σ_tA + R*·Σ_tB·R*ᵀ + hat(R*·t_B)·Σ_R·hat(R*·t_B)ᵀ
    ```

    Parameters
    ----------
    R_star : ndarray
        Rotation estimate.
    cov_R_star : ndarray
        Its covariance Σ_R.
    pair : MeasurementPair
        The (A, B) measurement.

    Returns
    -------
    TransMeasurement
        ``cov_RA`` is passed through from A.
    """
    A, B = pair
    R_star = np.asarray(R_star, dtype=float)
    Rt = R_star @ B.translation
    H = hat(Rt)
    cov_q = A.cov_trans + R_star @ B.cov_trans @ R_star.T + H @ np.asarray(cov_R_star, dtype=float) @ H.T
    return TransMeasurement(A.rotation, Rt - A.translation, A.cov_rot, symmetrize(cov_q))


def translation_measurements(R_star: np.ndarray, cov_R_star: np.ndarray, pairs: MeasurementSet) -> List[TransMeasurement]:
    return [build_q(R_star, cov_R_star, pair) for pair in pairs]


def build_translation_jacobian(
    t_hat: np.ndarray, RA_hats: np.ndarray, rot_residuals: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Jacobian blocks of ``f_i = (R̂_Ai, (R̂_Ai − I)·t̂)``:
    ``J_i^t = [0; R̂_Ai − I]`` and ``J_i^ξ = [I; −hat(R̂_Ai·t̂)]``.

    Parameters
    ----------
    t_hat : ndarray
        Current translation.
    RA_hats : ndarray
        Current nuisance rotations, shape (k, 3, 3).
    rot_residuals : ndarray, optional
        Current rotation residuals ``r_i = log(R_Ai·R̂_Aiᵀ)``, shape (k, 3).
        When given, the rotation block of ``J_i^ξ`` is the derivative of
        the logarithm residual under ``R̂_Ai ← exp(δ_i)·R̂_Ai``,
        ``J_l⁻¹(−r_i)``, which equals I at ``r_i = 0``.

    Returns
    -------
    jac_t, jac_xi : ndarray
        Both of shape (k, 6, 3).
    """
    t_hat = np.asarray(t_hat, dtype=float)
    RA_hats = np.asarray(RA_hats, dtype=float).reshape(-1, 3, 3)
    k = RA_hats.shape[0]
    jac_t = np.zeros((k, 6, 3))
    jac_t[:, 3:, :] = RA_hats - np.eye(3)
    jac_xi = np.zeros((k, 6, 3))
    if rot_residuals is None:
        jac_xi[:, :3, :] = np.eye(3)
    else:
        jac_xi[:, :3, :] = left_jacobian_inv(-np.asarray(rot_residuals, dtype=float).reshape(k, 3))
    jac_xi[:, 3:, :] = -hat(RA_hats @ t_hat)
    return jac_t, jac_xi


def _check_observability(RAs: np.ndarray) -> None:
    stacked = (RAs - np.eye(3)).reshape(-1, 3)
    sv = scipy.linalg.svdvals(stacked)
    if sv[0] == 0.0 or sv[-1] <= OBSERVABILITY_TOLERANCE * sv[0]:
        raise RankDeficientError("Translation is not observable: the robot rotations R_A lack diversity")


def _linear_translation(RAs: np.ndarray, qs: np.ndarray) -> np.ndarray:
    _check_observability(RAs)
    t, *_ = scipy.linalg.lstsq((RAs - np.eye(3)).reshape(-1, 3), qs.reshape(-1))
    return t


def closed_form_translation(R: np.ndarray, pairs: MeasurementSet) -> np.ndarray:
    """
    Unweighted least-squares translation for a given rotation: solves the
    stacked system ``(R_Ai − I)·t = R·t_Bi − t_Ai``.

    Raises
    ------
    InsufficientDataError
        With fewer than two pairs.
    RankDeficientError
        If the system does not determine t (e.g. all R_A = I).
    """
    if len(pairs) < 2:
        raise InsufficientDataError(f"At least 2 measurement pairs are required, got {len(pairs)}")
    R = np.asarray(R, dtype=float)
    return _linear_translation(pairs.RA, pairs.tB @ R.T - pairs.tA)


class TranslationProblem(SchurProblem):
    """
    The translation estimation problem; the state is ``(t̂, R̂_A)``.
    """
    name = "translation"

    def __init__(self, RAs: np.ndarray, qs: np.ndarray, weights: np.ndarray, settings=None) -> None:
        super().__init__(weights, settings)
        self.RAs = RAs
        self.qs = qs

    def _rot_residuals(self, RA_hats):
        return log_so3(self.RAs @ np.swapaxes(RA_hats, -1, -2))

    def residuals(self, state):
        t, RA_hats = state
        return np.concatenate((self._rot_residuals(RA_hats), self.qs - (RA_hats @ t - t)), axis=1)

    def jacobians(self, state):
        t, RA_hats = state
        return build_translation_jacobian(t, RA_hats, self._rot_residuals(RA_hats))

    def retract(self, state, xi, deltas):
        t, RA_hats = state
        return t + xi, exp_so3(deltas) @ RA_hats


def solve_translation(
    measurements: Sequence[TransMeasurement],
    init: Optional[np.ndarray] = None,
    settings: Optional[SolverSettings] = None,
) -> TransSolution:
    """
    Iterative covariance-weighted estimation of t and Σ_t.

    Parameters
    ----------
    measurements : sequence of TransMeasurement
        At least two, with enough rotation diversity to determine t.
    init : ndarray, optional
        Starting translation. Defaults to the unweighted linear
        least-squares solution of ``(R_Ai − I)·t = q_i``.
    settings : SolverSettings, optional
        Convergence policy.

    Returns
    -------
    TransSolution

    Raises
    ------
    InsufficientDataError
        With fewer than two measurements.
    RankDeficientError
        If t is not observable.
    NoConvergenceError
        If the iteration does not converge.
    """
    settings = settings or SolverSettings()
    if len(measurements) < 2:
        raise InsufficientDataError(f"At least 2 measurements are required, got {len(measurements)}")
    RAs = np.array([m.R_A for m in measurements], dtype=float)
    qs = np.array([m.q for m in measurements], dtype=float)
    cov_RAs = np.array([m.cov_RA for m in measurements], dtype=float)
    cov_qs = np.array([m.cov_q for m in measurements], dtype=float)

    if init is None:
        t0 = _linear_translation(RAs, qs)
    else:
        _check_observability(RAs)
        t0 = np.array(init, dtype=float).reshape(3)

    problem = TranslationProblem(RAs, qs, block_weights(cov_RAs, cov_qs, settings.jitter), settings)
    result = problem.solve((t0, RAs.copy()))
    cov_trans = symmetrize(np.linalg.inv(schur_complement(result.system)))

    t, RA_hats = result.state
    log.info(
        f"Translation converged after {result.iterations} iteration(s), update norm {result.update_norm:.3g}"
    )
    return TransSolution(t, cov_trans, RA_hats, result.iterations, result.update_norm, result.objectives)


def solve_axxb(
    pairs: MeasurementSet, settings: Optional[SolverSettings] = None
) -> Tuple[RotSolution, TransSolution]:
    """
    Solves ``A·X = X·B`` for X and the covariances of its rotation and
    translation.

    The rotation is estimated first; its estimate and covariance then enter
    the translation measurements.

    Parameters
    ----------
    pairs : MeasurementSet
        At least two measurement pairs.
    settings : SolverSettings, optional
        Convergence policy of both solvers.

    Returns
    -------
    (RotSolution, TransSolution)

    Raises
    ------
    InsufficientDataError
        With fewer than two pairs.
    """
    if len(pairs) < 2:
        raise InsufficientDataError(f"At least 2 measurement pairs are required, got {len(pairs)}")
    settings = settings or SolverSettings()
    rot = solve_rotation(rotation_measurements(pairs), settings=settings)
    trans = solve_translation(translation_measurements(rot.rotation, rot.cov_rot, pairs), settings=settings)
    return rot, trans


def closed_form_pose(pairs: MeasurementSet) -> DecoupledPose:
    """
    The unweighted closed-form estimate of X: Procrustes rotation followed
    by linear least-squares translation. Covariances are not used.
    """
    R = closed_form_rotation(rotation_measurements(pairs))
    return DecoupledPose(R, closed_form_translation(R, pairs), validate=False)


def solution_pose(rot: RotSolution, trans: TransSolution) -> NoisyPose:
    """The estimated X with its covariances."""
    return NoisyPose(DecoupledPose(rot.rotation, trans.translation), rot.cov_rot, trans.cov_trans)


def _nearest_representative(target: np.ndarray, v: np.ndarray) -> np.ndarray:
    # exp(hat(v)) == exp(hat(v − 2π·v/‖v‖)); pick whichever lies closer to target.
    theta = np.linalg.norm(v, axis=1, keepdims=True)
    alt = v - 2.0 * np.pi * v / np.where(theta > 0.0, theta, 1.0)
    closer = np.linalg.norm(target - alt, axis=1) < np.linalg.norm(target - v, axis=1)
    return np.where(closer[:, None], alt, v)


def rotation_residuals(R: np.ndarray, pairs: MeasurementSet) -> np.ndarray:
    """
    Per-pair ``‖α_i − R·β_i‖``.

    Near an angle of π the logarithms of A and B may fall on opposite
    sides of the branch cut; ``R·β_i`` is then replaced by its other
    representative ``R·β_i − 2π·R·β_i/‖β_i‖`` when that is closer to α_i.
    """
    R = np.asarray(R, dtype=float)
    alphas = log_so3(pairs.RA)
    return np.linalg.norm(alphas - _nearest_representative(alphas, log_so3(pairs.RB) @ R.T), axis=1)


def translation_residuals(R: np.ndarray, t: np.ndarray, pairs: MeasurementSet) -> np.ndarray:
    """Per-pair ``‖R_Ai·t + t_Ai − R·t_Bi − t‖``."""
    R = np.asarray(R, dtype=float)
    t = np.asarray(t, dtype=float)
    return np.linalg.norm(pairs.RA @ t + pairs.tA - pairs.tB @ R.T - t, axis=1)
