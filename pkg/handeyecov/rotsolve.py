# -*- coding: utf-8 -*-
#
# Copyright © HandEyeCov Project Contributors
# Licensed under the terms of the GNU GPLv3+ License
# (see handeyecov/__init__.py for details)

"""
# Rotation Solver

Covariance-weighted estimation of the rotation part R of the hand-eye
transformation X, together with its first-order covariance Σ_R.

Taking logarithms of ``R_A·R = R·R_B`` gives ``α_i = R·β_i`` with
``α_i = log(R_Ai)`` and ``β_i = log(R_Bi)``. Each measurement contributes
the observation ``V_i = (β_i, α_i)`` and a nuisance parameter ``β̂_i``;
the model is ``f_i = (β̂_i, exp(hat(ξ))·R̂·β̂_i)``. The arrow-shaped normal
equations are reduced with a Schur complement onto the rotation
perturbation ξ, whose inverse at the final iterate is Σ_R.

The Schur machinery here (``SchurSystem``, ``assemble_schur``,
``schur_solve`` and the ``SchurProblem`` iteration driver) is shared with
the translation solver.

Using this module, you can

* compute a closed-form (Procrustes) initial rotation
* run the weighted iteration from any starting rotation
* inspect the per-measurement Jacobian blocks and normal-equation blocks
"""

from __future__ import annotations

import logging
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from handeyecov.config import SolverSettings
from handeyecov.errors import (
    DegenerateMotionError,
    InsufficientDataError,
    NoConvergenceError,
    RankDeficientError,
    SingularBlockError,
)
from handeyecov.liegroup import exp_so3, hat, log_so3, validate_rotation
from handeyecov.noise import CONDITION_LIMIT, JITTER, regularize, rotvec_covariance, symmetrize
from handeyecov.poses import MeasurementSet


log = logging.getLogger(__name__)


PARALLEL_TOLERANCE = 1e-6


class RotMeasurement(NamedTuple):
    """
    A rotation measurement in logarithm coordinates.

    Attributes
    ----------
    alpha : ndarray
        ``log(R_A)``.
    beta : ndarray
        ``log(R_B)``.
    cov_alpha : ndarray
        Covariance of alpha.
    cov_beta : ndarray
        Covariance of beta.
    """
    alpha: np.ndarray
    beta: np.ndarray
    cov_alpha: np.ndarray
    cov_beta: np.ndarray


class RotSolution(NamedTuple):
    """
    Result of ``solve_rotation``.

    Attributes
    ----------
    rotation : ndarray
        The estimate R*.
    cov_rot : ndarray
        Σ_R, covariance of the left perturbation of R*.
    refined_betas : ndarray
        The refined β̂_i, shape (k, 3).
    iterations : int
        Number of linearizations performed.
    final_update_norm : float
        Infinity norm of the last update vector.
    objectives : tuple of float
        Weighted objective at each accepted iterate, non-increasing.
    """
    rotation: np.ndarray
    cov_rot: np.ndarray
    refined_betas: np.ndarray
    iterations: int
    final_update_norm: float
    objectives: Tuple[float, ...] = ()


class SchurSystem(NamedTuple):
    """
    Blocks of arrow-shaped normal equations.

    For a global parameter (3 dof) and one 3-dof parameter per measurement,
    with Jacobian blocks ``Jg_i``, ``Jl_i`` and weights ``P_i = Σ_Vi⁻¹``:

    ```
    U = Σ Jg_iᵀ P_i Jg_i      W_i = Jg_iᵀ P_i Jl_i      Z_i = Jl_iᵀ P_i Jl_i
    ε = Σ Jg_iᵀ P_i r_i       ε_i = Jl_iᵀ P_i r_i
    ```

    Attributes
    ----------
    U : ndarray
        (3, 3).
    W_blocks : ndarray
        (k, 3, 3).
    Z_blocks : ndarray
        (k, 3, 3).
    eps_primary : ndarray
        (3,).
    eps_blocks : ndarray
        (k, 3).
    """
    U: np.ndarray
    W_blocks: np.ndarray
    Z_blocks: np.ndarray
    eps_primary: np.ndarray
    eps_blocks: np.ndarray


def block_weights(cov_first: np.ndarray, cov_second: np.ndarray, jitter: float = JITTER) -> np.ndarray:
    """
    Per-measurement weight matrices ``Σ_Vi⁻¹`` with
    ``Σ_Vi = diag(cov_first_i, cov_second_i)``.

    Singular covariances (perfect measurements) are regularized with
    ``jitter·I`` before inversion.

    Returns
    -------
    ndarray
        Shape (k, 6, 6).
    """
    cov_first = np.asarray(cov_first, dtype=float)
    cov_second = np.asarray(cov_second, dtype=float)
    k = cov_first.shape[0]
    weights = np.zeros((k, 6, 6))
    if k:
        weights[:, :3, :3] = symmetrize(np.linalg.inv(regularize(cov_first, jitter)))
        weights[:, 3:, 3:] = symmetrize(np.linalg.inv(regularize(cov_second, jitter)))
    return weights


def weighted_objective(residuals: np.ndarray, weights: np.ndarray) -> float:
    """``Σ r_iᵀ P_i r_i``."""
    return float(np.einsum("ki,kij,kj->", residuals, weights, residuals))


def assemble_schur(
    jac_blocks: Tuple[np.ndarray, np.ndarray],
    cov_blocks: Optional[Sequence[Tuple[np.ndarray, np.ndarray]]],
    residuals: np.ndarray,
    weights: Optional[np.ndarray] = None,
    jitter: float = JITTER,
    condition_limit: float = CONDITION_LIMIT,
) -> SchurSystem:
    """
    Assembles the blocks of the normal equations.

    Parameters
    ----------
    jac_blocks : tuple of ndarray
        ``(Jg, Jl)``, the Jacobians with respect to the global parameter
        and to each measurement's own parameter, both of shape (k, 6, 3).
    cov_blocks : sequence of (ndarray, ndarray)
        Per measurement, the covariances of the first and second halves of
        ``V_i``. Ignored when ``weights`` is given.
    residuals : ndarray
        ``V_i − f_i``, shape (k, 6).
    weights : ndarray, optional
        Precomputed ``Σ_Vi⁻¹`` (see ``block_weights``).
    jitter : float, optional
        Regularization of singular covariances.
    condition_limit : float, optional
        Largest admissible condition number of a Z block.

    Returns
    -------
    SchurSystem

    Raises
    ------
    SingularBlockError
        If a Z block is ill-conditioned.
    """
    Jg, Jl = (np.asarray(j, dtype=float) for j in jac_blocks)
    r = np.asarray(residuals, dtype=float)
    if weights is None:
        first = np.array([c[0] for c in cov_blocks], dtype=float)
        second = np.array([c[1] for c in cov_blocks], dtype=float)
        weights = block_weights(first, second, jitter)

    JgT_P = np.einsum("kji,kjl->kil", Jg, weights)
    JlT_P = np.einsum("kji,kjl->kil", Jl, weights)
    U = symmetrize(np.einsum("kij,kjl->il", JgT_P, Jg))
    W = JgT_P @ Jl
    Z = symmetrize(JlT_P @ Jl)
    eps_primary = np.einsum("kij,kj->i", JgT_P, r)
    eps_blocks = np.einsum("kij,kj->ki", JlT_P, r)

    cond = np.linalg.cond(Z)
    bad = ~np.isfinite(cond) | (cond > condition_limit)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise SingularBlockError(f"Normal-equation block Z_{i} is singular (condition number {cond[i]:.3g})")
    return SchurSystem(U, W, Z, eps_primary, eps_blocks)


def schur_complement(system: SchurSystem) -> np.ndarray:
    """
    ``U − Σ W_i Z_i⁻¹ W_iᵀ``. Its inverse is the covariance of the global
    parameter.
    """
    WZinv = system.W_blocks @ np.linalg.inv(system.Z_blocks)
    return symmetrize(system.U - np.einsum("kij,klj->il", WZinv, system.W_blocks))


def schur_solve(
    system: SchurSystem, condition_limit: float = CONDITION_LIMIT
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Solves the normal equations by block elimination.

    ```
    (U − Σ W_i Z_i⁻¹ W_iᵀ) ξ = ε − Σ W_i Z_i⁻¹ ε_i
    Z_i δ_i = ε_i − W_iᵀ ξ
    ```

    Returns
    -------
    xi : ndarray
        Update of the global parameter, shape (3,).
    deltas : ndarray
        Per-measurement updates, shape (k, 3).

    Raises
    ------
    RankDeficientError
        If the Schur complement is singular.
    """
    Zinv = np.linalg.inv(system.Z_blocks)
    WZinv = system.W_blocks @ Zinv
    S = symmetrize(system.U - np.einsum("kij,klj->il", WZinv, system.W_blocks))
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > condition_limit:
        raise RankDeficientError(f"Schur complement is singular (condition number {cond:.3g})")
    rhs = system.eps_primary - np.einsum("kij,kj->i", WZinv, system.eps_blocks)
    xi = scipy.linalg.solve(S, rhs, assume_a="sym")
    deltas = np.einsum("kij,kj->ki", Zinv, system.eps_blocks - np.einsum("kji,j->ki", system.W_blocks, xi))
    return xi, deltas


class IterationResult(NamedTuple):
    state: tuple
    system: SchurSystem
    iterations: int
    update_norm: float
    objectives: Tuple[float, ...]


class SchurProblem:
    """
    A weighted least-squares problem with one global 3-dof parameter and
    one 3-dof parameter per measurement. The class cannot be used directly.

    Subclasses define the residuals ``V − f(P)``, the Jacobian blocks of
    ``f`` and how an update is applied to the state. ``solve()`` then runs
    the damped Gauss-Newton iteration: the update comes from
    ``schur_solve``; a step that increases the weighted objective is halved
    up to ``max_halvings`` times.

    Parameters
    ----------
    weights : ndarray
        ``Σ_Vi⁻¹``, shape (k, 6, 6), held fixed across iterations.
    settings : SolverSettings, optional
        Convergence policy.
    """
    name = "problem"

    def __init__(self, weights: np.ndarray, settings: Optional[SolverSettings] = None) -> None:
        self.weights = weights
        self.settings = settings or SolverSettings()

    def residuals(self, state: tuple) -> np.ndarray:
        raise NotImplementedError

    def jacobians(self, state: tuple) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def retract(self, state: tuple, xi: np.ndarray, deltas: np.ndarray) -> tuple:
        raise NotImplementedError

    def objective(self, state: tuple) -> float:
        return weighted_objective(self.residuals(state), self.weights)

    def solve(self, state: tuple) -> IterationResult:
        """
        Iterates from ``state`` until the infinity norm of the update drops
        below ``settings.tolerance``.

        When no halved step decreases the objective but the update is below
        ``settings.stall_tolerance``, the objective is at its
        floating-point floor and the iterate is accepted.

        Raises
        ------
        NoConvergenceError
            If the iteration budget is exhausted or the objective cannot
            be decreased.
        RankDeficientError
            From ``schur_solve``.
        """
        s = self.settings
        objectives: List[float] = []
        for iteration in range(1, s.max_iterations + 1):
            r = self.residuals(state)
            system = assemble_schur(
                self.jacobians(state), None, r, weights=self.weights, condition_limit=s.condition_limit
            )
            xi, deltas = schur_solve(system, s.condition_limit)
            norm = float(max(np.max(np.abs(xi)), np.max(np.abs(deltas), initial=0.0)))
            current = weighted_objective(r, self.weights)
            objectives.append(current)
            log.debug(f"{self.name} iteration {iteration}: objective {current:.12g}, update {norm:.3g}")
            if norm < s.tolerance:
                return IterationResult(state, system, iteration, norm, tuple(objectives))

            scale = 1.0
            for halving in range(s.max_halvings + 1):
                candidate = self.retract(state, scale * xi, scale * deltas)
                if self.objective(candidate) <= current:
                    break
                scale *= 0.5
            else:
                if norm < s.stall_tolerance:
                    log.debug(f"{self.name} stalled at update {norm:.3g}; objective at its floor")
                    return IterationResult(state, system, iteration, norm, tuple(objectives))
                raise NoConvergenceError(
                    f"{self.name}: no step decreases the objective after {s.max_halvings} halvings "
                    f"(update norm {norm:.3g})"
                )
            if halving:
                log.debug(f"{self.name} iteration {iteration}: step halved {halving} time(s)")
            state = candidate

        raise NoConvergenceError(f"{self.name}: no convergence after {s.max_iterations} iterations")


def rotation_measurements(pairs: MeasurementSet) -> List[RotMeasurement]:
    """
    Converts measurement pairs to logarithm coordinates, transporting the
    rotation covariances with ``rotvec_covariance``.
    """
    alphas = log_so3(pairs.RA)
    betas = log_so3(pairs.RB)
    cov_alphas = rotvec_covariance(alphas, pairs.cov_RA)
    cov_betas = rotvec_covariance(betas, pairs.cov_RB)
    return [RotMeasurement(*m) for m in zip(alphas, betas, cov_alphas, cov_betas)]


def _stack(measurements: Sequence[RotMeasurement]):
    if not measurements:
        empty = np.zeros((0, 3))
        return empty, empty, np.zeros((0, 3, 3)), np.zeros((0, 3, 3))
    return tuple(np.array([getattr(m, f) for m in measurements], dtype=float) for f in RotMeasurement._fields)


def _check_axes(vectors: np.ndarray, name: str) -> None:
    norms = np.linalg.norm(vectors, axis=1)
    axes = vectors[norms > PARALLEL_TOLERANCE] / norms[norms > PARALLEL_TOLERANCE, None]
    if len(axes) < 2:
        raise DegenerateMotionError(f"Fewer than two non-trivial {name} rotations")
    sv = scipy.linalg.svdvals(axes)
    if sv[1] <= PARALLEL_TOLERANCE * sv[0]:
        raise DegenerateMotionError(f"All {name} rotation axes are parallel")


def closed_form_rotation(measurements: Sequence[RotMeasurement]) -> np.ndarray:
    """
    Unweighted rotation estimate ``argmin_R Σ‖α_i − R·β_i‖²``.

    Solved as an orthogonal Procrustes problem: with ``M = Σ α_i β_iᵀ =
    U·S·Vᵀ``, ``R = U·diag(1, 1, det(U·Vᵀ))·Vᵀ``.

    Raises
    ------
    InsufficientDataError
        With fewer than two measurements.
    DegenerateMotionError
        If all rotation axes are parallel within 1e-6.
    """
    if len(measurements) < 2:
        raise InsufficientDataError(f"At least 2 measurements are required, got {len(measurements)}")
    alphas, betas, _, _ = _stack(measurements)
    _check_axes(alphas, "A")
    _check_axes(betas, "B")
    M = alphas.T @ betas
    U, _, Vt = scipy.linalg.svd(M)
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    return U @ D @ Vt


def build_rotation_jacobian(R_hat: np.ndarray, betas: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Jacobian blocks of ``f_i = (β̂_i, exp(hat(ξ))·R̂·β̂_i)``:
    ``J_i^ξ = [0; −hat(R̂·β̂_i)]`` and ``J_i^β = [I; R̂]``.

    Returns
    -------
    jac_xi, jac_beta : ndarray
        Both of shape (k, 6, 3).
    """
    R_hat = np.asarray(R_hat, dtype=float)
    betas = np.atleast_2d(np.asarray(betas, dtype=float))
    k = betas.shape[0]
    jac_xi = np.zeros((k, 6, 3))
    jac_xi[:, 3:, :] = -hat(betas @ R_hat.T)
    jac_beta = np.zeros((k, 6, 3))
    jac_beta[:, :3, :] = np.eye(3)
    jac_beta[:, 3:, :] = R_hat
    return jac_xi, jac_beta


class RotationProblem(SchurProblem):
    """
    The rotation estimation problem; the state is ``(R̂, β̂)``.
    """
    name = "rotation"

    def __init__(self, alphas: np.ndarray, betas: np.ndarray, weights: np.ndarray, settings=None) -> None:
        super().__init__(weights, settings)
        self.alphas = alphas
        self.betas = betas

    def residuals(self, state):
        R, betas_hat = state
        return np.concatenate((self.betas - betas_hat, self.alphas - betas_hat @ R.T), axis=1)

    def jacobians(self, state):
        return build_rotation_jacobian(*state)

    def retract(self, state, xi, deltas):
        R, betas_hat = state
        return exp_so3(xi) @ R, betas_hat + deltas


def solve_rotation(
    measurements: Sequence[RotMeasurement],
    init: Optional[np.ndarray] = None,
    settings: Optional[SolverSettings] = None,
) -> RotSolution:
    """
    Iterative covariance-weighted estimation of R and Σ_R.

    Parameters
    ----------
    measurements : sequence of RotMeasurement
        At least two, with non-parallel rotation axes.
    init : ndarray, optional
        Starting rotation. Defaults to ``closed_form_rotation``.
    settings : SolverSettings, optional
        Convergence policy.

    Returns
    -------
    RotSolution

    Raises
    ------
    InsufficientDataError
        With fewer than two measurements.
    DegenerateMotionError
        If the rotation is not observable from the measurements.
    NoConvergenceError
        If the iteration does not converge.
    """
    settings = settings or SolverSettings()
    if len(measurements) < 2:
        raise InsufficientDataError(f"At least 2 measurements are required, got {len(measurements)}")
    alphas, betas, cov_alphas, cov_betas = _stack(measurements)
    R0 = closed_form_rotation(measurements) if init is None else validate_rotation(init, "initial rotation")

    problem = RotationProblem(alphas, betas, block_weights(cov_betas, cov_alphas, settings.jitter), settings)
    try:
        result = problem.solve((R0, betas.copy()))
        cov_rot = symmetrize(np.linalg.inv(schur_complement(result.system)))
    except SingularBlockError:
        raise
    except RankDeficientError as exc:
        raise DegenerateMotionError(f"Rotation is not observable: {exc}") from exc

    R, betas_hat = result.state
    log.info(
        f"Rotation converged after {result.iterations} iteration(s), update norm {result.update_norm:.3g}"
    )
    return RotSolution(R, cov_rot, betas_hat, result.iterations, result.update_norm, result.objectives)
