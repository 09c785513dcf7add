# -*- coding: utf-8 -*-
#
# Copyright © HandEyeCov Project Contributors
# Licensed under the terms of the GNU GPLv3+ License
# (see handeyecov/__init__.py for details)

"""
# Noise

Covariance validation, Gaussian pose perturbations and first-order
covariance propagation.

Poses are perturbed on the left,

```
R = exp(hat(ξ_R)) · R̄,     t = ξ_t + t̄,
```

with ``ξ_R`` and ``ξ_t`` independent zero-mean Gaussians. Random numbers
come from ``numpy.random.Generator`` over the counter-based ``Philox``
bit generator, so a seed fully determines a draw regardless of which
thread makes it.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Optional, Union

import numpy as np
import scipy.linalg

from handeyecov.errors import DimensionMismatchError, NonPSDError, RankDeficientError
from handeyecov.liegroup import exp_so3, left_jacobian_inv

if TYPE_CHECKING:
    from handeyecov.poses import DecoupledPose


log = logging.getLogger(__name__)


SYMMETRY_TOLERANCE = 1e-12
PSD_TOLERANCE = 1e-12
JITTER = 1e-15
CONDITION_LIMIT = 1e12

Seed = Union[int, np.random.Generator]


def make_rng(seed: Seed) -> np.random.Generator:
    """
    Returns the package's random generator for ``seed``.

    Generators are passed through unchanged so that callers drawing many
    poses can share one stream.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(int(seed)))


def symmetrize(M: np.ndarray) -> np.ndarray:
    """(M + Mᵀ)/2 over the last two axes."""
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def validate_cov3(m, name: str = "covariance") -> np.ndarray:
    """
    Checks a 3x3 covariance matrix.

    Parameters
    ----------
    m : array_like
        The candidate covariance.
    name : str, optional
        Used in error messages.

    Returns
    -------
    ndarray
        The symmetrized covariance.

    Raises
    ------
    DimensionMismatchError
        If ``m`` is not 3x3.
    NonPSDError
        If ``m`` is not finite, not symmetric within 1e-12, or has an
        eigenvalue below -1e-12.
    """
    m = np.array(m, dtype=float)
    if m.shape != (3, 3):
        raise DimensionMismatchError(f"{name} must be 3x3, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonPSDError(f"{name} contains non-finite entries")
    asym = np.max(np.abs(m - m.T))
    if asym > SYMMETRY_TOLERANCE:
        raise NonPSDError(f"{name} is not symmetric (max |M - Mᵀ| = {asym:.3g})")
    m = symmetrize(m)
    lowest = scipy.linalg.eigvalsh(m)[0]
    if lowest < -PSD_TOLERANCE:
        raise NonPSDError(f"{name} is not positive-semidefinite (eigenvalue {lowest:.3g})")
    return m


def regularize(cov: np.ndarray, jitter: float = JITTER) -> np.ndarray:
    """
    Adds ``jitter·I`` to covariances whose smallest eigenvalue does not
    exceed ``jitter``, making them invertible.

    Accepts a single matrix or a stack ``(..., n, n)``; only the singular
    members of a stack are modified.
    """
    cov = np.array(cov, dtype=float)
    n = cov.shape[-1]
    lowest = np.linalg.eigvalsh(symmetrize(cov))[..., 0]
    singular = lowest <= jitter
    if np.any(singular):
        log.debug(f"Regularizing {int(np.sum(singular))} singular covariance(s) with jitter {jitter:g}")
        cov = cov + np.where(singular, jitter, 0.0)[..., None, None] * np.eye(n)
    return cov


def gaussian_factor(cov: np.ndarray, jitter: float = JITTER) -> np.ndarray:
    """
    A lower-triangular factor ``L`` with ``L·Lᵀ ≈ cov`` for sampling.

    A zero covariance yields a zero factor, so noise-free axes stay exact.
    Rank-deficient covariances are factored after adding ``jitter·I``.
    """
    cov = np.asarray(cov, dtype=float)
    if not np.any(cov):
        return np.zeros_like(cov)
    try:
        return scipy.linalg.cholesky(cov, lower=True)
    except np.linalg.LinAlgError:
        pass
    try:
        return scipy.linalg.cholesky(cov + jitter * np.eye(cov.shape[0]), lower=True)
    except np.linalg.LinAlgError:
        # Eigenvalues within the PSD roundoff window below zero.
        w, V = scipy.linalg.eigh(cov)
        return V * np.sqrt(np.clip(w, 0.0, None))


def draw_gaussian(cov: np.ndarray, rng: Seed, size: Optional[int] = None) -> np.ndarray:
    """
    Draws zero-mean Gaussian vectors with covariance ``cov``.

    Parameters
    ----------
    cov : ndarray
        An (n, n) covariance.
    rng : int or Generator
        Seed or generator.
    size : int, optional
        Number of draws. A single (n,) vector is returned when omitted.

    Returns
    -------
    ndarray
        Shape (n,) or (size, n).
    """
    L = gaussian_factor(cov)
    rng = make_rng(rng)
    n = L.shape[0]
    if size is None:
        return L @ rng.standard_normal(n)
    return rng.standard_normal((size, n)) @ L.T


def sample_noisy_pose(
    mean: DecoupledPose,
    cov_rot: np.ndarray,
    cov_trans: np.ndarray,
    rng_seed: Seed,
) -> DecoupledPose:
    """
    Draws a pose from the decoupled noise model around ``mean``.

    Parameters
    ----------
    mean : DecoupledPose
        The noise-free pose (R̄, t̄).
    cov_rot : ndarray
        Covariance of the left rotation perturbation ξ_R.
    cov_trans : ndarray
        Covariance of the translation perturbation ξ_t.
    rng_seed : int or Generator
        Seed of the draw; the rotation perturbation is drawn first.

    Returns
    -------
    DecoupledPose
        ``(exp(hat(ξ_R))·R̄, ξ_t + t̄)``.

    Raises
    ------
    NonPSDError
        If either covariance is not symmetric positive-semidefinite.
    """
    cov_rot = validate_cov3(cov_rot, "rotation covariance")
    cov_trans = validate_cov3(cov_trans, "translation covariance")
    rng = make_rng(rng_seed)
    xi_rot = draw_gaussian(cov_rot, rng)
    xi_trans = draw_gaussian(cov_trans, rng)
    return type(mean)(
        exp_so3(xi_rot) @ mean.rotation,
        xi_trans + mean.translation,
        validate=False,
    )


def forward_propagate(cov: np.ndarray, jac: np.ndarray) -> np.ndarray:
    """
    First-order propagation of a covariance through a map with Jacobian
    ``jac``: ``Σ_f = J·Σ·Jᵀ``.

    Raises
    ------
    DimensionMismatchError
        If ``cov`` is not square or its size differs from the number of
        columns of ``jac``.
    """
    cov = np.asarray(cov, dtype=float)
    jac = np.asarray(jac, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise DimensionMismatchError(f"Covariance must be square, got shape {cov.shape}")
    if jac.ndim != 2 or jac.shape[1] != cov.shape[0]:
        raise DimensionMismatchError(
            f"Jacobian of shape {jac.shape} does not conform with covariance of shape {cov.shape}"
        )
    return symmetrize(jac @ cov @ jac.T)


def backward_propagate(
    jac: np.ndarray,
    cov_v_inv: np.ndarray,
    condition_limit: float = CONDITION_LIMIT,
) -> np.ndarray:
    """
    Covariance of a weighted least-squares estimate,
    ``Σ* = (Jᵀ·Σ_V⁻¹·J)⁻¹``.

    Parameters
    ----------
    jac : ndarray
        Jacobian of the measurement model, shape (n, p).
    cov_v_inv : ndarray
        Inverse measurement covariance (weight matrix), shape (n, n).
    condition_limit : float, optional
        Largest admissible condition number of the normal matrix.

    Raises
    ------
    DimensionMismatchError
        If the shapes do not conform.
    RankDeficientError
        If the normal matrix is (numerically) singular.
    """
    jac = np.asarray(jac, dtype=float)
    cov_v_inv = np.asarray(cov_v_inv, dtype=float)
    if jac.ndim != 2 or cov_v_inv.shape != (jac.shape[0], jac.shape[0]):
        raise DimensionMismatchError(
            f"Jacobian of shape {jac.shape} does not conform with weight matrix of shape {cov_v_inv.shape}"
        )
    normal = symmetrize(jac.T @ cov_v_inv @ jac)
    cond = np.linalg.cond(normal)
    if not np.isfinite(cond) or cond > condition_limit:
        raise RankDeficientError(f"Normal matrix is rank deficient (condition number {cond:.3g})")
    return symmetrize(scipy.linalg.inv(normal))


def rotvec_covariance(rotvec: np.ndarray, cov_R: np.ndarray) -> np.ndarray:
    """
    Transports a rotation-perturbation covariance to the rotation vector
    ``rotvec = log(R)``: ``J⁻¹(rotvec)·Σ_R·J⁻ᵀ(rotvec)``.

    Both arguments may be stacked, ``(..., 3)`` and ``(..., 3, 3)``.

    Raises
    ------
    NearSingularError
        If the angle of ``rotvec`` is within 1e-6 of 2π.
    """
    Jinv = left_jacobian_inv(rotvec)
    cov_R = np.asarray(cov_R, dtype=float)
    return symmetrize(Jinv @ cov_R @ np.swapaxes(Jinv, -1, -2))
