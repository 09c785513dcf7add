# -*- coding: utf-8 -*-
#
# Copyright © HandEyeCov Project Contributors
# Licensed under the terms of the GNU GPLv3+ License
# (see handeyecov/__init__.py for details)

"""
# Lie Group

SO(3) primitives: the hat and vee maps, the exponential and logarithm, and
the left Jacobian with its inverse.

Every function accepts a single vector of shape ``(3,)`` (or matrix of
shape ``(3, 3)``) as well as a stack of them with shape ``(..., 3)`` (or
``(..., 3, 3)``); leading dimensions are preserved. The solvers rely on the
stacked form to evaluate all measurements of a dataset at once.
"""

import logging

import numpy as np
from scipy.linalg import polar

from handeyecov.errors import InvalidRotationError, NearSingularError, NonSkewError


log = logging.getLogger(__name__)


SMALL_ANGLE = 1e-8
"""Below this angle the θ-dependent coefficients use Taylor expansions."""

SKEW_TOLERANCE = 1e-9
ORTHONORMAL_TOLERANCE = 1e-9
REPAIR_TOLERANCE = 1e-6
SINGULAR_MARGIN = 1e-6

# Switch to the symmetric-part axis extraction when sin(θ) gets this small.
_NEAR_PI = np.pi - 1e-3


def hat(v: np.ndarray) -> np.ndarray:
    """
    Maps a rotation vector to the skew-symmetric matrix of the Lie algebra.

    ``hat(v) @ w`` equals ``np.cross(v, w)``.

    Parameters
    ----------
    v : ndarray
        Vector(s) of shape ``(..., 3)``.

    Returns
    -------
    ndarray
        Skew-symmetric matrices of shape ``(..., 3, 3)``.
    """
    v = np.asarray(v, dtype=float)
    if v.shape[-1:] != (3,):
        raise ValueError(f"Expected vectors of shape (..., 3), got {v.shape}")
    S = np.zeros(v.shape[:-1] + (3, 3))
    S[..., 0, 1] = -v[..., 2]
    S[..., 0, 2] = v[..., 1]
    S[..., 1, 0] = v[..., 2]
    S[..., 1, 2] = -v[..., 0]
    S[..., 2, 0] = -v[..., 1]
    S[..., 2, 1] = v[..., 0]
    return S


def vee(S: np.ndarray) -> np.ndarray:
    """
    Inverse of ``hat``.

    Parameters
    ----------
    S : ndarray
        Skew-symmetric matrix (or stack of them), shape ``(..., 3, 3)``.

    Returns
    -------
    ndarray
        Vectors of shape ``(..., 3)``.

    Raises
    ------
    NonSkewError
        If ``‖S + Sᵀ‖`` exceeds 1e-9 (Frobenius) for any matrix.
    """
    S = np.asarray(S, dtype=float)
    if S.shape[-2:] != (3, 3):
        raise ValueError(f"Expected matrices of shape (..., 3, 3), got {S.shape}")
    asym = np.linalg.norm(S + np.swapaxes(S, -1, -2), axis=(-2, -1))
    if np.any(asym > SKEW_TOLERANCE):
        raise NonSkewError(f"Matrix is not skew-symmetric (‖S + Sᵀ‖ = {np.max(asym):.3g})")
    return _skew_part(S)


def _skew_part(M: np.ndarray) -> np.ndarray:
    """vee of the skew-symmetric part of M, without the symmetry check."""
    return 0.5 * np.stack(
        (
            M[..., 2, 1] - M[..., 1, 2],
            M[..., 0, 2] - M[..., 2, 0],
            M[..., 1, 0] - M[..., 0, 1],
        ),
        axis=-1,
    )


def _coefficients(theta: np.ndarray):
    """
    Rodrigues coefficients sin(θ)/θ, (1 − cos θ)/θ² and (θ − sin θ)/θ³.
    """
    small = theta < SMALL_ANGLE
    t = np.where(small, 1.0, theta)
    t2 = theta * theta
    t4 = t2 * t2
    a = np.where(small, 1.0 - t2 / 6.0 + t4 / 120.0, np.sin(t) / t)
    b = np.where(small, 0.5 - t2 / 24.0 + t4 / 720.0, (1.0 - np.cos(t)) / t**2)
    c = np.where(small, 1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0, (t - np.sin(t)) / t**3)
    return a, b, c


def exp_so3(v: np.ndarray) -> np.ndarray:
    """
    The exponential map ``so(3) -> SO(3)`` (Rodrigues formula).

    Parameters
    ----------
    v : ndarray
        Rotation vector(s), shape ``(..., 3)``.

    Returns
    -------
    ndarray
        Rotation matrices, shape ``(..., 3, 3)``.
    """
    v = np.asarray(v, dtype=float)
    theta = np.linalg.norm(v, axis=-1)
    a, b, _ = _coefficients(theta)
    K = hat(v)
    return np.eye(3) + a[..., None, None] * K + b[..., None, None] * (K @ K)


def log_so3(R: np.ndarray) -> np.ndarray:
    """
    The logarithm map ``SO(3) -> so(3)``, returned in vee coordinates.

    The canonical representative with ``‖v‖ ≤ π`` is returned. At (and
    close to) an angle of π, the axis is taken from the column of
    ``(R + Rᵀ)/2`` with the largest diagonal entry, ties going to the
    lowest axis index, and its sign is matched to the skew-symmetric part
    of ``R``. When that part vanishes the selected component is positive.

    Parameters
    ----------
    R : ndarray
        Rotation matrix (or stack), shape ``(..., 3, 3)``.

    Returns
    -------
    ndarray
        Rotation vectors, shape ``(..., 3)``.
    """
    R = np.asarray(R, dtype=float)
    if R.shape[-2:] != (3, 3):
        raise ValueError(f"Expected matrices of shape (..., 3, 3), got {R.shape}")
    batch = R.shape[:-2]
    Rf = R.reshape(-1, 3, 3)

    s = _skew_part(Rf)  # sin(θ)·axis
    sin_t = np.linalg.norm(s, axis=-1)
    cos_t = 0.5 * (np.trace(Rf, axis1=-2, axis2=-1) - 1.0)
    theta = np.arctan2(sin_t, cos_t)

    small = theta < SMALL_ANGLE
    t2 = theta * theta
    ratio = np.where(
        small,
        1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0,
        theta / np.where(small, 1.0, sin_t),
    )
    v = ratio[:, None] * s

    for n in np.flatnonzero(theta > _NEAR_PI):
        sym = 0.5 * (Rf[n] + Rf[n].T)
        aat = (sym - cos_t[n] * np.eye(3)) / (1.0 - cos_t[n])
        i = int(np.argmax(np.diag(aat)))
        axis = aat[:, i] / np.sqrt(aat[i, i])
        axis /= np.linalg.norm(axis)
        if axis @ s[n] < 0.0:
            axis = -axis
        v[n] = theta[n] * axis

    return v.reshape(batch + (3,))


def left_jacobian(v: np.ndarray) -> np.ndarray:
    """
    The left Jacobian of SO(3),
    ``J(v) = I + ((1 − cos θ)/θ²) hat(v) + ((θ − sin θ)/θ³) hat(v)²``.

    Parameters
    ----------
    v : ndarray
        Rotation vector(s), shape ``(..., 3)``.

    Returns
    -------
    ndarray
        Jacobians, shape ``(..., 3, 3)``.
    """
    v = np.asarray(v, dtype=float)
    theta = np.linalg.norm(v, axis=-1)
    _, b, c = _coefficients(theta)
    K = hat(v)
    return np.eye(3) + b[..., None, None] * K + c[..., None, None] * (K @ K)


def left_jacobian_inv(v: np.ndarray) -> np.ndarray:
    """
    Closed-form inverse of ``left_jacobian``,
    ``J⁻¹(v) = I − hat(v)/2 + ((1 − (θ/2)·cot(θ/2))/θ²) hat(v)²``.

    Parameters
    ----------
    v : ndarray
        Rotation vector(s), shape ``(..., 3)``, with ``‖v‖ < 2π``.

    Returns
    -------
    ndarray
        Inverse Jacobians, shape ``(..., 3, 3)``.

    Raises
    ------
    NearSingularError
        If any ``‖v‖`` lies within 1e-6 of a nonzero multiple of 2π.
    """
    v = np.asarray(v, dtype=float)
    theta = np.linalg.norm(v, axis=-1)
    turns = np.round(theta / (2.0 * np.pi))
    if np.any((turns >= 1) & (np.abs(theta - 2.0 * np.pi * turns) < SINGULAR_MARGIN)):
        raise NearSingularError(
            f"Left Jacobian is singular at rotation angle {np.max(theta):.12g} (multiple of 2π)"
        )
    small = theta < SMALL_ANGLE
    t = np.where(small, 1.0, theta)
    t2 = theta * theta
    half = 0.5 * t
    c = np.where(
        small,
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0,
        (1.0 - half * np.cos(half) / np.sin(half)) / t**2,
    )
    K = hat(v)
    return np.eye(3) - 0.5 * K + c[..., None, None] * (K @ K)


def conjugate_identity_check(R: np.ndarray, v: np.ndarray, atol: float = 1e-10) -> bool:
    """
    Checks ``R·hat(v)·Rᵀ = hat(R·v)``.

    Parameters
    ----------
    R : ndarray
        Rotation matrix.
    v : ndarray
        Rotation vector.
    atol : float, optional
        Absolute tolerance (default 1e-10).

    Returns
    -------
    bool
    """
    R = np.asarray(R, dtype=float)
    v = np.asarray(v, dtype=float)
    return bool(np.allclose(R @ hat(v) @ R.T, hat(R @ v), rtol=0.0, atol=atol))


def rotation_angle(R: np.ndarray) -> np.ndarray:
    """Rotation angle(s) in radians, in ``[0, π]``."""
    return np.linalg.norm(log_so3(R), axis=-1)


def orthonormality_error(m: np.ndarray) -> float:
    """
    Largest violation of the rotation invariants: ``‖mᵀm − I‖`` (Frobenius)
    and ``|det(m) − 1|``.
    """
    m = np.asarray(m, dtype=float)
    return float(max(np.linalg.norm(m.T @ m - np.eye(3)), abs(np.linalg.det(m) - 1.0)))


def validate_rotation(m, name: str = "rotation") -> np.ndarray:
    """
    Checks a matrix against the rotation invariants.

    Matrices within 1e-9 of SO(3) are returned unchanged. Matrices within
    1e-6 are re-orthonormalized to the nearest rotation (polar
    decomposition); this absorbs the rounding of text file formats.

    Parameters
    ----------
    m : array_like
        A 3x3 matrix.
    name : str, optional
        Used in log and error messages.

    Returns
    -------
    ndarray
        A valid rotation matrix.

    Raises
    ------
    InvalidRotationError
        If ``m`` is not 3x3, not finite, or farther than 1e-6 from SO(3).
    """
    m = np.array(m, dtype=float)
    if m.shape != (3, 3):
        raise InvalidRotationError(f"{name} must be 3x3, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidRotationError(f"{name} contains non-finite entries")
    err = orthonormality_error(m)
    if err <= ORTHONORMAL_TOLERANCE:
        return m
    if err <= REPAIR_TOLERANCE:
        repaired, _ = polar(m)
        log.warning(f"Re-orthonormalized {name} (invariant violation {err:.3g})")
        return repaired
    raise InvalidRotationError(f"{name} is not a rotation matrix (invariant violation {err:.3g})")
