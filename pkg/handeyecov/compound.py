# -*- coding: utf-8 -*-
#
# Copyright © HandEyeCov Project Contributors
# Licensed under the terms of the GNU GPLv3+ License
# (see handeyecov/__init__.py for details)

"""
# Compounding

Propagation of decoupled pose uncertainty through pose composition.

For ``P₁₂ = P₁ ∘ P₂`` the means compose as ``R̄₁R̄₂`` and ``R̄₁t̄₂ + t̄₁``.
The rotation covariance is carried to fourth order,

```
Σ_R₁₂ = Σ₁ + Σ₂' + (𝒜₁Σ₂' + Σ₂'𝒜₁ᵀ + Σ₁𝒜₂ + Σ₁𝒜₂ᵀ)/12 + ℬ/4
```

with ``Σ₂' = R̄₁Σ₂R̄₁ᵀ``, ``𝒜₁ = ⟨⟨Σ₁⟩⟩``, ``𝒜₂ = ⟨⟨Σ₂'⟩⟩`` and
``ℬ = ⟨⟨Σ₁, Σ₂'⟩⟩``; the translation covariance to first order,

```
Σ_t₁₂ = Σ_t₁ + R̄₁Σ_t₂R̄₁ᵀ + hat(R̄₁t̄₂)·Σ_R₁·hat(R̄₁t̄₂)ᵀ.
```

Using this module, you can

* compound two noisy poses
* propagate uncertainty along a chain such as ``Y = bTe · X · cTo``
* cross-check a prediction by sampling the chain
"""

import functools
import logging
from typing import Sequence, Tuple

import numpy as np
import scipy.linalg

from handeyecov.errors import InsufficientDataError, NonPSDError
from handeyecov.liegroup import exp_so3, hat, log_so3
from handeyecov.noise import PSD_TOLERANCE, Seed, draw_gaussian, make_rng, symmetrize
from handeyecov.poses import NoisyPose


log = logging.getLogger(__name__)


def bracket1(M: np.ndarray) -> np.ndarray:
    """``⟨⟨M⟩⟩ = −tr(M)·I + M``."""
    M = np.asarray(M, dtype=float)
    return -np.trace(M) * np.eye(3) + M


def bracket2(M: np.ndarray, N: np.ndarray) -> np.ndarray:
    """``⟨⟨M, N⟩⟩ = ⟨⟨M⟩⟩⟨⟨N⟩⟩ + ⟨⟨N·M⟩⟩``."""
    M = np.asarray(M, dtype=float)
    N = np.asarray(N, dtype=float)
    return bracket1(M) @ bracket1(N) + bracket1(N @ M)


def repair_psd(cov: np.ndarray, name: str = "covariance") -> np.ndarray:
    """
    Clips negative eigenvalues within roundoff (above -1e-12) to zero.

    Raises
    ------
    NonPSDError
        If an eigenvalue is below -1e-12.
    """
    cov = symmetrize(cov)
    w, V = scipy.linalg.eigh(cov)
    # Rounding of the eigensolver itself.
    if w[0] >= -1e-15 * max(w[-1], 0.0):
        return cov
    if w[0] < -PSD_TOLERANCE:
        raise NonPSDError(f"Compounded {name} is not positive-semidefinite (eigenvalue {w[0]:.3g})")
    log.warning(f"Compounded {name} needed PSD repair (eigenvalue {w[0]:.3g} clipped)")
    return symmetrize((V * np.clip(w, 0.0, None)) @ V.T)


def compound_poses(p1: NoisyPose, p2: NoisyPose) -> NoisyPose:
    """
    Composes two independent noisy poses, ``p1 ∘ p2``.

    Parameters
    ----------
    p1 : NoisyPose
        The left (outer) pose.
    p2 : NoisyPose
        The right (inner) pose.

    Returns
    -------
    NoisyPose
        The composition with propagated, symmetrized covariances.

    Raises
    ------
    NonPSDError
        If the fourth-order rotation terms produce a clearly indefinite
        covariance.
    """
    R1 = p1.rotation
    S1 = p1.cov_rot
    S2 = R1 @ p2.cov_rot @ R1.T
    A1 = bracket1(S1)
    A2 = bracket1(S2)
    B = bracket2(S1, S2)
    cov_rot = S1 + S2 + (A1 @ S2 + S2 @ A1.T + S1 @ A2 + S1 @ A2.T) / 12.0 + B / 4.0

    H = hat(R1 @ p2.translation)
    cov_trans = p1.cov_trans + R1 @ p2.cov_trans @ R1.T + H @ S1 @ H.T

    return NoisyPose(
        p1.mean @ p2.mean,
        repair_psd(cov_rot, "rotation covariance"),
        repair_psd(cov_trans, "translation covariance"),
    )


def propagate_chain(poses: Sequence[NoisyPose]) -> NoisyPose:
    """
    Compounds a chain of independent noisy poses from left to right,
    ``((P₁ ∘ P₂) ∘ P₃) ∘ ...``.

    Raises
    ------
    InsufficientDataError
        If ``poses`` is empty.
    """
    if not poses:
        raise InsufficientDataError("Cannot propagate an empty chain")
    return functools.reduce(compound_poses, poses)


def sample_chain(poses: Sequence[NoisyPose], samples: int, rng_seed: Seed) -> Tuple[np.ndarray, np.ndarray]:
    """
    Monte-Carlo covariance of a pose chain.

    Every pose is perturbed independently ``samples`` times, the chain is
    composed, and the perturbations of the result around the composed mean
    (``log(R·R̄ᵀ)`` and ``t − t̄``) are averaged as outer products.

    Returns
    -------
    cov_rot, cov_trans : ndarray
        Empirical 3x3 covariances.
    """
    if not poses:
        raise InsufficientDataError("Cannot sample an empty chain")
    if samples < 2:
        raise InsufficientDataError(f"At least 2 samples are required, got {samples}")
    rng = make_rng(rng_seed)
    R = np.broadcast_to(np.eye(3), (samples, 3, 3))
    t = np.zeros((samples, 3))
    mean = None
    for pose in poses:
        Ri = exp_so3(draw_gaussian(pose.cov_rot, rng, samples)) @ pose.rotation
        ti = draw_gaussian(pose.cov_trans, rng, samples) + pose.translation
        t = np.einsum("nij,nj->ni", R, ti) + t
        R = R @ Ri
        mean = pose.mean if mean is None else mean @ pose.mean
    xi_rot = log_so3(R @ mean.rotation.T)
    xi_trans = t - mean.translation
    return xi_rot.T @ xi_rot / samples, xi_trans.T @ xi_trans / samples
