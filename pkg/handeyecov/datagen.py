# -*- coding: utf-8 -*-
#
# Copyright © HandEyeCov Project Contributors
# Licensed under the terms of the GNU GPLv3+ License
# (see handeyecov/__init__.py for details)

"""
# Data Generation

Synthetic hand-eye datasets, relative motions from absolute pose
sequences, and the empirical noise estimation procedure for collected
data.

## Examples

Generate a noisy dataset around a random hand-eye transformation:

```python
>>> X = random_pose(7)
>>> config = SyntheticConfig(lam=1e-5, k=30, seed=3)
>>> pairs = generate_dataset(config, X)
```

Estimate the camera noise of a collected dataset, assuming the robot noise
is negligible:

```python
>>> cov_RB, cov_tB = estimate_B_noise(collected, M=400, k=30, seed=0)
```

The same for the camera-to-object poses of a fixed object, from
synchronized robot and camera pose sequences:

```python
>>> cov_rot, cov_trans = estimate_object_noise(base_to_ee, cam_to_obj, M=400, k=30)
```
"""

import logging
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseSettings, validator
from scipy.spatial.distance import pdist

from handeyecov.errors import InsufficientDataError, LogBranchAmbiguityError, NonPSDError
from handeyecov.liegroup import exp_so3, log_so3
from handeyecov.noise import Seed, draw_gaussian, make_rng, validate_cov3
from handeyecov.poses import DecoupledPose, MeasurementPair, MeasurementSet, NoisyPose
from handeyecov.transsolve import closed_form_pose


log = logging.getLogger(__name__)


MIN_ANGLE = 0.1
MAX_ANGLE = np.pi - 0.1


class SyntheticConfig(BaseSettings):
    """
    Configuration of synthetic hand-eye datasets.

    All input covariances are ``lam`` times a base covariance. The defaults
    reproduce the standard validation setup: λ = 1e-5, k = 30 pairs per
    dataset and M = 1000 datasets.

    Because settings are implemented using Pydantic, environment variables
    prefixed ``HANDEYECOV_SYNTH_`` can be used to override the defaults.

    Attributes
    ----------
    lam : float
        The noise scale λ (default 1e-5). Zero gives exact data.
    k : int
        Pairs per dataset (default 30).
    M : int
        Number of datasets in a Monte-Carlo run (default 1000).
    seed : int
        Master seed; dataset ``m`` uses ``seed + m``.
    cov_RA, cov_RB, cov_tA, cov_tB : list of list of float
        Base covariances of the rotation and translation noise of A and B.
    """
    lam: float = 1e-5
    k: int = 30
    M: int = 1000
    seed: int = 0
    cov_RA: List[List[float]] = np.diag([0.5, 0.2, 0.3]).tolist()
    cov_RB: List[List[float]] = np.diag([0.7, 0.2, 0.8]).tolist()
    cov_tA: List[List[float]] = np.diag([0.1, 0.2, 0.5]).tolist()
    cov_tB: List[List[float]] = np.diag([0.7, 0.8, 0.1]).tolist()

    class Config:
        env_prefix = "HANDEYECOV_SYNTH_"

    @validator("lam")
    def _non_negative(cls, value: float) -> float:
        if not np.isfinite(value) or value < 0:
            raise ValueError("must be a non-negative number")
        return value

    @validator("k", "M")
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be at least 1")
        return value

    @validator("cov_RA", "cov_RB", "cov_tA", "cov_tB")
    def _psd(cls, value, field):
        try:
            validate_cov3(value, field.name)
        except (NonPSDError, ValueError) as exc:
            raise ValueError(str(exc)) from exc
        return value

    def covariances(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """
        The λ-scaled covariances ``(Σ_RA, Σ_RB, Σ_tA, Σ_tB)``.
        """
        return tuple(self.lam * np.array(c, dtype=float) for c in (self.cov_RA, self.cov_RB, self.cov_tA, self.cov_tB))


def _random_rotation(rng: np.random.Generator, low: float = MIN_ANGLE, high: float = MAX_ANGLE) -> np.ndarray:
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    return exp_so3(rng.uniform(low, high) * axis)


def random_pose(rng_seed: Seed) -> DecoupledPose:
    """
    A random rigid transformation: uniform axis on the sphere, angle
    uniform in [0.1, π − 0.1], translation uniform in [-1, 1]³ meters.
    """
    rng = make_rng(rng_seed)
    R = _random_rotation(rng)
    return DecoupledPose(R, rng.uniform(-1.0, 1.0, 3), validate=False)


def generate_true_pair(X_true: DecoupledPose, rng_seed: Seed) -> Tuple[DecoupledPose, DecoupledPose]:
    """
    A random noise-free pair with ``Ā·X̄ = X̄·B̄``.

    Ā is drawn by ``random_pose``; ``B̄ = X̄⁻¹·Ā·X̄``.
    """
    A = random_pose(rng_seed)
    return A, X_true.inverse() @ A @ X_true


def generate_dataset(config: SyntheticConfig, X_true: DecoupledPose, seed: Optional[Seed] = None) -> MeasurementSet:
    """
    ``config.k`` noisy pairs around random pairs consistent with X_true.

    Each pair carries the λ-scaled covariances its noise was drawn from.

    Parameters
    ----------
    config : SyntheticConfig
        Noise and size configuration.
    X_true : DecoupledPose
        The true hand-eye transformation.
    seed : int or Generator, optional
        Overrides ``config.seed``.

    Returns
    -------
    MeasurementSet
    """
    rng = make_rng(config.seed if seed is None else seed)
    cov_RA, cov_RB, cov_tA, cov_tB = config.covariances()
    k = config.k
    truths = [generate_true_pair(X_true, rng) for _ in range(k)]
    xi_RA = draw_gaussian(cov_RA, rng, k)
    xi_tA = draw_gaussian(cov_tA, rng, k)
    xi_RB = draw_gaussian(cov_RB, rng, k)
    xi_tB = draw_gaussian(cov_tB, rng, k)
    RA = exp_so3(xi_RA) @ np.stack([A.rotation for A, _ in truths])
    RB = exp_so3(xi_RB) @ np.stack([B.rotation for _, B in truths])
    tA = xi_tA + np.stack([A.translation for A, _ in truths])
    tB = xi_tB + np.stack([B.translation for _, B in truths])
    return MeasurementSet(
        MeasurementPair(
            NoisyPose(DecoupledPose(RA[i], tA[i], validate=False), cov_RA, cov_tA),
            NoisyPose(DecoupledPose(RB[i], tB[i], validate=False), cov_RB, cov_tB),
        )
        for i in range(k)
    )


def relative_pairs(
    base_to_ee: Sequence[DecoupledPose],
    cam_to_obj: Sequence[DecoupledPose],
    mode: str = "handeye",
    all_pairs: bool = False,
) -> MeasurementSet:
    """
    Builds motion pairs from synchronized absolute poses.

    Parameters
    ----------
    base_to_ee : sequence of DecoupledPose
        Robot base to end-effector poses, ``bTe_i``.
    cam_to_obj : sequence of DecoupledPose
        Camera to object poses, ``cTo_i``.
    mode : str, optional
        ``"handeye"`` for pairs with ``A·X = X·B`` where X = eTc:
        ``A = bTe_q⁻¹·bTe_p``, ``B = cTo_q·cTo_p⁻¹``. ``"object"`` for
        pairs with ``A'·Y = Y·B'`` where Y = bTo:
        ``A' = bTe_p·bTe_q⁻¹``, ``B' = cTo_p⁻¹·cTo_q``.
    all_pairs : bool, optional
        Use every (p, q) with p < q instead of consecutive poses.

    Returns
    -------
    MeasurementSet
        Noise-free pairs; stamp covariances with ``with_covariances``.
    """
    if len(base_to_ee) != len(cam_to_obj):
        raise ValueError(f"Pose sequences differ in length ({len(base_to_ee)} != {len(cam_to_obj)})")
    n = len(base_to_ee)
    indices = list(combinations(range(n), 2)) if all_pairs else [(i, i + 1) for i in range(n - 1)]
    pairs = []
    for p, q in indices:
        if mode == "handeye":
            A = base_to_ee[q].inverse() @ base_to_ee[p]
            B = cam_to_obj[q] @ cam_to_obj[p].inverse()
        elif mode == "object":
            A = base_to_ee[p] @ base_to_ee[q].inverse()
            B = cam_to_obj[p].inverse() @ cam_to_obj[q]
        else:
            raise ValueError(f"Unknown mode '{mode}' (expected 'handeye' or 'object')")
        pairs.append(MeasurementPair(NoisyPose.exact(A), NoisyPose.exact(B)))
    return MeasurementSet(pairs)


def resample_datasets(pairs: MeasurementSet, M: int, k: int, seed: Seed) -> List[MeasurementSet]:
    """
    Draws M datasets of k distinct pairs each from a larger collection.

    Raises
    ------
    InsufficientDataError
        If the collection holds fewer than k pairs.
    """
    if k > len(pairs):
        raise InsufficientDataError(f"Cannot draw {k} pairs from a collection of {len(pairs)}")
    rng = make_rng(seed)
    return [pairs.subset(rng.choice(len(pairs), size=k, replace=False)) for _ in range(M)]


def _warn_if_biased(errors: np.ndarray, name: str) -> None:
    n = len(errors)
    if n < 2:
        return
    mean = errors.mean(axis=0)
    stderr = errors.std(axis=0, ddof=1) / np.sqrt(n)
    if np.any(np.abs(mean) > 3.0 * stderr):
        log.warning(
            f"{name} errors have a nonzero mean {mean.tolist()}; the reference transformation may be biased"
        )


def _error_covariance(Rs: np.ndarray, ts: np.ndarray, truths: Sequence[DecoupledPose]) -> Tuple[np.ndarray, np.ndarray]:
    R_bar = np.stack([T.rotation for T in truths])
    t_bar = np.stack([T.translation for T in truths])
    xi_rot = log_so3(Rs @ np.swapaxes(R_bar, -1, -2))
    xi_trans = ts - t_bar
    _warn_if_biased(xi_rot, "Rotation")
    _warn_if_biased(xi_trans, "Translation")
    n = len(truths)
    return xi_rot.T @ xi_rot / n, xi_trans.T @ xi_trans / n


def empirical_B_covariance(pairs: MeasurementSet, X_ref: DecoupledPose) -> Tuple[np.ndarray, np.ndarray]:
    """
    Noise covariances of the B measurements against a reference X.

    The ground truth of each camera motion is ``B̄_i = X⁻¹·A_i·X``; the
    errors ``log(R_Bi·R̄_Biᵀ)`` and ``t_Bi − t̄_Bi`` are averaged as outer
    products over all pairs, which are assumed to share one noise
    distribution. A warning is logged when the errors have a significant
    mean.

    Returns
    -------
    cov_RB, cov_tB : ndarray
    """
    if len(pairs) == 0:
        raise InsufficientDataError("No measurement pairs given")
    X_inv = X_ref.inverse()
    return _error_covariance(pairs.RB, pairs.tB, [X_inv @ pair.A.mean @ X_ref for pair in pairs])


def average_solution(solutions: Sequence[DecoupledPose]) -> DecoupledPose:
    """
    Averages poses in the logarithm chart:
    ``R = exp(mean(log R_m))`` and ``t = mean(t_m)``.

    Raises
    ------
    InsufficientDataError
        If ``solutions`` is empty.
    LogBranchAmbiguityError
        If two rotations are more than π/2 apart, or their logarithms lie
        on opposite sides of the π branch cut.
    """
    if not solutions:
        raise InsufficientDataError("No solutions to average")
    Rs = np.stack([s.rotation for s in solutions])
    # cos of the relative angle is (tr(R_i R_jᵀ) − 1)/2
    traces = np.einsum("iab,jab->ij", Rs, Rs)
    if np.any(traces < 1.0 - 1e-12):
        raise LogBranchAmbiguityError("Solutions differ by more than π/2; log averaging is unsafe")
    logs = log_so3(Rs)
    if len(logs) > 1 and np.max(pdist(logs)) > np.pi:
        raise LogBranchAmbiguityError("Solution logarithms straddle the π branch cut")
    t = np.mean([s.translation for s in solutions], axis=0)
    return DecoupledPose(exp_so3(logs.mean(axis=0)), t, validate=False)


def _averaged_reference(pairs: MeasurementSet, M: int, k: int, seed: Seed) -> DecoupledPose:
    datasets = resample_datasets(pairs, M, min(k, len(pairs)), seed)
    reference = average_solution([closed_form_pose(d) for d in datasets])
    log.info(f"Reference transformation averaged over {M} resampled datasets")
    return reference


def estimate_B_noise(
    pairs: MeasurementSet,
    M: int = 400,
    k: int = 30,
    seed: Seed = 0,
    X_ref: Optional[DecoupledPose] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Empirical camera noise of a collected dataset.

    Without a reference, X is estimated by averaging closed-form solutions
    of M resampled datasets of k pairs (``average_solution``); the noise
    covariances then follow from ``empirical_B_covariance``.

    Returns
    -------
    cov_RB, cov_tB : ndarray
    """
    if X_ref is None:
        X_ref = _averaged_reference(pairs, M, k, seed)
    return empirical_B_covariance(pairs, X_ref)


def empirical_object_covariance(
    base_to_ee: Sequence[DecoupledPose],
    cam_to_obj: Sequence[DecoupledPose],
    X_ref: DecoupledPose,
    Y_ref: DecoupledPose,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Noise covariances of the camera-to-object poses ``cTo_i`` against
    references X = eTc and Y = bTo.

    With the object fixed, ``Y = bTe_i·X·cTo_i``, so the ground truth of
    each observation is ``X⁻¹·bTe_i⁻¹·Y``. The robot poses are taken as
    exact. Errors are averaged as in ``empirical_B_covariance``.

    Returns
    -------
    cov_rot, cov_trans : ndarray

    Raises
    ------
    InsufficientDataError
        If no poses are given.
    """
    if len(base_to_ee) != len(cam_to_obj):
        raise ValueError(f"Pose sequences differ in length ({len(base_to_ee)} != {len(cam_to_obj)})")
    if not cam_to_obj:
        raise InsufficientDataError("No camera-to-object poses given")
    X_inv = X_ref.inverse()
    truths = [X_inv @ bTe.inverse() @ Y_ref for bTe in base_to_ee]
    Rs = np.stack([T.rotation for T in cam_to_obj])
    ts = np.stack([T.translation for T in cam_to_obj])
    return _error_covariance(Rs, ts, truths)


def estimate_object_noise(
    base_to_ee: Sequence[DecoupledPose],
    cam_to_obj: Sequence[DecoupledPose],
    M: int = 400,
    k: int = 30,
    seed: Seed = 0,
    X_ref: Optional[DecoupledPose] = None,
    Y_ref: Optional[DecoupledPose] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Empirical noise of the camera-to-object poses of a collected sequence.

    Missing references are averaged closed-form solutions over M resampled
    datasets of k motion pairs: X from the hand-eye pairs and Y from the
    object pairs built by ``relative_pairs``.

    Returns
    -------
    cov_rot, cov_trans : ndarray
    """
    if X_ref is None:
        X_ref = _averaged_reference(relative_pairs(base_to_ee, cam_to_obj, "handeye"), M, k, seed)
    if Y_ref is None:
        Y_ref = _averaged_reference(relative_pairs(base_to_ee, cam_to_obj, "object"), M, k, seed)
    return empirical_object_covariance(base_to_ee, cam_to_obj, X_ref, Y_ref)
