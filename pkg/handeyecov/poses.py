# -*- coding: utf-8 -*-
#
# Copyright © HandEyeCov Project Contributors
# Licensed under the terms of the GNU GPLv3+ License
# (see handeyecov/__init__.py for details)

"""
# Poses

Rigid-body poses with decoupled rotation and translation, their noisy
counterparts, and the measurement sets consumed by the solvers.

## Examples

A hand-eye dataset is an ordered collection of (A, B) pairs:

```python
>>> X = DecoupledPose(exp_so3([0.1, 0.2, 0.3]), [0.1, 0.0, 0.2])
>>> pairs = MeasurementSet([MeasurementPair(NoisyPose.exact(A), NoisyPose.exact(B)) for A, B in motions])
>>> len(pairs)
30
```

Sets can be sliced, concatenated and stamped with shared covariances:

```python
>>> first = pairs[:10]
>>> both = first + pairs[20:]
>>> noisy = pairs.with_covariances(cov_RB=1e-5 * np.eye(3))
```
"""

from __future__ import annotations

import logging
from typing import Iterable, Iterator, List, NamedTuple, Optional, Sequence, Union

import numpy as np

from handeyecov.liegroup import validate_rotation
from handeyecov.noise import Seed, sample_noisy_pose, validate_cov3


log = logging.getLogger(__name__)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class DecoupledPose:
    """
    A rigid-body transformation stored as a rotation matrix and a
    translation vector.

    Poses are immutable. They compose like homogeneous transforms, so
    ``P1 @ P2`` maps a point first through ``P2`` and then ``P1``.

    Parameters
    ----------
    rotation : array_like
        A 3x3 rotation matrix. Matrices within 1e-6 of SO(3) are repaired.
    translation : array_like
        A 3-vector in meters.
    validate : bool, optional
        Skips rotation validation when False. Used internally where the
        rotation is known to be valid by construction.

    Raises
    ------
    InvalidRotationError
        If ``rotation`` is not a rotation matrix.
    """
    __slots__ = ("_rotation", "_translation")

    def __init__(self, rotation, translation, validate: bool = True) -> None:
        if validate:
            rotation = validate_rotation(rotation)
        else:
            rotation = np.array(rotation, dtype=float)
        translation = np.array(translation, dtype=float).reshape(-1)
        if translation.shape != (3,):
            raise ValueError(f"Translation must be a 3-vector, got shape {translation.shape}")
        self._rotation = _frozen(rotation)
        self._translation = _frozen(translation)

    @property
    def rotation(self) -> np.ndarray:
        """The 3x3 rotation matrix."""
        return self._rotation

    @property
    def translation(self) -> np.ndarray:
        """The translation vector."""
        return self._translation

    @classmethod
    def identity(cls) -> DecoupledPose:
        return cls(np.eye(3), np.zeros(3), validate=False)

    @classmethod
    def from_matrix(cls, T) -> DecoupledPose:
        """
        Builds a pose from a 4x4 homogeneous transformation matrix.
        """
        T = np.asarray(T, dtype=float)
        if T.shape != (4, 4):
            raise ValueError(f"Expected a 4x4 matrix, got shape {T.shape}")
        return cls(T[:3, :3], T[:3, 3])

    def as_matrix(self) -> np.ndarray:
        """The 4x4 homogeneous transformation matrix."""
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T

    def inverse(self) -> DecoupledPose:
        Rt = self.rotation.T
        return DecoupledPose(Rt, -Rt @ self.translation, validate=False)

    def compose(self, other: DecoupledPose) -> DecoupledPose:
        """
        ``(R₁R₂, R₁t₂ + t₁)``.
        """
        return DecoupledPose(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
            validate=False,
        )

    def __matmul__(self, other: DecoupledPose) -> DecoupledPose:
        if not isinstance(other, DecoupledPose):
            return NotImplemented
        return self.compose(other)

    def allclose(self, other: DecoupledPose, atol: float = 1e-9) -> bool:
        """
        True if both rotation (Frobenius) and translation (Euclidean) differ
        by at most ``atol``.
        """
        return bool(
            np.linalg.norm(self.rotation - other.rotation) <= atol
            and np.linalg.norm(self.translation - other.translation) <= atol
        )

    def __eq__(self, o: object) -> bool:
        if not isinstance(o, DecoupledPose):
            return False
        return bool(np.array_equal(self.rotation, o.rotation) and np.array_equal(self.translation, o.translation))

    def __hash__(self) -> int:
        return hash((self.rotation.tobytes(), self.translation.tobytes()))

    def __repr__(self) -> str:
        return f"DecoupledPose(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"


class NoisyPose:
    """
    A pose with independent Gaussian rotation and translation noise.

    Parameters
    ----------
    mean : DecoupledPose
        The mean pose.
    cov_rot : array_like, optional
        Covariance of the left rotation perturbation (rad²). Zero if omitted.
    cov_trans : array_like, optional
        Covariance of the translation perturbation (m²). Zero if omitted.

    Raises
    ------
    NonPSDError
        If a covariance is not symmetric positive-semidefinite.
    """
    __slots__ = ("_mean", "_cov_rot", "_cov_trans")

    def __init__(self, mean: DecoupledPose, cov_rot=None, cov_trans=None) -> None:
        if not isinstance(mean, DecoupledPose):
            raise TypeError(f"Expected a DecoupledPose mean, got {type(mean)}")
        self._mean = mean
        self._cov_rot = _frozen(validate_cov3(np.zeros((3, 3)) if cov_rot is None else cov_rot, "rotation covariance"))
        self._cov_trans = _frozen(
            validate_cov3(np.zeros((3, 3)) if cov_trans is None else cov_trans, "translation covariance")
        )

    @classmethod
    def exact(cls, pose: DecoupledPose) -> NoisyPose:
        """A noise-free pose."""
        return cls(pose)

    @property
    def mean(self) -> DecoupledPose:
        return self._mean

    @property
    def rotation(self) -> np.ndarray:
        return self._mean.rotation

    @property
    def translation(self) -> np.ndarray:
        return self._mean.translation

    @property
    def cov_rot(self) -> np.ndarray:
        return self._cov_rot

    @property
    def cov_trans(self) -> np.ndarray:
        return self._cov_trans

    def sample(self, rng_seed: Seed) -> DecoupledPose:
        """
        Draws a pose from this distribution (see ``sample_noisy_pose``).
        """
        return sample_noisy_pose(self._mean, self._cov_rot, self._cov_trans, rng_seed)

    def with_covariances(self, cov_rot=None, cov_trans=None) -> NoisyPose:
        """
        A copy with the given covariances replaced; ``None`` keeps the
        current one.
        """
        return NoisyPose(
            self._mean,
            self._cov_rot if cov_rot is None else cov_rot,
            self._cov_trans if cov_trans is None else cov_trans,
        )

    def __repr__(self) -> str:
        return (
            f"NoisyPose(mean={self._mean!r}, cov_rot={self._cov_rot.tolist()}, "
            f"cov_trans={self._cov_trans.tolist()})"
        )


class MeasurementPair(NamedTuple):
    """
    One hand-eye measurement: the motions A (robot) and B (camera), related
    through the unknown X by ``A·X = X·B``.

    Attributes
    ----------
    A : NoisyPose
        Motion of the end-effector.
    B : NoisyPose
        Motion of the camera.
    """
    A: NoisyPose
    B: NoisyPose


class MeasurementSet:
    """
    An ordered calibration dataset of ``MeasurementPair`` objects.

    MeasurementSets are indexable (by integer or slice), iterable and can be
    concatenated with ``+``. The stacked arrays used by the solvers are
    available as properties (``RA``, ``tA``, ``cov_RA``, ...), each with the
    pair index as the leading dimension.

    Parameters
    ----------
    pairs : iterable of MeasurementPair
        The measurements. Plain ``(A, B)`` tuples are accepted.
    """
    def __init__(self, pairs: Iterable[MeasurementPair] = ()) -> None:
        self._pairs: List[MeasurementPair] = []
        for pair in pairs:
            A, B = pair
            if not isinstance(A, NoisyPose) or not isinstance(B, NoisyPose):
                raise TypeError("Measurement pairs must hold NoisyPose objects")
            self._pairs.append(MeasurementPair(A, B))

    def __len__(self) -> int:
        return len(self._pairs)

    def __iter__(self) -> Iterator[MeasurementPair]:
        return iter(self._pairs)

    def __getitem__(self, key: Union[int, slice]) -> Union[MeasurementPair, MeasurementSet]:
        if isinstance(key, (int, np.integer)):
            return self._pairs[key]
        elif isinstance(key, slice):
            return MeasurementSet(self._pairs[key])
        else:
            raise TypeError(f"Invalid key type '{type(key)}'")

    def __add__(self, o: MeasurementSet) -> MeasurementSet:
        """
        Concatenates two sets. Neither operand is modified.
        """
        if isinstance(o, MeasurementSet):
            return MeasurementSet(self._pairs + o._pairs)
        else:
            raise TypeError(f"Cannot add {type(o)} to MeasurementSet")

    def __repr__(self) -> str:
        return f"MeasurementSet({len(self)} pairs)"

    def subset(self, indices: Sequence[int]) -> MeasurementSet:
        """
        A new set holding the pairs at ``indices``, in that order.
        """
        return MeasurementSet([self._pairs[int(i)] for i in indices])

    def with_covariances(
        self,
        cov_RA: Optional[np.ndarray] = None,
        cov_RB: Optional[np.ndarray] = None,
        cov_tA: Optional[np.ndarray] = None,
        cov_tB: Optional[np.ndarray] = None,
    ) -> MeasurementSet:
        """
        Stamps shared covariances on every pair, assuming all pairs follow
        the same noise distribution. ``None`` keeps the pairs' own values.

        Returns
        -------
        MeasurementSet
            A new set; this one is unchanged.
        """
        return MeasurementSet(
            MeasurementPair(
                pair.A.with_covariances(cov_RA, cov_tA),
                pair.B.with_covariances(cov_RB, cov_tB),
            )
            for pair in self._pairs
        )

    def _stack(self, which: str, attr: str) -> np.ndarray:
        if not self._pairs:
            return np.zeros((0, 3, 3) if attr != "translation" else (0, 3))
        return np.stack([getattr(getattr(pair, which), attr) for pair in self._pairs])

    @property
    def RA(self) -> np.ndarray:
        return self._stack("A", "rotation")

    @property
    def RB(self) -> np.ndarray:
        return self._stack("B", "rotation")

    @property
    def tA(self) -> np.ndarray:
        return self._stack("A", "translation")

    @property
    def tB(self) -> np.ndarray:
        return self._stack("B", "translation")

    @property
    def cov_RA(self) -> np.ndarray:
        return self._stack("A", "cov_rot")

    @property
    def cov_RB(self) -> np.ndarray:
        return self._stack("B", "cov_rot")

    @property
    def cov_tA(self) -> np.ndarray:
        return self._stack("A", "cov_trans")

    @property
    def cov_tB(self) -> np.ndarray:
        return self._stack("B", "cov_trans")
