# -*- coding: utf-8 -*-
#
# Copyright © HandEyeCov Project Contributors
# Licensed under the terms of the GNU GPLv3+ License
# (see handeyecov/__init__.py for details)

"""
# Profiles

An API for storing and loading named noise profiles: the four shared
measurement covariances (Σ_RA, Σ_RB, Σ_tA, Σ_tB) of a calibration setup.

Profiles are useful when the same robot and camera are calibrated many
times. The covariances can be estimated once from a large collected
dataset (see ``handeyecov.datagen.estimate_B_noise``), saved under a name,
and then supplied to every calibration whose dataset does not carry
per-pair covariances.

Profiles are stored as JSON files in the ``profiles`` directory of the
per-user data directory.
"""

import logging
from pathlib import Path
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, conlist, validator

from handeyecov import HANDEYECOV_DATA_DIR
from handeyecov.errors import HandEyeCovError
from handeyecov.noise import validate_cov3


log = logging.getLogger(__name__)


PROFILES_DIR = HANDEYECOV_DATA_DIR / "profiles"

_REGISTRY_NAME = "_registry.json"


class NoiseProfile(BaseModel):
    """
    Shared measurement covariances, each stored as 9 reals in row-major
    order.

    Attributes
    ----------
    cov_RA, cov_RB, cov_tA, cov_tB : list of float
        Covariances of the rotation and translation parts of A and B.
    description : str
        Free-form note, e.g. where the covariances came from.
    """
    cov_RA: conlist(float, min_items=9, max_items=9)
    cov_RB: conlist(float, min_items=9, max_items=9)
    cov_tA: conlist(float, min_items=9, max_items=9)
    cov_tB: conlist(float, min_items=9, max_items=9)
    description: str = ""

    @validator("cov_RA", "cov_RB", "cov_tA", "cov_tB")
    def _psd(cls, value, field):
        try:
            validate_cov3(np.array(value, dtype=float).reshape(3, 3), field.name)
        except HandEyeCovError as exc:
            raise ValueError(str(exc)) from exc
        return value

    @classmethod
    def from_covariances(cls, cov_RA, cov_RB, cov_tA, cov_tB, description: str = "") -> "NoiseProfile":
        """Builds a profile from 3x3 arrays."""
        def flat(m):
            return [float(x) for x in np.asarray(m, dtype=float).reshape(-1)]

        return cls(
            cov_RA=flat(cov_RA),
            cov_RB=flat(cov_RB),
            cov_tA=flat(cov_tA),
            cov_tB=flat(cov_tB),
            description=description,
        )

    def covariances(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """
        The covariances as 3x3 arrays, in the order accepted by
        ``MeasurementSet.with_covariances``: ``(Σ_RA, Σ_RB, Σ_tA, Σ_tB)``.
        """
        return tuple(
            np.array(c, dtype=float).reshape(3, 3)
            for c in (self.cov_RA, self.cov_RB, self.cov_tA, self.cov_tB)
        )

    def save(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w") as f:
            f.write(self.json())


class _ProfileRegistry(BaseModel):
    """
    Records which profile is the default. HandEyeCov internal object.
    """
    default: str = ""

    @classmethod
    def load(cls) -> "_ProfileRegistry":
        try:
            return cls.parse_file(PROFILES_DIR / _REGISTRY_NAME)
        except FileNotFoundError:
            return cls()

    def save(self) -> None:
        PROFILES_DIR.mkdir(parents=True, exist_ok=True)
        with (PROFILES_DIR / _REGISTRY_NAME).open("w") as f:
            f.write(self.json())


def _profile_path(name: str) -> Path:
    if name.startswith("_"):
        raise ValueError("Names cannot begin with an underscore.")
    return PROFILES_DIR / f"{name}.json"


def known_profiles() -> List[str]:
    """
    Returns a list of known noise profiles.

    Returns
    -------
    List[str]
        Profile names, sorted.
    """
    if not PROFILES_DIR.is_dir():
        return []
    return sorted(
        profile.stem
        for profile in PROFILES_DIR.glob("*.json")
        if not profile.name.startswith("_")
    )


def save_profile(name: str, profile: NoiseProfile) -> None:
    """
    Saves a new noise profile.

    Names cannot begin with an underscore.

    Parameters
    ----------
    name : str
        The name of the profile.
    profile : NoiseProfile
        The covariances to save.

    Raises
    ------
    ValueError
        If the name is invalid or already in use. To overwrite an existing
        profile, use ``update_profile``.
    """
    path = _profile_path(name)
    if path.is_file():
        raise ValueError(f"Profile '{name}' already exists.")
    profile.save(path)
    log.info(f"Saved noise profile '{name}'")


def update_profile(name: str, profile: NoiseProfile) -> None:
    """
    Saves a noise profile, overwriting any existing profile of that name.

    Raises
    ------
    ValueError
        If the name is invalid.
    """
    profile.save(_profile_path(name))
    log.info(f"Updated noise profile '{name}'")


def load_profile(name: str) -> NoiseProfile:
    """
    Loads a noise profile.

    Parameters
    ----------
    name : str
        The name of the profile to load.

    Raises
    ------
    ValueError
        If the profile does not exist.
    """
    path = _profile_path(name)
    if path.is_file():
        return NoiseProfile.parse_file(path)
    else:
        raise ValueError(f"Profile '{name}' does not exist.")


def delete_profile(name: str) -> None:
    """
    Deletes a noise profile. If it was the default, the default is cleared.

    Raises
    ------
    ValueError
        If the profile does not exist.
    """
    path = _profile_path(name)
    if path.is_file():
        path.unlink()
    else:
        raise ValueError(f"Profile '{name}' does not exist.")
    registry = _ProfileRegistry.load()
    if registry.default == name:
        registry.default = ""
        registry.save()


def load_default_profile() -> NoiseProfile:
    """
    Loads the default noise profile.

    Raises
    ------
    ValueError
        If no default profile has been set.
    """
    default = _ProfileRegistry.load().default
    if default:
        return load_profile(default)
    else:
        raise ValueError("Default noise profile not configured.")


def save_default_profile(name: str, profile: NoiseProfile) -> None:
    """
    Saves (or overwrites) a named profile and makes it the default.
    """
    update_profile(name, profile)
    registry = _ProfileRegistry.load()
    registry.default = name
    registry.save()
