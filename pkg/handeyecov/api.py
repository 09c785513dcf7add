# -*- coding: utf-8 -*-
#
# Copyright © HandEyeCov Project Contributors
# Licensed under the terms of the GNU GPLv3+ License
# (see handeyecov/__init__.py for details)

"""
# API

The following objects can be conveniently imported directly from
``handeyecov.api``:

## Poses

* [`DecoupledPose`][handeyecov.poses.DecoupledPose]
* [`NoisyPose`][handeyecov.poses.NoisyPose]
* [`MeasurementPair`][handeyecov.poses.MeasurementPair]
* [`MeasurementSet`][handeyecov.poses.MeasurementSet]

## Solvers

* [`solve_axxb()`][handeyecov.transsolve.solve_axxb]
* [`solve_rotation()`][handeyecov.rotsolve.solve_rotation]
* [`solve_translation()`][handeyecov.transsolve.solve_translation]
* [`closed_form_pose()`][handeyecov.transsolve.closed_form_pose]
* [`propagate_chain()`][handeyecov.compound.propagate_chain]

## Experiments

* [`SyntheticConfig`][handeyecov.datagen.SyntheticConfig]
* [`generate_dataset()`][handeyecov.datagen.generate_dataset]
* [`run_validation()`][handeyecov.experiments.run_validation]
* [`sweep_lambda()`][handeyecov.experiments.sweep_lambda]
* [`run_chain_validation()`][handeyecov.experiments.run_chain_validation]

## Files and Profiles

* [`read_dataset()`][handeyecov.files.read_dataset]
* [`write_dataset()`][handeyecov.files.write_dataset]
* [`load_profile()`][handeyecov.profiles.load_profile]
* [`save_profile()`][handeyecov.profiles.save_profile]

## Configuration Objects

* [`SolverSettings`][handeyecov.config.SolverSettings]
* [`ChainConfig`][handeyecov.experiments.ChainConfig]
* [`NoiseProfile`][handeyecov.profiles.NoiseProfile]
"""

from handeyecov import HANDEYECOV_CONFIG_DIR, HANDEYECOV_DATA_DIR
from handeyecov.compound import compound_poses, propagate_chain
from handeyecov.config import SolverSettings
from handeyecov.datagen import SyntheticConfig, generate_dataset, random_pose, relative_pairs
from handeyecov.experiments import ChainConfig, run_chain_validation, run_validation, sweep_lambda
from handeyecov.files import read_dataset, read_pose, read_result, write_dataset, write_pose, write_result
from handeyecov.poses import DecoupledPose, MeasurementPair, MeasurementSet, NoisyPose
from handeyecov.profiles import (
    NoiseProfile,
    load_default_profile,
    load_profile,
    save_default_profile,
    save_profile,
)
from handeyecov.rotsolve import solve_rotation
from handeyecov.transsolve import closed_form_pose, solve_axxb, solve_translation


__all__ = [
    "HANDEYECOV_CONFIG_DIR",
    "HANDEYECOV_DATA_DIR",
    "DecoupledPose",
    "NoisyPose",
    "MeasurementPair",
    "MeasurementSet",
    "solve_axxb",
    "solve_rotation",
    "solve_translation",
    "closed_form_pose",
    "compound_poses",
    "propagate_chain",
    "SyntheticConfig",
    "generate_dataset",
    "random_pose",
    "relative_pairs",
    "run_validation",
    "sweep_lambda",
    "ChainConfig",
    "run_chain_validation",
    "read_dataset",
    "write_dataset",
    "read_result",
    "write_result",
    "read_pose",
    "write_pose",
    "SolverSettings",
    "NoiseProfile",
    "load_profile",
    "save_profile",
    "load_default_profile",
    "save_default_profile",
]
