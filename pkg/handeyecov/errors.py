# -*- coding: utf-8 -*-
#
# Copyright © HandEyeCov Project Contributors
# Licensed under the terms of the GNU GPLv3+ License
# (see handeyecov/__init__.py for details)

"""
# Errors

Custom errors for HandEyeCov.
"""

from typing import Optional, Union
from pathlib import Path


class HandEyeCovError(Exception):
    """
    Base class for all HandEyeCov errors.
    """
    pass


class NonSkewError(HandEyeCovError):
    """
    Raised when a matrix passed to ``vee`` is not skew-symmetric.
    """
    pass


class NearSingularError(HandEyeCovError):
    """
    Raised when the left Jacobian of SO(3) is evaluated too close to a
    rotation angle of 2π, where it cannot be inverted.
    """
    pass


class InvalidRotationError(HandEyeCovError):
    """
    Raised when a matrix is too far from SO(3) to be repaired.
    """
    pass


class NonPSDError(HandEyeCovError):
    """
    Raised when a covariance matrix is not symmetric positive-semidefinite.
    """
    pass


class DimensionMismatchError(HandEyeCovError, ValueError):
    """
    Raised when matrix dimensions do not conform.
    """
    pass


class RankDeficientError(HandEyeCovError):
    """
    Raised when a normal matrix or Schur complement is (numerically)
    singular.
    """
    pass


class SingularBlockError(RankDeficientError):
    """
    Raised when a per-measurement block of the normal equations is
    ill-conditioned.
    """
    pass


class DegenerateMotionError(RankDeficientError):
    """
    Raised when the rotation axes of the motions are (nearly) parallel and
    the hand-eye rotation is not observable.
    """
    pass


class NoConvergenceError(HandEyeCovError):
    """
    Raised when an iterative solver exhausts its iteration budget.
    """
    pass


class LogBranchAmbiguityError(HandEyeCovError):
    """
    Raised when rotations are too far apart to be averaged in the
    logarithm chart.
    """
    pass


class ZeroCovarianceError(HandEyeCovError, ZeroDivisionError):
    """
    Raised when a relative covariance metric is normalized by a zero matrix.
    """
    pass


class InsufficientDataError(HandEyeCovError, ValueError):
    """
    Raised when too few measurements or datasets are supplied.
    """
    pass


class DatasetFileError(HandEyeCovError):
    """
    Raised when a dataset, result or pose file cannot be parsed or fails
    validation.

    Parameters
    ----------
    message : str
        Description of the problem.
    path : str or Path, optional
        The offending file.
    line : int, optional
        1-based line number of the offending record.
    """
    def __init__(self, message: str, path: Optional[Union[str, Path]] = None, line: Optional[int] = None) -> None:
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(location + message)
