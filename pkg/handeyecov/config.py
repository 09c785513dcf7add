# -*- coding: utf-8 -*-
#
# Copyright © HandEyeCov Project Contributors
# Licensed under the terms of the GNU GPLv3+ License
# (see handeyecov/__init__.py for details)

"""
# Configuration

Numerical policy shared by the iterative solvers.

Because settings are implemented using Pydantic, environment variables
can be used to override the defaults, e.g.
``HANDEYECOV_SOLVER_MAX_ITERATIONS=200``.
"""

from pydantic import BaseSettings, validator


class SolverSettings(BaseSettings):
    """
    Convergence and regularization policy for the rotation and translation
    solvers.

    Attributes
    ----------
    tolerance : float
        The iteration stops when the infinity norm of the update vector
        falls below this value (default 1e-12).
    max_iterations : int
        Iteration budget before ``NoConvergenceError`` is raised
        (default 100).
    max_halvings : int
        Number of times a step that increases the weighted objective is
        halved before giving up on it (default 10).
    stall_tolerance : float
        When no halved step decreases the objective, the iterate is
        accepted as converged if the full update norm is below this value;
        the objective is then at its floating-point floor (default 1e-8).
    jitter : float
        Diagonal regularization added to rank-deficient input covariances
        before inversion (default 1e-15).
    condition_limit : float
        Largest admissible condition number of normal-equation blocks
        (default 1e12).
    """
    tolerance: float = 1e-12
    max_iterations: int = 100
    max_halvings: int = 10
    stall_tolerance: float = 1e-8
    jitter: float = 1e-15
    condition_limit: float = 1e12

    class Config:
        env_prefix = "HANDEYECOV_SOLVER_"

    @validator("tolerance", "stall_tolerance", "jitter", "condition_limit")
    def _positive(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("must be positive")
        return value

    @validator("max_iterations")
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be at least 1")
        return value

    @validator("max_halvings")
    def _non_negative(cls, value: int) -> int:
        if value < 0:
            raise ValueError("must be non-negative")
        return value
