# -*- coding: utf-8 -*-
#
# Copyright © HandEyeCov Project Contributors
# Licensed under the terms of the GNU GPLv3+ License
# (see handeyecov/__init__.py for details)

"""
# Experiments

Monte-Carlo validation of the predicted covariances.

The covariance of X is evaluated two ways. The *predicted* covariance is
the one returned by the solvers for a single dataset. The *Monte-Carlo*
covariance is the spread of the solutions of M independently perturbed
datasets around the known truth. The relative Frobenius distance ε
between the two measures the quality of the prediction.

Using this module, you can

* validate the hand-eye covariances at one noise level, or sweep λ
* compare against the closed-form estimator's Monte-Carlo spread
* validate the object-pose covariance of ``Y = bTe · X · cTo``

Datasets are independent: dataset ``m`` is generated from seed
``seed + m``, so serial and threaded runs give identical reports.
"""

import concurrent.futures
import logging
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, TypeVar

import numpy as np
from pydantic import BaseSettings, validator

from handeyecov.compound import propagate_chain
from handeyecov.config import SolverSettings
from handeyecov.datagen import SyntheticConfig, generate_dataset, random_pose
from handeyecov.errors import InsufficientDataError, ZeroCovarianceError
from handeyecov.liegroup import log_so3
from handeyecov.noise import make_rng
from handeyecov.poses import DecoupledPose, NoisyPose
from handeyecov.transsolve import closed_form_pose, solution_pose, solve_axxb


log = logging.getLogger(__name__)

T = TypeVar("T")


class McReport(NamedTuple):
    """
    Comparison of predicted and Monte-Carlo covariances.

    Attributes
    ----------
    cov_rot_mc, cov_trans_mc : ndarray
        Monte-Carlo covariances.
    cov_rot_pred, cov_trans_pred : ndarray
        Predicted covariances, from the first dataset.
    eps_rot, eps_trans : float
        Relative Frobenius error of the predictions. NaN when the metric is
        degenerate.
    lam : float
        Noise scale of the run.
    M, k, seed : int
        Number of datasets, pairs per dataset and master seed.
    degenerate : bool
        True when the Monte-Carlo covariance vanishes (exact data) and ε is
        undefined.
    pred_spread_rot, pred_spread_trans : float
        Largest relative Frobenius deviation of any dataset's predicted
        covariance from the first one.
    cov_rot_baseline, cov_trans_baseline : ndarray or None
        Monte-Carlo covariances of the closed-form estimator, when requested.
    """
    cov_rot_mc: np.ndarray
    cov_trans_mc: np.ndarray
    cov_rot_pred: np.ndarray
    cov_trans_pred: np.ndarray
    eps_rot: float
    eps_trans: float
    lam: float = float("nan")
    M: int = 0
    k: int = 0
    seed: int = 0
    degenerate: bool = False
    pred_spread_rot: float = 0.0
    pred_spread_trans: float = 0.0
    cov_rot_baseline: Optional[np.ndarray] = None
    cov_trans_baseline: Optional[np.ndarray] = None


def mc_covariance(estimates: Sequence[DecoupledPose], truth: DecoupledPose) -> Tuple[np.ndarray, np.ndarray]:
    """
    Monte-Carlo covariances of estimates around a known truth,
    ``(1/M)·Σ ξ_m ξ_mᵀ`` with ``ξ_R = log(R̂_m·R̄ᵀ)`` and ``ξ_t = t̂_m − t̄``.

    The errors are not re-centered on their sample mean.

    Raises
    ------
    InsufficientDataError
        With fewer than two estimates.
    """
    M = len(estimates)
    if M < 2:
        raise InsufficientDataError(f"At least 2 estimates are required, got {M}")
    Rs = np.stack([e.rotation for e in estimates])
    ts = np.stack([e.translation for e in estimates])
    xi_rot = log_so3(Rs @ truth.rotation.T)
    xi_trans = ts - truth.translation
    return xi_rot.T @ xi_rot / M, xi_trans.T @ xi_trans / M


def eps_metric(pred: np.ndarray, mc: np.ndarray) -> float:
    """
    ``‖pred − mc‖_F / ‖mc‖_F``.

    Raises
    ------
    ZeroCovarianceError
        If ``mc`` is the zero matrix.
    """
    pred = np.asarray(pred, dtype=float)
    mc = np.asarray(mc, dtype=float)
    norm = np.linalg.norm(mc)
    if norm == 0.0:
        raise ZeroCovarianceError("Cannot normalize by a zero Monte-Carlo covariance")
    return float(np.linalg.norm(pred - mc) / norm)


def _run_datasets(job: Callable[[int], T], M: int, workers: int) -> List[T]:
    """
    Runs ``job(m)`` for m in range(M), keeping the results in dataset order.
    """
    if workers <= 1:
        return [job(m) for m in range(M)]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(job, m) for m in range(M)]
        results = []
        for m, future in enumerate(futures):
            try:
                results.append(future.result())
            except Exception as exc:
                log.exception(f"Dataset {m} failed: {exc}")
                raise
        return results


def _spread(covs: Sequence[np.ndarray]) -> float:
    ref = covs[0]
    norm = np.linalg.norm(ref)
    if norm == 0.0:
        return 0.0
    return float(max(np.linalg.norm(c - ref) for c in covs) / norm)


def run_validation(
    config: SyntheticConfig,
    X_true: DecoupledPose,
    workers: int = 1,
    baseline: bool = False,
    settings: Optional[SolverSettings] = None,
) -> McReport:
    """
    Validates predicted hand-eye covariances against Monte-Carlo.

    Parameters
    ----------
    config : SyntheticConfig
        Noise level, dataset size and count, master seed.
    X_true : DecoupledPose
        The true hand-eye transformation.
    workers : int, optional
        Number of threads solving datasets concurrently (default 1).
    baseline : bool, optional
        Also solve every dataset with the closed-form estimator and report
        its Monte-Carlo covariances.
    settings : SolverSettings, optional
        Convergence policy of the solvers.

    Returns
    -------
    McReport

    Raises
    ------
    InsufficientDataError
        If ``config.M`` is below 2.
    """
    if config.M < 2:
        raise InsufficientDataError(f"Monte-Carlo validation needs M >= 2, got {config.M}")
    settings = settings or SolverSettings()

    def job(m: int):
        pairs = generate_dataset(config, X_true, seed=config.seed + m)
        rot, trans = solve_axxb(pairs, settings)
        closed = closed_form_pose(pairs) if baseline else None
        return DecoupledPose(rot.rotation, trans.translation, validate=False), rot.cov_rot, trans.cov_trans, closed

    log.info(f"Validating at λ={config.lam:g} over M={config.M} datasets of k={config.k} pairs")
    results = _run_datasets(job, config.M, workers)
    estimates = [r[0] for r in results]
    cov_rot_mc, cov_trans_mc = mc_covariance(estimates, X_true)
    cov_rot_pred, cov_trans_pred = results[0][1], results[0][2]

    degenerate = config.lam == 0.0
    eps_rot = eps_trans = float("nan")
    if not degenerate:
        try:
            eps_rot = eps_metric(cov_rot_pred, cov_rot_mc)
            eps_trans = eps_metric(cov_trans_pred, cov_trans_mc)
        except ZeroCovarianceError:
            degenerate = True
    if degenerate:
        log.warning("Monte-Carlo covariances vanish (exact data); the ε metric is undefined")

    cov_rot_base = cov_trans_base = None
    if baseline:
        cov_rot_base, cov_trans_base = mc_covariance([r[3] for r in results], X_true)

    report = McReport(
        cov_rot_mc,
        cov_trans_mc,
        cov_rot_pred,
        cov_trans_pred,
        eps_rot,
        eps_trans,
        lam=config.lam,
        M=config.M,
        k=config.k,
        seed=config.seed,
        degenerate=degenerate,
        pred_spread_rot=_spread([r[1] for r in results]),
        pred_spread_trans=_spread([r[2] for r in results]),
        cov_rot_baseline=cov_rot_base,
        cov_trans_baseline=cov_trans_base,
    )
    log.info(f"λ={config.lam:g}: eps_rot={eps_rot:.4f}, eps_trans={eps_trans:.4f}")
    return report


def sweep_lambda(
    lambdas: Sequence[float],
    config: SyntheticConfig,
    X_true: DecoupledPose,
    workers: int = 1,
    settings: Optional[SolverSettings] = None,
) -> List[McReport]:
    """
    Runs ``run_validation`` at each noise scale, all else equal.
    """
    return [
        run_validation(SyntheticConfig(**{**config.dict(), "lam": lam}), X_true, workers=workers, settings=settings)
        for lam in lambdas
    ]


class ChainConfig(BaseSettings):
    """
    Configuration of the object-pose experiment, ``Y = bTe · X · cTo``.

    X is estimated from synthetic hand-eye data at noise scale ``lam``.
    The robot pose bTe and the observed object pose cTo carry covariances
    ``pose_lam`` times their base covariances.

    Attributes
    ----------
    lam : float
        Hand-eye data noise scale (default 1e-5).
    pose_lam : float
        Noise scale of bTe and cTo (default 1e-5).
    k : int
        Pairs per hand-eye dataset (default 30).
    M : int
        Number of datasets (default 400).
    seed : int
        Master seed.
    cov_R_be, cov_t_be, cov_R_co, cov_t_co : list of list of float
        Base covariances of bTe and cTo.
    """
    lam: float = 1e-5
    pose_lam: float = 1e-5
    k: int = 30
    M: int = 400
    seed: int = 0
    cov_R_be: List[List[float]] = np.diag([0.2, 0.3, 0.1]).tolist()
    cov_t_be: List[List[float]] = np.diag([0.3, 0.1, 0.2]).tolist()
    cov_R_co: List[List[float]] = np.diag([0.5, 0.4, 0.6]).tolist()
    cov_t_co: List[List[float]] = np.diag([0.4, 0.6, 0.5]).tolist()

    class Config:
        env_prefix = "HANDEYECOV_CHAIN_"

    @validator("lam", "pose_lam")
    def _non_negative(cls, value: float) -> float:
        if value < 0:
            raise ValueError("must be non-negative")
        return value

    @validator("M")
    def _at_least_two(cls, value: int) -> int:
        if value < 2:
            raise ValueError("must be at least 2")
        return value

    def handeye(self) -> SyntheticConfig:
        """The configuration of the hand-eye datasets."""
        return SyntheticConfig(lam=self.lam, k=self.k, M=self.M, seed=self.seed)


def run_chain_validation(
    config: ChainConfig,
    X_true: Optional[DecoupledPose] = None,
    workers: int = 1,
    settings: Optional[SolverSettings] = None,
) -> McReport:
    """
    Validates the propagated covariance of ``Y = bTe · X · cTo``.

    For every dataset m, X̂_m is solved from synthetic hand-eye data and
    noisy draws of bTe and cTo give ``Y_m = bTe_m · X̂_m · cTo_m``. The
    Monte-Carlo covariance of the Y_m around the true Y is compared with
    ``propagate_chain([bTe, X̂, cTo])`` using the first dataset's X̂.

    Returns
    -------
    McReport
        With the covariances of Y.
    """
    settings = settings or SolverSettings()
    rng = make_rng(config.seed)
    if X_true is None:
        X_true = random_pose(rng)
    scale = config.pose_lam
    be = NoisyPose(random_pose(rng), scale * np.array(config.cov_R_be), scale * np.array(config.cov_t_be))
    co = NoisyPose(random_pose(rng), scale * np.array(config.cov_R_co), scale * np.array(config.cov_t_co))
    Y_true = be.mean @ X_true @ co.mean
    handeye = config.handeye()

    def job(m: int):
        stream = make_rng(config.seed + 1 + m)
        pairs = generate_dataset(handeye, X_true, seed=stream)
        X_hat = solution_pose(*solve_axxb(pairs, settings))
        return X_hat, be.sample(stream) @ X_hat.mean @ co.sample(stream)

    results = _run_datasets(job, config.M, workers)
    predicted = propagate_chain([be, results[0][0], co])
    cov_rot_mc, cov_trans_mc = mc_covariance([r[1] for r in results], Y_true)
    report = McReport(
        cov_rot_mc,
        cov_trans_mc,
        predicted.cov_rot,
        predicted.cov_trans,
        eps_metric(predicted.cov_rot, cov_rot_mc),
        eps_metric(predicted.cov_trans, cov_trans_mc),
        lam=config.lam,
        M=config.M,
        k=config.k,
        seed=config.seed,
    )
    log.info(f"Object pose: eps_rot={report.eps_rot:.4f}, eps_trans={report.eps_trans:.4f}")
    return report
