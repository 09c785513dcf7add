# -*- coding: utf-8 -*-
#
# Copyright © HandEyeCov Project Contributors
# Licensed under the terms of the GNU GPLv3+ License
# (see handeyecov/__init__.py for details)

"""
# Command Line Interface

The ``handeyecov`` command. Machine-readable output (JSON records, CSV) is
written to stdout; human-readable summaries and log messages go to stderr.

Exit codes:

| Code | Meaning                                              |
|------|------------------------------------------------------|
| 0    | success                                              |
| 1    | any other HandEyeCov error                           |
| 2    | usage error, too few measurements or datasets        |
| 3    | invalid input file, rotation or covariance           |
| 4    | degenerate geometry (parallel axes, rank deficiency) |
| 5    | the solver did not converge                          |
"""

import functools
import logging
import sys
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import typer
from pydantic import ValidationError
from tabulate import tabulate

from handeyecov import __version__
from handeyecov import analysis, files, profiles
from handeyecov.compound import propagate_chain, sample_chain
from handeyecov.datagen import SyntheticConfig, estimate_B_noise, generate_dataset, random_pose
from handeyecov.errors import (
    DatasetFileError,
    HandEyeCovError,
    InsufficientDataError,
    InvalidRotationError,
    NearSingularError,
    NoConvergenceError,
    NonPSDError,
    NonSkewError,
    RankDeficientError,
    ZeroCovarianceError,
)
from handeyecov.experiments import ChainConfig, McReport, eps_metric, run_chain_validation, run_validation, sweep_lambda
from handeyecov.noise import make_rng
from handeyecov.transsolve import rotation_residuals, solve_axxb, translation_residuals


log = logging.getLogger(__name__)


app = typer.Typer(help="Hand-eye calibration with covariance estimation.", add_completion=False)
profile_app = typer.Typer(help="Manage named noise profiles.")
app.add_typer(profile_app, name="profile")


EXIT_CODES = (
    (InsufficientDataError, 2),
    ((DatasetFileError, InvalidRotationError, NonPSDError, NonSkewError), 3),
    ((RankDeficientError, NearSingularError), 4),
    (NoConvergenceError, 5),
    (HandEyeCovError, 1),
)

COMPOUND_TOLERANCE = 0.05


class AxisPair(str, Enum):
    xy = "xy"
    yz = "yz"
    xz = "xz"


class Block(str, Enum):
    rotation = "rotation"
    translation = "translation"


def exit_code(exc: HandEyeCovError) -> int:
    """The process exit status for an error."""
    for types, code in EXIT_CODES:
        if isinstance(exc, types):
            return code
    return 1


def handle_errors(func):
    """
    Reports HandEyeCov errors on stderr and exits with the mapped status.
    """
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except HandEyeCovError as exc:
            code = exit_code(exc)
            log.debug(f"{type(exc).__name__}: {exc}", exc_info=True)
            typer.echo(f"Error ({type(exc).__name__}): {exc}", err=True)
            raise typer.Exit(code)
        except ValidationError as exc:
            typer.echo(f"Error: invalid configuration\n{exc}", err=True)
            raise typer.Exit(2)

    return wrapper


def _provided(**kwargs) -> dict:
    return {k: v for k, v in kwargs.items() if v is not None}


def _summary(rows, headers) -> None:
    typer.echo(tabulate(rows, headers=headers, floatfmt=".4g"), err=True)


def _report_rows(report: McReport) -> List[Tuple]:
    rows = [("rotation", report.eps_rot, np.trace(report.cov_rot_pred), np.trace(report.cov_rot_mc))]
    rows.append(("translation", report.eps_trans, np.trace(report.cov_trans_pred), np.trace(report.cov_trans_mc)))
    if report.cov_rot_baseline is not None:
        rows.append(("rotation (closed form)", None, None, np.trace(report.cov_rot_baseline)))
        rows.append(("translation (closed form)", None, None, np.trace(report.cov_trans_baseline)))
    return rows


def _load_profile(name: str) -> profiles.NoiseProfile:
    try:
        return profiles.load_profile(name)
    except ValueError as exc:
        raise typer.BadParameter(str(exc), param_hint="--profile")


def _diag(values: Tuple[Optional[float], ...], flag: str) -> Optional[np.ndarray]:
    if values is None or any(v is None for v in values):
        return None
    if any(v < 0 for v in values):
        raise typer.BadParameter("covariance diagonal entries must be non-negative", param_hint=flag)
    return np.diag(values)


@app.command()
@handle_errors
def simulate(
    lam: float = typer.Option(1e-5, "--lambda", min=0.0, help="Noise scale λ of all input covariances."),
    k: int = typer.Option(30, "--k", min=1, help="Number of measurement pairs."),
    seed: int = typer.Option(0, "--seed", min=0, help="Seed of the noise (and of X unless --x-seed is given)."),
    x_seed: Optional[int] = typer.Option(None, "--x-seed", min=0, help="Separate seed for the true X."),
    out: Path = typer.Option(..., "--out", help="Dataset file to write."),
    truth: Optional[Path] = typer.Option(None, "--truth", help="Truth sidecar (default: <out>.truth.jsonl)."),
):
    """
    Generates a synthetic dataset around a random hand-eye transformation.
    """
    config = SyntheticConfig(lam=lam, k=k, M=1, seed=seed)
    rng = make_rng(seed)
    X = random_pose(rng if x_seed is None else make_rng(x_seed))
    pairs = generate_dataset(config, X, seed=rng)

    truth = truth or out.with_suffix(".truth.jsonl")
    files.write_dataset(out, pairs, seed=seed, lam=lam)
    files.write_truth(truth, X, config.covariances(), lam, seed)
    log.info(f"Wrote {k} pairs to {out} and the truth to {truth}")
    typer.echo(files.read_truth(truth).json())
    _summary([("dataset", str(out)), ("truth", str(truth)), ("pairs", k), ("lambda", lam)], ["", ""])


@app.command()
@handle_errors
def calibrate(
    dataset: Path = typer.Argument(..., help="Dataset file."),
    out: Optional[Path] = typer.Option(None, "--out", help="Result file to write."),
    profile: Optional[str] = typer.Option(None, "--profile", help="Noise profile supplying shared covariances."),
    assume_cov_ra: Tuple[float, float, float] = typer.Option(
        (None, None, None), "--assume-cov-ra", help="Diagonal of a shared Σ_RA."
    ),
    assume_cov_rb: Tuple[float, float, float] = typer.Option(
        (None, None, None), "--assume-cov-rb", help="Diagonal of a shared Σ_RB."
    ),
    assume_cov_ta: Tuple[float, float, float] = typer.Option(
        (None, None, None), "--assume-cov-ta", help="Diagonal of a shared Σ_tA."
    ),
    assume_cov_tb: Tuple[float, float, float] = typer.Option(
        (None, None, None), "--assume-cov-tb", help="Diagonal of a shared Σ_tB."
    ),
):
    """
    Solves AX = XB for X and the covariances of its rotation and translation.

    Shared covariances from ``--profile`` replace the per-pair covariances of
    the dataset; ``--assume-cov-*`` flags override single covariances on top.
    A dataset without covariances falls back to the default noise profile.
    """
    ds = files.read_dataset(dataset)
    pairs = ds.pairs

    assumed = (
        _diag(assume_cov_ra, "--assume-cov-ra"),
        _diag(assume_cov_rb, "--assume-cov-rb"),
        _diag(assume_cov_ta, "--assume-cov-ta"),
        _diag(assume_cov_tb, "--assume-cov-tb"),
    )
    if profile is not None:
        pairs = pairs.with_covariances(*_load_profile(profile).covariances())
    elif not ds.has_covariances and not all(c is not None for c in assumed):
        try:
            pairs = pairs.with_covariances(*profiles.load_default_profile().covariances())
            log.info("Dataset carries no covariances; using the default noise profile")
        except ValueError:
            if not any(c is not None for c in assumed):
                raise typer.BadParameter(
                    "the dataset carries no covariances; pass --assume-cov-* or --profile",
                    param_hint="DATASET",
                )
            log.warning("Dataset carries no covariances; missing ones are taken as zero")
    pairs = pairs.with_covariances(*assumed)

    rot, trans = solve_axxb(pairs)
    rot_res = rotation_residuals(rot.rotation, pairs)
    trans_res = translation_residuals(rot.rotation, trans.translation, pairs)
    result = files.ResultFile(
        X=files.PoseRecord(R=rot.rotation.reshape(-1).tolist(), t=trans.translation.tolist()),
        cov_R=rot.cov_rot.reshape(-1).tolist(),
        cov_t=trans.cov_trans.reshape(-1).tolist(),
        iterations={"rotation": rot.iterations, "translation": trans.iterations},
        residuals=files.Residuals(
            rotation=rot_res.tolist(),
            translation=trans_res.tolist(),
            rms_rotation=float(np.sqrt(np.mean(rot_res ** 2))),
            rms_translation=float(np.sqrt(np.mean(trans_res ** 2))),
        ),
        provenance=files.Provenance(
            input_sha256=files.sha256_file(dataset),
            seed=ds.header.seed,
            version=__version__,
        ),
    )
    if out is not None:
        files.write_result(out, result)
        log.info(f"Wrote result to {out}")
    typer.echo(result.json())
    _summary(
        [
            ("pairs", len(pairs)),
            ("iterations (rotation, translation)", f"{rot.iterations}, {trans.iterations}"),
            ("RMS rotation residual (rad)", result.residuals.rms_rotation),
            ("RMS translation residual (m)", result.residuals.rms_translation),
            ("trace Σ_R", np.trace(rot.cov_rot)),
            ("trace Σ_t", np.trace(trans.cov_trans)),
        ],
        ["", ""],
    )


@app.command()
@handle_errors
def validate(
    lam: Optional[float] = typer.Option(None, "--lambda", min=0.0, help="Noise scale λ."),
    k: Optional[int] = typer.Option(None, "--k", min=1, help="Pairs per dataset."),
    M: Optional[int] = typer.Option(None, "--M", help="Number of datasets."),
    seed: Optional[int] = typer.Option(None, "--seed", min=0, help="Master seed; dataset m uses seed + m."),
    x_seed: Optional[int] = typer.Option(None, "--x-seed", min=0, help="Seed of the true X (default: seed + M)."),
    workers: int = typer.Option(1, "--workers", min=1, help="Threads solving datasets concurrently."),
    sweep: Optional[str] = typer.Option(None, "--sweep", help="Comma-separated noise scales to sweep."),
    baseline: bool = typer.Option(False, "--baseline", help="Also report the closed-form estimator."),
    figure: Optional[Path] = typer.Option(None, "--figure", help="Save predicted vs Monte-Carlo ellipses."),
):
    """
    Compares predicted covariances with Monte-Carlo over M synthetic datasets.

    Unset options take their values from ``SyntheticConfig`` (and thus from
    ``HANDEYECOV_SYNTH_*`` environment variables).
    """
    config = SyntheticConfig(**_provided(lam=lam, k=k, M=M, seed=seed))
    X_true = random_pose(make_rng(config.seed + config.M if x_seed is None else x_seed))

    if sweep is not None:
        try:
            lambdas = [float(s) for s in sweep.split(",") if s.strip()]
        except ValueError:
            raise typer.BadParameter(f"cannot parse '{sweep}'", param_hint="--sweep")
        if not lambdas or any(lam < 0 for lam in lambdas):
            raise typer.BadParameter("expected non-negative noise scales", param_hint="--sweep")
        if figure is not None:
            log.warning("--figure is ignored with --sweep")
        reports = sweep_lambda(lambdas, config, X_true, workers=workers)
        for report in reports:
            typer.echo(files.McReportRecord.from_report(report).json())
        _summary([(r.lam, r.eps_rot, r.eps_trans) for r in reports], ["lambda", "eps_rot", "eps_trans"])
        return

    report = run_validation(config, X_true, workers=workers, baseline=baseline)
    typer.echo(files.McReportRecord.from_report(report).json())
    _summary(_report_rows(report), ["block", "eps", "trace predicted", "trace Monte-Carlo"])
    if figure is not None:
        analysis.plot_covariance_comparison(
            figure,
            (report.cov_rot_pred, report.cov_trans_pred),
            (report.cov_rot_mc, report.cov_trans_mc),
        )


@app.command()
@handle_errors
def compound(
    poses: List[Path] = typer.Argument(..., help="Pose files, composed left to right."),
    out: Optional[Path] = typer.Option(None, "--out", help="Pose file to write."),
    mc_check: bool = typer.Option(False, "--mc-check", help="Cross-check the covariances by sampling."),
    samples: int = typer.Option(100000, "--samples", min=2, help="Number of samples for --mc-check."),
    seed: int = typer.Option(0, "--seed", min=0, help="Seed for --mc-check."),
):
    """
    Propagates the covariances of a chain of noisy poses.
    """
    chain = [files.read_pose(p) for p in poses]
    result = propagate_chain(chain)
    if out is not None:
        files.write_pose(out, result)
        log.info(f"Wrote compounded pose to {out}")
    typer.echo(files.PoseFile.from_noisy_pose(result).json())

    if mc_check:
        cov_rot_mc, cov_trans_mc = sample_chain(chain, samples, seed)
        rows = []
        for block, pred, mc in (("rotation", result.cov_rot, cov_rot_mc), ("translation", result.cov_trans, cov_trans_mc)):
            try:
                eps = eps_metric(pred, mc)
            except ZeroCovarianceError:
                eps = 0.0 if not np.any(pred) else float("inf")
            if eps > COMPOUND_TOLERANCE:
                log.warning(f"{block}: propagated and sampled covariances differ by {eps:.1%}")
            rows.append((block, eps, np.trace(pred), np.trace(mc)))
        _summary(rows, ["block", "eps", "trace propagated", "trace sampled"])


@app.command()
@handle_errors
def ellipse(
    result: Path = typer.Argument(..., help="Result file."),
    axes: AxisPair = typer.Option(AxisPair.xy, "--axes", help="Axis pair to project on."),
    block: Block = typer.Option(Block.rotation, "--block", help="Covariance block."),
    out: Optional[Path] = typer.Option(None, "--out", help="CSV file (default: stdout)."),
    figure: Optional[Path] = typer.Option(None, "--figure", help="Save a figure of the ellipse."),
    n: int = typer.Option(360, "--n", min=3, help="Number of points."),
    nsigma: float = typer.Option(1.0, "--nsigma", min=0.0, help="Number of standard deviations."),
):
    """
    Samples the one-standard-deviation ellipse of a projected covariance.

    Rotation ellipses are centered on zero (the perturbation about the
    estimate); translation ellipses on the estimated translation.
    """
    pose = files.read_result(result).noisy_pose()
    if block is Block.rotation:
        cov, center = pose.cov_rot, (0.0, 0.0)
    else:
        i, j = analysis.AXIS_PAIRS[axes.value]
        cov, center = pose.cov_trans, (pose.translation[i], pose.translation[j])
    points = analysis.ellipse_points(analysis.project(cov, axes.value), center, n=n, nsigma=nsigma)
    analysis.savetxt(sys.stdout if out is None else out, points)
    if figure is not None:
        analysis.plot_ellipse(figure, points, title=f"{block.value} {axes.value}")
    _summary([("semi-axes", ", ".join(f"{s:.4g}" for s in points.semi_axes))], ["", ""])


@app.command()
@handle_errors
def empirical(
    dataset: Path = typer.Argument(..., help="A large collected dataset."),
    reference: Optional[Path] = typer.Option(
        None, "--reference", help="Result file with a reference X (default: averaged resampled solutions)."
    ),
    profile: str = typer.Option(..., "--profile", help="Name of the noise profile to write."),
    overwrite: bool = typer.Option(False, "--overwrite", help="Replace an existing profile."),
    M: int = typer.Option(400, "--M", min=1, help="Resampled datasets for the reference X."),
    k: int = typer.Option(30, "--k", min=2, help="Pairs per resampled dataset."),
    seed: int = typer.Option(0, "--seed", min=0, help="Resampling seed."),
):
    """
    Estimates the camera noise of a collected dataset and saves it as a
    noise profile.

    The robot noise is taken from the dataset's covariances when present
    and is otherwise neglected (zero).
    """
    ds = files.read_dataset(dataset)
    X_ref = files.read_result(reference).X.to_pose() if reference is not None else None
    cov_RB, cov_tB = estimate_B_noise(ds.pairs, M=M, k=k, seed=seed, X_ref=X_ref)
    if ds.has_covariances:
        cov_RA, cov_tA = ds.pairs.cov_RA.mean(axis=0), ds.pairs.cov_tA.mean(axis=0)
    else:
        cov_RA = cov_tA = np.zeros((3, 3))
    noise = profiles.NoiseProfile.from_covariances(
        cov_RA, cov_RB, cov_tA, cov_tB, description=f"Estimated from {dataset.name}"
    )
    try:
        if overwrite:
            profiles.update_profile(profile, noise)
        else:
            profiles.save_profile(profile, noise)
    except ValueError as exc:
        raise typer.BadParameter(str(exc), param_hint="--profile")
    typer.echo(noise.json())
    _summary(
        [("profile", profile), ("trace Σ_RB", np.trace(cov_RB)), ("trace Σ_tB", np.trace(cov_tB))], ["", ""]
    )


@app.command()
@handle_errors
def chain(
    M: Optional[int] = typer.Option(None, "--M", help="Number of datasets."),
    k: Optional[int] = typer.Option(None, "--k", min=1, help="Pairs per hand-eye dataset."),
    seed: Optional[int] = typer.Option(None, "--seed", min=0, help="Master seed."),
    lam: Optional[float] = typer.Option(None, "--lambda", min=0.0, help="Hand-eye data noise scale."),
    pose_lam: Optional[float] = typer.Option(None, "--pose-lambda", min=0.0, help="Noise scale of bTe and cTo."),
    workers: int = typer.Option(1, "--workers", min=1, help="Threads solving datasets concurrently."),
):
    """
    Validates the propagated covariance of an object pose Y = bTe·X·cTo.
    """
    config = ChainConfig(**_provided(M=M, k=k, seed=seed, lam=lam, pose_lam=pose_lam))
    report = run_chain_validation(config, workers=workers)
    typer.echo(files.McReportRecord.from_report(report).json())
    _summary(_report_rows(report), ["block", "eps", "trace predicted", "trace Monte-Carlo"])


@profile_app.command("list")
def profile_list():
    """Lists the known noise profiles."""
    for name in profiles.known_profiles():
        typer.echo(name)


@profile_app.command("show")
def profile_show(name: str = typer.Argument(..., help="Profile name.")):
    """Prints a noise profile as JSON."""
    typer.echo(_load_profile(name).json())


@profile_app.command("delete")
def profile_delete(name: str = typer.Argument(..., help="Profile name.")):
    """Deletes a noise profile."""
    try:
        profiles.delete_profile(name)
    except ValueError as exc:
        raise typer.BadParameter(str(exc), param_hint="NAME")


@profile_app.command("set-default")
def profile_set_default(name: str = typer.Argument(..., help="Profile name.")):
    """Makes a noise profile the default for datasets without covariances."""
    profiles.save_default_profile(name, _load_profile(name))


@app.command()
def version():
    """Prints the version."""
    typer.echo(__version__)


def main():
    app()


if __name__ == "__main__":
    main()
