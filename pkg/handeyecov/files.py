# -*- coding: utf-8 -*-
#
# Copyright © HandEyeCov Project Contributors
# Licensed under the terms of the GNU GPLv3+ License
# (see handeyecov/__init__.py for details)

"""
# Files

Line-delimited JSON files for datasets, results, truth sidecars and noisy
poses.

Every file starts with a record carrying ``schema_version`` and ``kind``.
Matrices are stored as 9 reals in row-major order. Floats are written with
Python's shortest round-trip representation, so reading a file back
reproduces every value bit-exactly. Units are radians and meters.

A dataset file looks like

```
{"schema_version": "1", "kind": "dataset", "pairs": 2, "seed": 7, "lam": 1e-05}
{"A": {"R": [...], "t": [...]}, "B": {"R": [...], "t": [...]}, "cov_RA": [...], ...}
{"A": {"R": [...], "t": [...]}, "B": {"R": [...], "t": [...]}}
```

Per-pair covariances are optional; pairs without them get zero
covariances and the dataset reports ``has_covariances = False``.
"""

import hashlib
import logging
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Union

import numpy as np
from pydantic import BaseModel, ValidationError, conlist, validator

from handeyecov.errors import DatasetFileError, HandEyeCovError
from handeyecov.experiments import McReport
from handeyecov.liegroup import validate_rotation
from handeyecov.noise import validate_cov3
from handeyecov.poses import DecoupledPose, MeasurementPair, MeasurementSet, NoisyPose


log = logging.getLogger(__name__)


SCHEMA_VERSION = "1"

PathLike = Union[str, Path]
Matrix9 = conlist(float, min_items=9, max_items=9)
Vector3 = conlist(float, min_items=3, max_items=3)


def _flat(m: np.ndarray) -> List[float]:
    return [float(x) for x in np.asarray(m, dtype=float).reshape(-1)]


def _mat(values) -> np.ndarray:
    return np.array(values, dtype=float).reshape(3, 3)


class PoseRecord(BaseModel):
    """A pose: rotation R (row-major) and translation t."""
    R: Matrix9
    t: Vector3

    @classmethod
    def from_pose(cls, pose: DecoupledPose) -> "PoseRecord":
        return cls(R=_flat(pose.rotation), t=_flat(pose.translation))

    def to_pose(self, name: str = "rotation") -> DecoupledPose:
        return DecoupledPose(validate_rotation(_mat(self.R), name), self.t, validate=False)


class Header(BaseModel):
    """First record of every file."""
    schema_version: str = SCHEMA_VERSION
    kind: str

    @validator("schema_version")
    def _supported(cls, value: str) -> str:
        if value != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version '{value}' (expected '{SCHEMA_VERSION}')")
        return value


class DatasetHeader(Header):
    kind: str = "dataset"
    pairs: Optional[int] = None
    seed: Optional[int] = None
    lam: Optional[float] = None


class PairRecord(BaseModel):
    """One measurement pair, with optional covariances."""
    A: PoseRecord
    B: PoseRecord
    cov_RA: Optional[Matrix9] = None
    cov_RB: Optional[Matrix9] = None
    cov_tA: Optional[Matrix9] = None
    cov_tB: Optional[Matrix9] = None

    @property
    def has_covariances(self) -> bool:
        return all(c is not None for c in (self.cov_RA, self.cov_RB, self.cov_tA, self.cov_tB))


class TruthFile(Header):
    """The truth sidecar of a simulated dataset."""
    kind: str = "truth"
    X: PoseRecord
    cov_RA: Matrix9
    cov_RB: Matrix9
    cov_tA: Matrix9
    cov_tB: Matrix9
    lam: float
    seed: Optional[int] = None


class Residuals(BaseModel):
    rotation: List[float]
    translation: List[float]
    rms_rotation: float
    rms_translation: float


class Provenance(BaseModel):
    input_sha256: Optional[str] = None
    seed: Optional[int] = None
    version: str


class ResultFile(Header):
    """A calibration result: X with the covariances of its parts."""
    kind: str = "result"
    X: PoseRecord
    cov_R: Matrix9
    cov_t: Matrix9
    iterations: Dict[str, int]
    residuals: Residuals
    provenance: Provenance

    @validator("cov_R", "cov_t")
    def _psd(cls, value, field):
        try:
            validate_cov3(_mat(value), field.name)
        except HandEyeCovError as exc:
            raise ValueError(str(exc)) from exc
        return value

    def noisy_pose(self) -> NoisyPose:
        return NoisyPose(self.X.to_pose(), _mat(self.cov_R), _mat(self.cov_t))


class PoseFile(Header):
    """A noisy pose."""
    kind: str = "pose"
    pose: PoseRecord
    cov_R: Matrix9
    cov_t: Matrix9

    @classmethod
    def from_noisy_pose(cls, pose: NoisyPose) -> "PoseFile":
        return cls(pose=PoseRecord.from_pose(pose.mean), cov_R=_flat(pose.cov_rot), cov_t=_flat(pose.cov_trans))

    def noisy_pose(self) -> NoisyPose:
        return NoisyPose(self.pose.to_pose(), _mat(self.cov_R), _mat(self.cov_t))


class McReportRecord(Header):
    """Machine-readable form of an ``McReport``."""
    kind: str = "mc_report"
    lam: float
    M: int
    k: int
    seed: int
    eps_rot: Optional[float]
    eps_trans: Optional[float]
    degenerate: bool
    cov_rot_mc: Matrix9
    cov_trans_mc: Matrix9
    cov_rot_pred: Matrix9
    cov_trans_pred: Matrix9
    cov_rot_baseline: Optional[Matrix9] = None
    cov_trans_baseline: Optional[Matrix9] = None

    @classmethod
    def from_report(cls, report: McReport) -> "McReportRecord":
        def finite(x: float) -> Optional[float]:
            return None if np.isnan(x) else float(x)

        return cls(
            lam=report.lam,
            M=report.M,
            k=report.k,
            seed=report.seed,
            eps_rot=finite(report.eps_rot),
            eps_trans=finite(report.eps_trans),
            degenerate=report.degenerate,
            cov_rot_mc=_flat(report.cov_rot_mc),
            cov_trans_mc=_flat(report.cov_trans_mc),
            cov_rot_pred=_flat(report.cov_rot_pred),
            cov_trans_pred=_flat(report.cov_trans_pred),
            cov_rot_baseline=None if report.cov_rot_baseline is None else _flat(report.cov_rot_baseline),
            cov_trans_baseline=None if report.cov_trans_baseline is None else _flat(report.cov_trans_baseline),
        )


class Dataset(NamedTuple):
    """
    A dataset read from file.

    Attributes
    ----------
    header : DatasetHeader
        The header record.
    pairs : MeasurementSet
        The measurements.
    has_covariances : bool
        True if every pair carried its four covariances.
    """
    header: DatasetHeader
    pairs: MeasurementSet
    has_covariances: bool


def sha256_file(path: PathLike) -> str:
    """Hex SHA-256 digest of a file."""
    h = hashlib.sha256()
    with Path(path).open("rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _read_records(path: PathLike) -> List[tuple]:
    """Non-empty lines of a file with their 1-based line numbers."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DatasetFileError(f"cannot read file ({exc.strerror})", path) from exc
    records = [(n, line) for n, line in enumerate(text.splitlines(), start=1) if line.strip()]
    if not records:
        raise DatasetFileError("file is empty", path)
    return records


def _parse(model, line: str, path: PathLike, lineno: int):
    try:
        return model.parse_raw(line)
    except ValidationError as exc:
        problems = "; ".join(f"{'.'.join(str(l) for l in e['loc'])}: {e['msg']}" for e in exc.errors())
        raise DatasetFileError(problems, path, lineno) from exc
    except ValueError as exc:
        raise DatasetFileError(f"malformed JSON ({exc})", path, lineno) from exc


def _single(model, path: PathLike):
    records = _read_records(path)
    if len(records) > 1:
        log.warning(f"{path}: ignoring {len(records) - 1} record(s) after the first")
    lineno, line = records[0]
    return _parse(model, line, path, lineno)


def write_dataset(path: PathLike, pairs: MeasurementSet, covariances: bool = True, **header) -> None:
    """
    Writes a dataset file.

    Parameters
    ----------
    path : str or Path
        Destination.
    pairs : MeasurementSet
        The measurements.
    covariances : bool, optional
        Include per-pair covariances (default True).
    **header
        Extra header fields (``seed``, ``lam``).
    """
    lines = [DatasetHeader(pairs=len(pairs), **header).json()]
    for pair in pairs:
        record = PairRecord(A=PoseRecord.from_pose(pair.A.mean), B=PoseRecord.from_pose(pair.B.mean))
        if covariances:
            record.cov_RA = _flat(pair.A.cov_rot)
            record.cov_RB = _flat(pair.B.cov_rot)
            record.cov_tA = _flat(pair.A.cov_trans)
            record.cov_tB = _flat(pair.B.cov_trans)
        lines.append(record.json(exclude_none=True))
    Path(path).write_text("\n".join(lines) + "\n")


def read_dataset(path: PathLike) -> Dataset:
    """
    Reads and validates a dataset file.

    Rotations within 1e-6 of SO(3) are re-orthonormalized; covariances
    must be symmetric positive-semidefinite.

    Raises
    ------
    DatasetFileError
        With the path and line number of the first offending record.
    """
    records = _read_records(path)
    lineno, line = records[0]
    header = _parse(DatasetHeader, line, path, lineno)
    if header.kind != "dataset":
        raise DatasetFileError(f"expected a dataset file, found kind '{header.kind}'", path, lineno)

    pairs = []
    complete = True
    for lineno, line in records[1:]:
        record = _parse(PairRecord, line, path, lineno)
        partial = [c is not None for c in (record.cov_RA, record.cov_RB, record.cov_tA, record.cov_tB)]
        if any(partial) and not all(partial):
            log.warning(f"{path}:{lineno}: incomplete covariances; missing ones are taken as zero")
        complete = complete and record.has_covariances
        try:
            A = NoisyPose(
                record.A.to_pose("A rotation"),
                None if record.cov_RA is None else _mat(record.cov_RA),
                None if record.cov_tA is None else _mat(record.cov_tA),
            )
            B = NoisyPose(
                record.B.to_pose("B rotation"),
                None if record.cov_RB is None else _mat(record.cov_RB),
                None if record.cov_tB is None else _mat(record.cov_tB),
            )
        except HandEyeCovError as exc:
            raise DatasetFileError(str(exc), path, lineno) from exc
        pairs.append(MeasurementPair(A, B))

    if header.pairs is not None and header.pairs != len(pairs):
        log.warning(f"{path}: header announces {header.pairs} pairs, found {len(pairs)}")
    log.debug(f"Read {len(pairs)} pairs from {path}")
    return Dataset(header, MeasurementSet(pairs), complete and bool(pairs))


def write_truth(
    path: PathLike,
    X: DecoupledPose,
    covariances,
    lam: float,
    seed: Optional[int] = None,
) -> None:
    """
    Writes the truth sidecar of a simulated dataset.

    Parameters
    ----------
    covariances : tuple of ndarray
        The λ-scaled ``(Σ_RA, Σ_RB, Σ_tA, Σ_tB)``.
    """
    cov_RA, cov_RB, cov_tA, cov_tB = covariances
    record = TruthFile(
        X=PoseRecord.from_pose(X),
        cov_RA=_flat(cov_RA),
        cov_RB=_flat(cov_RB),
        cov_tA=_flat(cov_tA),
        cov_tB=_flat(cov_tB),
        lam=lam,
        seed=seed,
    )
    Path(path).write_text(record.json() + "\n")


def read_truth(path: PathLike) -> TruthFile:
    return _single(TruthFile, path)


def write_result(path: PathLike, result: ResultFile) -> None:
    Path(path).write_text(result.json() + "\n")


def read_result(path: PathLike) -> ResultFile:
    """
    Reads a result file.

    Raises
    ------
    DatasetFileError
        If the file is malformed or its covariances are not PSD.
    """
    result = _single(ResultFile, path)
    try:
        result.X.to_pose("X rotation")
    except HandEyeCovError as exc:
        raise DatasetFileError(str(exc), path, 1) from exc
    return result


def write_pose(path: PathLike, pose: NoisyPose) -> None:
    Path(path).write_text(PoseFile.from_noisy_pose(pose).json() + "\n")


def read_pose(path: PathLike) -> NoisyPose:
    """
    Reads a noisy pose file.

    Raises
    ------
    DatasetFileError
        If the file is malformed, the rotation is invalid or a covariance
        is not PSD.
    """
    record = _single(PoseFile, path)
    try:
        return record.noisy_pose()
    except HandEyeCovError as exc:
        raise DatasetFileError(str(exc), path, 1) from exc
