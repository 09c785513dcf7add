# -*- coding: utf-8 -*-
#
# Copyright © HandEyeCov Project Contributors
# Licensed under the terms of the GNU GPLv3+ License
# (see handeyecov/__init__.py for details)

"""
# Analysis

Convenience functions for presenting covariances: projection onto pairs of
axes, one-standard-deviation ellipses, and comparison figures of predicted
and Monte-Carlo covariances.

Figures are drawn on ``matplotlib.figure.Figure`` objects and saved to
file; no interactive backend is needed.
"""

import logging
from pathlib import Path
from typing import NamedTuple, Sequence, TextIO, Tuple, Union

import numpy as np
import scipy.linalg
from matplotlib.figure import Figure


log = logging.getLogger(__name__)


AXIS_PAIRS = {"xy": (0, 1), "yz": (1, 2), "xz": (0, 2)}


class EllipseResult(NamedTuple):
    """
    A sampled covariance ellipse.

    Attributes
    ----------
    x : ndarray
        Abscissae of the sampled points.
    y : ndarray
        Ordinates of the sampled points.
    semi_axes : ndarray
        Semi-axis lengths, major first.
    directions : ndarray
        Unit principal directions as columns, matching ``semi_axes``.
    """
    x: np.ndarray
    y: np.ndarray
    semi_axes: np.ndarray
    directions: np.ndarray

    @property
    def points(self) -> np.ndarray:
        """The points as an (n, 2) array."""
        return np.column_stack((self.x, self.y))


def project(cov3: np.ndarray, axes: str) -> np.ndarray:
    """
    The 2x2 sub-block of a 3x3 covariance for an axis pair.

    Parameters
    ----------
    cov3 : ndarray
        A 3x3 covariance.
    axes : str
        One of ``"xy"``, ``"yz"``, ``"xz"``.

    Raises
    ------
    ValueError
        For an unknown axis pair.
    """
    try:
        i, j = AXIS_PAIRS[axes]
    except KeyError:
        raise ValueError(f"Unknown axis pair '{axes}' (expected one of {', '.join(AXIS_PAIRS)})") from None
    cov3 = np.asarray(cov3, dtype=float)
    return cov3[np.ix_((i, j), (i, j))]


def ellipse_points(
    cov2: np.ndarray,
    center: Sequence[float] = (0.0, 0.0),
    n: int = 360,
    nsigma: float = 1.0,
) -> EllipseResult:
    """
    Samples the ``nsigma`` level set of a 2D Gaussian.

    With the eigendecomposition ``cov2 = V·diag(λ)·Vᵀ``, the points are
    ``center + nsigma·V·diag(√λ)·[cos θ, sin θ]`` for n angles θ evenly
    spaced in [0, 2π).

    Parameters
    ----------
    cov2 : ndarray
        A symmetric PSD 2x2 covariance.
    center : sequence of float, optional
        The ellipse center (default origin).
    n : int, optional
        Number of points (default 360).
    nsigma : float, optional
        Number of standard deviations (default 1).

    Returns
    -------
    EllipseResult
    """
    cov2 = np.asarray(cov2, dtype=float)
    if cov2.shape != (2, 2):
        raise ValueError(f"Expected a 2x2 covariance, got shape {cov2.shape}")
    w, V = scipy.linalg.eigh(0.5 * (cov2 + cov2.T))
    order = np.argsort(w)[::-1]
    semi = nsigma * np.sqrt(np.clip(w[order], 0.0, None))
    V = V[:, order]
    theta = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    pts = (V * semi) @ np.vstack((np.cos(theta), np.sin(theta)))
    center = np.asarray(center, dtype=float)
    return EllipseResult(pts[0] + center[0], pts[1] + center[1], semi, V)


def savetxt(fname: Union[str, Path, TextIO], ellipse: EllipseResult) -> None:
    """
    Saves the ellipse points as CSV with an ``x,y`` header to a path or an
    open text stream.
    """
    if isinstance(fname, Path):
        fname = str(fname)
    np.savetxt(fname, ellipse.points, delimiter=",", header="x,y", comments="")


def _draw(ax, cov3: np.ndarray, axes: str, **kwargs) -> None:
    e = ellipse_points(project(cov3, axes))
    ax.plot(np.append(e.x, e.x[0]), np.append(e.y, e.y[0]), **kwargs)


def plot_ellipse(path: Union[str, Path], ellipse: EllipseResult, title: str = "") -> None:
    """Saves a figure of a single ellipse."""
    fig = Figure(figsize=(4, 4))
    ax = fig.add_subplot(1, 1, 1)
    ax.plot(np.append(ellipse.x, ellipse.x[0]), np.append(ellipse.y, ellipse.y[0]))
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(str(path))
    log.info(f"Saved ellipse figure to {path}")


def plot_covariance_comparison(
    path: Union[str, Path],
    predicted: Tuple[np.ndarray, np.ndarray],
    mc: Tuple[np.ndarray, np.ndarray],
    labels: Tuple[str, str] = ("Predicted", "Monte-Carlo"),
) -> None:
    """
    Saves a 2x3 grid of one-standard-deviation ellipses: rotation
    covariances on the first row, translation on the second, one column per
    axis pair.

    Parameters
    ----------
    path : str or Path
        Image file; the format follows the extension.
    predicted : tuple of ndarray
        ``(cov_rot, cov_trans)`` predicted by the solvers.
    mc : tuple of ndarray
        ``(cov_rot, cov_trans)`` from Monte-Carlo.
    labels : tuple of str, optional
        Legend entries.
    """
    fig = Figure(figsize=(10, 6.5))
    units = ("rad", "m")
    for row, (pred, ref, unit, block) in enumerate(zip(predicted, mc, units, ("Rotation", "Translation"))):
        for col, axes in enumerate(AXIS_PAIRS):
            ax = fig.add_subplot(2, 3, 3 * row + col + 1)
            _draw(ax, pred, axes, label=labels[0], color="tab:blue")
            _draw(ax, ref, axes, label=labels[1], color="tab:orange", linestyle="--")
            ax.set_xlabel(f"{axes[0]} ({unit})")
            ax.set_ylabel(f"{axes[1]} ({unit})")
            ax.set_title(f"{block} {axes}")
            ax.set_aspect("equal", adjustable="datalim")
            ax.ticklabel_format(style="sci", scilimits=(-2, 2))
            if row == 0 and col == 0:
                ax.legend(loc="upper right", fontsize="small")
    fig.tight_layout()
    fig.savefig(str(path))
    log.info(f"Saved covariance comparison to {path}")
