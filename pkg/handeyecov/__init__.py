# -*- coding: utf-8 -*-
# Copyright © 2022- HandEyeCov Project Contributors and others (see AUTHORS.txt).
# The resources, libraries, and some source files under other terms.
#
# This file is part of HandEyeCov.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.

# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.

# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.

"""
# HandEyeCov

Hand-eye calibration (AX = XB) with first-order covariance estimation of the
solution, validated against a built-in Monte-Carlo harness.
"""

import logging
import logging.handlers
import os
import pathlib
import platform
import sys

if sys.version_info < (3, 8, 0):
    raise Exception(
        "handeyecov requires Python 3.8+ (version "
        + platform.python_version()
        + " detected)."
    )

__title__ = "HandEyeCov"
__author__ = "HandEyeCov Contributors"
__copyright__ = "Copyright 2022, HandEyeCov Contributors"
__version__ = "0.1.0"
__license__ = "GPLv3+"
__status__ = "Development"  # "Production"


import warnings
warnings.filterwarnings("default", category=DeprecationWarning)

from appdirs import AppDirs

_dirs = AppDirs(__title__, __author__)
HANDEYECOV_DATA_DIR = pathlib.Path(
    os.getenv("HANDEYECOV_DATA_DIR", _dirs.user_data_dir)
)
HANDEYECOV_CONFIG_DIR = HANDEYECOV_DATA_DIR / "config"


def get_loglevel() -> int:
    """
    Reads the log level from the ``HANDEYECOV_LOGLEVEL`` environment variable.

    Unknown level names fall back to ``WARNING``.
    """
    loglevel = os.getenv("HANDEYECOV_LOGLEVEL", "WARNING")
    try:
        loglevel = getattr(logging, loglevel.upper())
    except AttributeError:
        loglevel = logging.WARNING
    if not isinstance(loglevel, int):
        loglevel = logging.WARNING
    return loglevel


def _configure_logging() -> None:
    root = logging.getLogger("handeyecov")
    if root.handlers or logging.root.handlers:
        return

    fmt = logging.Formatter(
        "%(asctime)s.%(msecs)03d %(process)-5s %(processName)-10s %(name)-12s %(levelname)-8s %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    logfile = os.getenv("HANDEYECOV_LOGFILE", str(HANDEYECOV_DATA_DIR / "handeyecov.log"))
    try:
        pathlib.Path(logfile).parent.mkdir(parents=True, exist_ok=True)
        h = logging.handlers.RotatingFileHandler(logfile, "a", 300000, 10)
        h.setFormatter(fmt)
        root.addHandler(h)
    except OSError:
        # Read-only home directories still get stderr logging.
        pass

    # stdout carries machine-readable CLI output.
    h = logging.StreamHandler(sys.stderr)
    h.setFormatter(fmt)
    root.addHandler(h)

    root.setLevel(get_loglevel())
    root.debug("HandEyeCov logging configured")


_configure_logging()
