"""Estimation of daily milk yields from single milkings in AM-PM recording plans."""

__version__ = "1.0.0"

import logging
import sys
import time
from pathlib import Path

from dailyyield.core import settings


def configure_logging(debug=False):
    """Configure the root logger for command line use."""
    logfmt = "%(asctime)-15s - %(levelname)s: %(message)s"
    datefmt = "%Y-%m-%d %H:%M:%S"

    if debug:
        logging.basicConfig(stream=sys.stdout, level=logging.DEBUG, format=logfmt, datefmt=datefmt, force=True)
        return

    log_level = getattr(logging, settings.get("LOG_LEVEL", "INFO").upper())
    log_dir = settings.get("LOG_DIR")
    if log_dir:
        today = time.strftime("%Y-%m-%d")
        logdir = Path(log_dir)
        logfile = logdir / f"dailyyield-{today}.log"
        logdir.mkdir(parents=True, exist_ok=True)
        # Create log file if it does not exist
        if not logfile.is_file():
            with logfile.open("w") as f:
                now = time.strftime("%Y-%m-%d %H:%M:%S")
                f.write(f"{now} CREATED DEBUG FILE\n\n")
        logging.basicConfig(filename=logfile, level=log_level, format=logfmt, datefmt=datefmt, force=True)
    else:
        logging.basicConfig(stream=sys.stderr, level=log_level, format=logfmt, datefmt=datefmt, force=True)
