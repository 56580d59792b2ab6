"""General utility functions."""

import hashlib
import logging
from pathlib import Path
from typing import Union

import yaml

logger = logging.getLogger(__name__)


def response(msg, err=False, **kwargs):
    """Create a one-line command line message, logging errors with their details."""
    args = ", ".join(f"{k}: {v}" for k, v in kwargs.items() if v != "")
    if err:
        details = "\n" + "\n".join(f"{k}: {v}" for k, v in kwargs.items() if v != "") if args else ""
        logger.error(f"{msg}{details}")
        return f"Error: {msg}" + (f" ({args})" if args else "")
    return f"{msg}" + (f" ({args})" if args else "")


def dump_yaml(data) -> str:
    """Dump data to a YAML string, keeping key order."""
    return yaml.dump(data, sort_keys=False, allow_unicode=True)


def load_yaml(text: str):
    """Load a YAML string with the safe loader."""
    return yaml.safe_load(text)


def file_digest(path: Union[Path, str]) -> str:
    """Get the sha256 digest of a file (used as provenance for loaded datasets)."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
