"""Reading and writing fitted models as versioned YAML model files."""

import logging
from pathlib import Path
from typing import Union

import numpy as np

from dailyyield.core import exceptions, settings, utils
from dailyyield.core.grid import build_grid
from dailyyield.core.status import ModelId, Session
from dailyyield.models.moments import BinMoments
from dailyyield.models.yield_models import FittedModel

logger = logging.getLogger(__name__)

# per_bin entries keyed by session rather than stored as (2, bin_count) arrays
_SESSION_KEYED = ("curve", "line")


def serialize(m: FittedModel) -> dict:
    """Convert a fitted model into a dict of plain Python values."""
    per_bin = {}
    for key, value in m.per_bin.items():
        if key in _SESSION_KEYED:
            per_bin[key] = {s.name: [float(v) for v in value[s]] for s in Session}
        else:
            per_bin[key] = np.asarray(value, dtype=float).tolist()
    return {
        "version": settings.get("MODEL_FILE_VERSION", 1),
        "id": m.id.serialize(),
        "grid": m.grid.serialize(),
        "options": dict(m.options),
        "alpha": {s.name: float(v) for s, v in m.alpha.items()},
        "beta": _optional_float(m.beta),
        "gamma": _optional_float(m.gamma),
        "b": _optional_float(m.b),
        "d0": _optional_float(m.d0),
        "residual_variance": _optional_float(m.residual_variance),
        "standard_errors": {k: float(v) for k, v in m.standard_errors.items()},
        "per_bin": per_bin,
        "flags": list(m.flags),
        "moments": m.moments.serialize(),
    }


def _optional_float(value):
    return None if value is None else float(value)


def dump_model(m: FittedModel) -> str:
    """Get the model file text of a fitted model."""
    return utils.dump_yaml(serialize(m))


def load_from_str(text: str) -> FittedModel:
    """Load a fitted model from model file text."""
    try:
        data = utils.load_yaml(text)
    except Exception as e:
        raise exceptions.DataFormatError(f"Model file is not valid YAML: {e}") from e
    if not isinstance(data, dict):
        raise exceptions.DataFormatError("Model file does not contain a mapping")

    expected = settings.get("MODEL_FILE_VERSION", 1)
    if data.get("version") != expected:
        raise exceptions.DataFormatError(f"Unsupported model file version {data.get('version')!r}, expected {expected}")

    try:
        model_id = ModelId[data["id"]]
        grid = build_grid(**data["grid"])
        moments = BinMoments(grid, data["moments"]["cells"], data["moments"]["sessions"])
        per_bin = {}
        for key, value in data.get("per_bin", {}).items():
            if key in _SESSION_KEYED:
                per_bin[key] = {Session.parse(s): list(v) for s, v in value.items()}
            else:
                per_bin[key] = np.array(value, dtype=float)
        return FittedModel(
            id=model_id,
            grid=grid,
            moments=moments,
            alpha={Session.parse(s): float(v) for s, v in data.get("alpha", {}).items()},
            beta=data.get("beta"),
            gamma=data.get("gamma"),
            b=data.get("b"),
            d0=data.get("d0"),
            per_bin=per_bin,
            standard_errors=dict(data.get("standard_errors", {})),
            residual_variance=data.get("residual_variance"),
            options=dict(data.get("options", {})),
            flags=list(data.get("flags", [])),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise exceptions.DataFormatError(f"Model file is incomplete or malformed: {e!r}") from e


def save_model(m: FittedModel, path: Union[Path, str]):
    """Write a model file."""
    Path(path).write_text(dump_model(m), encoding="UTF-8")
    logger.info(f"Wrote {m.id.name} model to '{path}'")


def load_model(path: Union[Path, str]) -> FittedModel:
    """Read a model file."""
    try:
        text = Path(path).read_text(encoding="UTF-8")
    except OSError as e:
        raise exceptions.DataFormatError(f"Could not read model file '{path}': {e}") from e
    return load_from_str(text)
