"""Milking records and datasets, and the records CSV format."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

import numpy as np
import pandas as pd

from dailyyield.core import exceptions, settings, utils
from dailyyield.core.status import Session

logger = logging.getLogger(__name__)

COLUMNS = ["cow_id", "session", "interval_h", "partial_kg", "daily_kg", "dim"]
_NUMERIC = ["interval_h", "partial_kg", "daily_kg", "dim"]


@dataclass(frozen=True)
class PartialObservation:
    """A single sampled milking without the daily yield."""

    session: Session
    interval_h: float
    partial_kg: float
    dim: Optional[float] = None

    def __post_init__(self):
        if not self.interval_h > 0:
            raise exceptions.DomainError(f"Milking interval must be positive, got {self.interval_h}")
        if not self.partial_kg >= 0:
            raise exceptions.DomainError(f"Partial yield must be nonnegative, got {self.partial_kg}")


@dataclass(frozen=True)
class MilkingRecord:
    """One sampled milking of a cow on a test day."""

    cow_id: Union[int, str]
    session: Session
    interval_h: float
    partial_kg: float
    daily_kg: Optional[float] = None
    dim: Optional[float] = None

    def __post_init__(self):
        if not self.interval_h > 0:
            raise exceptions.DomainError(f"Cow {self.cow_id}: milking interval must be positive")
        if not self.partial_kg >= 0:
            raise exceptions.DomainError(f"Cow {self.cow_id}: partial yield must be nonnegative")
        if self.daily_kg is not None and self.daily_kg < self.partial_kg:
            raise exceptions.DomainError(f"Cow {self.cow_id}: daily yield below partial yield")

    def observation(self) -> PartialObservation:
        """Drop the daily yield."""
        return PartialObservation(self.session, self.interval_h, self.partial_kg, self.dim)

    def serialize(self):
        """Convert class data into dict."""
        return {
            "cow_id": self.cow_id,
            "session": self.session.serialize(),
            "interval_h": self.interval_h,
            "partial_kg": self.partial_kg,
            "daily_kg": self.daily_kg,
            "dim": self.dim,
        }


@dataclass(frozen=True)
class MilkingDataset:
    """An ordered collection of milking records held column-wise.

    The frame has the columns of the records CSV; session is stored as 'AM'/'PM' strings and
    missing daily yields or DIM as NaN.
    """

    frame: pd.DataFrame
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.frame)

    def __iter__(self) -> Iterator[MilkingRecord]:
        return self.records()

    @classmethod
    def from_records(cls, records: Iterable[MilkingRecord], provenance: Optional[dict] = None) -> "MilkingDataset":
        rows = []
        for r in records:
            row = r.serialize()
            row["daily_kg"] = np.nan if r.daily_kg is None else r.daily_kg
            row["dim"] = np.nan if r.dim is None else r.dim
            rows.append(row)
        frame = pd.DataFrame(rows, columns=COLUMNS)
        return cls(frame, provenance or {})

    def records(self) -> Iterator[MilkingRecord]:
        for row in self.frame.itertuples(index=False):
            yield MilkingRecord(
                cow_id=row.cow_id,
                session=Session.parse(row.session),
                interval_h=float(row.interval_h),
                partial_kg=float(row.partial_kg),
                daily_kg=None if pd.isna(row.daily_kg) else float(row.daily_kg),
                dim=None if pd.isna(row.dim) else float(row.dim),
            )

    @property
    def t(self) -> np.ndarray:
        return self.frame["interval_h"].to_numpy(dtype=float)

    @property
    def x(self) -> np.ndarray:
        return self.frame["partial_kg"].to_numpy(dtype=float)

    @property
    def y(self) -> np.ndarray:
        return self.frame["daily_kg"].to_numpy(dtype=float)

    @property
    def d(self) -> np.ndarray:
        return self.frame["dim"].to_numpy(dtype=float)

    @property
    def is_am(self) -> np.ndarray:
        return (self.frame["session"] == Session.AM.name).to_numpy()

    @property
    def cow_ids(self) -> np.ndarray:
        """Distinct cow ids in order of first appearance."""
        return pd.unique(self.frame["cow_id"])

    def has_daily(self) -> bool:
        return bool(len(self)) and not self.frame["daily_kg"].isna().any()

    def has_dim(self) -> bool:
        return bool(len(self)) and not self.frame["dim"].isna().any()

    def require_daily(self):
        """Raise if any record lacks the daily yield."""
        if not len(self):
            raise exceptions.DomainError("Dataset is empty")
        missing = self.frame.index[self.frame["daily_kg"].isna()]
        if len(missing):
            cows = ", ".join(str(c) for c in self.frame.loc[missing[:5], "cow_id"])
            raise exceptions.DomainError(f"{len(missing)} records have no daily yield (cows {cows}, ...)")

    def subset_cows(self, cow_ids: Iterable) -> "MilkingDataset":
        """Get the records of the given cows, keeping the original record order."""
        mask = self.frame["cow_id"].isin(list(cow_ids)).to_numpy()
        return self.subset(mask)

    def subset(self, mask: np.ndarray) -> "MilkingDataset":
        frame = self.frame.loc[mask].reset_index(drop=True)
        return MilkingDataset(frame, dict(self.provenance))


def write_csv(dataset: MilkingDataset, path: Union[Path, str], precision: Optional[int] = None):
    """Write a dataset to a records CSV with a fixed number of significant digits."""
    precision = precision or settings.get("CSV_PRECISION", 6)
    frame = dataset.frame[COLUMNS]
    frame.to_csv(path, index=False, float_format=f"%.{precision}g", lineterminator="\n")
    logger.info(f"Wrote {len(frame)} records to '{path}'")


def read_csv(path: Union[Path, str], require_daily: bool = True) -> MilkingDataset:
    """Read a records CSV, reporting the line of the first malformed row."""
    try:
        frame = pd.read_csv(path, dtype={"session": str, "cow_id": str}, skipinitialspace=True)
    except pd.errors.ParserError as e:
        raise exceptions.DataFormatError(f"Malformed records CSV '{path}': {e}") from e
    except pd.errors.EmptyDataError as e:
        raise exceptions.DataFormatError(f"Records CSV '{path}' is empty") from e

    for col in ("cow_id", "session", "interval_h", "partial_kg"):
        if col not in frame.columns:
            raise exceptions.DataFormatError(f"Records CSV '{path}' has no column {col!r}")
    for col in ("daily_kg", "dim"):
        if col not in frame.columns:
            frame[col] = np.nan

    # Line numbers in the file: header is line 1
    for col in _NUMERIC:
        values = pd.to_numeric(frame[col], errors="coerce")
        bad = values.isna() & frame[col].notna()
        if bad.any():
            line = int(frame.index[bad][0]) + 2
            raise exceptions.DataFormatError(f"Line {line}: column {col!r} is not numeric ({frame[col][bad].iloc[0]!r})")
        frame[col] = values

    sessions = frame["session"].str.strip().str.upper()
    sessions = sessions.replace({"1": Session.AM.name, "2": Session.PM.name})
    bad = ~sessions.isin([Session.AM.name, Session.PM.name])
    if bad.any():
        line = int(frame.index[bad][0]) + 2
        raise exceptions.DataFormatError(f"Line {line}: session must be AM or PM, got {frame['session'][bad].iloc[0]!r}")
    frame["session"] = sessions

    checks = [
        (frame["cow_id"].fillna("").str.strip() == "", "cow_id is missing"),
        (frame["interval_h"].isna() | ~(frame["interval_h"] > 0), "interval_h must be positive"),
        (frame["partial_kg"].isna() | ~(frame["partial_kg"] >= 0), "partial_kg must be nonnegative"),
        (frame["daily_kg"] < frame["partial_kg"], "daily_kg is below partial_kg"),
    ]
    if require_daily:
        checks.append((frame["daily_kg"].isna(), "daily_kg is missing"))
    for bad, msg in checks:
        if bad.any():
            line = int(frame.index[bad][0]) + 2
            raise exceptions.DataFormatError(f"Line {line}: {msg}")

    frame["cow_id"] = _restore_ids(frame["cow_id"])
    frame = frame[COLUMNS]
    logger.debug(f"Read {len(frame)} records from '{path}'")
    return MilkingDataset(frame, {"source": str(path), "sha256": utils.file_digest(path)})


def _restore_ids(ids: pd.Series) -> pd.Series:
    """Turn cow ids back into integers when all of them are integer literals."""
    stripped = ids.str.strip()
    if stripped.str.fullmatch(r"-?\d+").all():
        return stripped.astype("int64")
    return stripped
