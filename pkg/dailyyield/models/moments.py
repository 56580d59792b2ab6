"""Per-session, per-bin moments of partial and daily yields."""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from dailyyield.core import exceptions
from dailyyield.core.grid import IntervalGrid
from dailyyield.core.status import Session
from dailyyield.herd.records import MilkingDataset

logger = logging.getLogger(__name__)

# Per-cell statistics, each stored as an array of shape (2, bin_count): row 0 is AM, row 1 is PM
FIELDS = ("n", "mean_x", "var_x", "mean_y", "var_y", "mean_d", "sum_x", "sum_y", "mean_ratio", "mean_prop")


@dataclass(frozen=True)
class CellMoments:
    """Moments of one (session, bin) cell or of a whole session."""

    n: int
    mean_x: float
    var_x: float
    mean_y: float
    var_y: float
    mean_d: float
    sum_x: float
    sum_y: float
    mean_ratio: float  # mean of y/x
    mean_prop: float   # mean of x/y


class BinMoments:
    """Exact moments per (session, bin) with population variances, plus session-wide moments."""

    def __init__(self, grid: IntervalGrid, cells: dict, sessions: dict):
        self.grid = grid
        self.cells = {name: np.asarray(cells[name], dtype=float).reshape(2, grid.bin_count) for name in FIELDS}
        self.cells["n"] = self.cells["n"].astype(int)
        self.sessions = {Session.parse(s): CellMoments(**m) for s, m in sessions.items()}

    def __str__(self):
        return str(self.serialize())

    def serialize(self):
        """Convert class data into dict."""
        return {
            "cells": {name: values.tolist() for name, values in self.cells.items()},
            "sessions": {s.name: vars(m).copy() for s, m in self.sessions.items()},
        }

    @property
    def total(self) -> int:
        return int(self.cells["n"].sum())

    def cell(self, session: Session, index: int) -> CellMoments:
        row = session.index - 1
        values = {name: float(self.cells[name][row, index]) for name in FIELDS}
        values["n"] = int(self.cells["n"][row, index])
        return CellMoments(**values)

    def session(self, session: Session) -> CellMoments:
        return self.sessions[session]

    def cell_or_session(self, session: Session, index: int, min_n: int) -> CellMoments:
        """Cell moments, or session-wide moments when the cell has fewer than min_n records."""
        cell = self.cell(session, index)
        if cell.n >= min_n:
            return cell
        logger.debug(f"{session.name} bin {index} has {cell.n} records, using session-wide moments")
        return self.session(session)

    def empty_bins(self) -> List[tuple]:
        """(session, bin index) pairs without records."""
        rows, cols = np.nonzero(self.cells["n"] == 0)
        return [(Session.AM if r == 0 else Session.PM, int(c)) for r, c in zip(rows, cols)]

    def populated(self, session: Session, min_n: int) -> np.ndarray:
        """Boolean mask over bins with at least min_n records."""
        return self.cells["n"][session.index - 1] >= min_n


def _cell_index(data: MilkingDataset, grid: IntervalGrid) -> np.ndarray:
    """Flat (session, bin) cell index of every record."""
    t = data.t
    if np.any(t <= 0):
        raise exceptions.DomainError("Milking intervals must be positive")
    bins = grid.indices(t)
    return np.where(data.is_am, 0, 1) * grid.bin_count + bins


def _moments(idx: np.ndarray, size: int, x, y, d) -> dict:
    n = np.bincount(idx, minlength=size).astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        def mean(v):
            return np.bincount(idx, weights=v, minlength=size) / n

        def var(v, m):
            return np.bincount(idx, weights=(v - m[idx]) ** 2, minlength=size) / n

        mean_x, mean_y, mean_d = mean(x), mean(y), mean(d)
        return {
            "n": n,
            "mean_x": mean_x,
            "var_x": var(x, mean_x),
            "mean_y": mean_y,
            "var_y": var(y, mean_y),
            "mean_d": mean_d,
            "sum_x": np.bincount(idx, weights=x, minlength=size),
            "sum_y": np.bincount(idx, weights=y, minlength=size),
            "mean_ratio": mean(y / x),
            "mean_prop": mean(x / y),
        }


def class_stats(data: MilkingDataset, grid: IntervalGrid) -> BinMoments:
    """Compute per-bin counts, means, population variances and sums."""
    data.require_daily()
    x, y, d = data.x, data.y, data.d
    cells = _moments(_cell_index(data, grid), 2 * grid.bin_count, x, y, d)
    session_idx = np.where(data.is_am, 0, 1)
    per_session = _moments(session_idx, 2, x, y, d)
    sessions = {
        s.name: {name: (int(per_session[name][s.index - 1]) if name == "n" else float(per_session[name][s.index - 1]))
                 for name in FIELDS}
        for s in Session
    }
    moments = BinMoments(grid, cells, sessions)
    empty = moments.empty_bins()
    if empty:
        logger.debug(f"{len(empty)} (session, bin) cells without records on grid {grid}")
    return moments
