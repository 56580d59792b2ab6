"""Additive and multiplicative correction factor tables derived from fitted models."""

import logging
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from dailyyield.core import exceptions
from dailyyield.core.grid import BinRef, IntervalGrid, complement_bin
from dailyyield.core.status import FactorKind, ModelId, Session
from dailyyield.herd.records import PartialObservation
from dailyyield.models.moments import BinMoments
from dailyyield.models.yield_models import FittedModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FactorTable:
    """Correction factors per (session, bin).

    entries has shape (2, bin_count) with AM in row 0. Additive entries are in kg and go with the
    partial-yield coefficient b; multiplicative entries are dimensionless.
    """

    kind: FactorKind
    entries: np.ndarray
    grid: IntervalGrid
    source_model: Optional[ModelId] = None
    b: Optional[float] = None

    def __str__(self):
        return str(self.serialize())

    def serialize(self):
        """Convert class data into dict."""
        return {
            "kind": self.kind.serialize(),
            "source_model": self.source_model.serialize() if self.source_model else None,
            "b": self.b,
            "grid": self.grid.serialize(),
            "entries": {s.name: self.entries[s.index - 1].tolist() for s in Session},
        }

    def value(self, session: Session, index: int) -> float:
        """Get the factor of one (session, bin) cell."""
        value = float(self.entries[session.index - 1, index])
        if np.isnan(value):
            raise exceptions.MissingFactorError(f"No factor for {session.name} bin {self.grid.bin(index).lo:g} h")
        return value

    def lookup(self, is_am: np.ndarray, t: np.ndarray) -> np.ndarray:
        """Get the factors for many (session, interval) pairs; intervals outside the grid use edge bins."""
        index = self.grid.indices(t)
        values = self.entries[np.where(is_am, 0, 1), index]
        missing = np.isnan(values)
        if np.any(missing):
            first = int(np.argmax(missing))
            session = Session.AM if is_am[first] else Session.PM
            raise exceptions.MissingFactorError(
                f"No factor for {session.name} bin {self.grid.bin(int(index[first])).lo:g} h "
                f"({int(missing.sum())} observations affected)")
        return values

    def to_frame(self) -> pd.DataFrame:
        """Rows of the factors CSV: session, bin_lo, bin_mid, bin_hi, kind, value."""
        rows = []
        for s in Session:
            for b in self.grid.bins():
                rows.append({"session": s.name, "bin_lo": b.lo, "bin_mid": b.midpoint, "bin_hi": b.hi,
                             "kind": self.kind.name, "value": self.entries[s.index - 1, b.index]})
        return pd.DataFrame(rows, columns=["session", "bin_lo", "bin_mid", "bin_hi", "kind", "value"])


def factor_table(m: FittedModel) -> FactorTable:
    """The natural factor table of a model on its own grid."""
    if m.id.factor_kind is FactorKind.additive:
        return acf_table(m)
    return mcf_table(m)


def acf_table(m: FittedModel, grid: Optional[IntervalGrid] = None, fallback: bool = True) -> FactorTable:
    """Additive correction factors for M1, M2 and M3 fits.

    M1 cells with too few records take the factor of the nearest populated bin of the same session
    unless fallback is off, in which case they stay empty and lookups into them fail.
    """
    grid = grid or m.grid
    family = m.id.family
    if family not in ("M1", "M2", "M3"):
        raise exceptions.UsageError(f"{m.id.name} has no additive correction factors")

    if family == "M1":
        if grid != m.grid:
            raise exceptions.UsageError(f"M1 factors only exist on the fitted grid {m.grid}")
        entries = np.array(m.per_bin["mu"], dtype=float)
        min_n = m.options.get("min_bin_records", 5)
        sparse = m.moments.cells["n"] < min_n
        entries[sparse] = np.nan
        if fallback:
            entries = _fill_from_neighbours(entries, grid)
    else:
        mids = np.array(grid.midpoints())
        entries = np.vstack([m.alpha[s] + m.beta * mids for s in Session])
    return FactorTable(FactorKind.additive, entries, grid, m.id, m.b)


def _fill_from_neighbours(entries: np.ndarray, grid: IntervalGrid) -> np.ndarray:
    """Replace empty cells with the value of the nearest nonempty bin (lower bin on ties)."""
    filled = entries.copy()
    for row, s in enumerate(Session):
        present = np.nonzero(~np.isnan(entries[row]))[0]
        empty = np.nonzero(np.isnan(entries[row]))[0]
        if not len(empty) or not len(present):
            continue
        for i in empty:
            nearest = present[np.argmin(np.abs(present - i))]
            filled[row, i] = entries[row, nearest]
        logger.warning(f"{s.name} bins {[grid.bin(int(i)).lo for i in empty]} have too few records, "
                       "using factors of the nearest populated bins")
    return filled


def mcf_table(m: FittedModel, grid: Optional[IntervalGrid] = None,
              moments: Optional[BinMoments] = None) -> FactorTable:
    """Multiplicative correction factors for M4, M5, M6 and M7 fits."""
    grid = grid or m.grid
    moments = moments or m.moments
    family = m.id.family
    if family not in ("M4", "M5", "M6", "M7"):
        raise exceptions.UsageError(f"{m.id.name} has no multiplicative correction factors")
    mids = np.array(grid.midpoints())

    if family == "M7":
        if moments.grid != grid:
            raise exceptions.UsageError(f"Moments on grid {moments.grid} do not match grid {grid}")
        entries = _exponential_factors(m, grid, moments, mids)
    else:
        rows = []
        for s in Session:
            if family == "M4":
                a, b1, b2 = m.per_bin["curve"][s]
                denominator = a + b1 * mids + b2 * mids ** 2
            elif family == "M5":
                a, slope = m.per_bin["line"][s]
                denominator = a + slope * mids
            else:
                denominator = m.alpha[s] + m.beta * mids
            _check_poles(m, s, grid, denominator)
            rows.append(1.0 / denominator)
        entries = np.vstack(rows)

    below = entries <= 1
    if np.any(below):
        row, index = (int(v[0]) for v in np.nonzero(below))
        raise exceptions.DomainError(
            f"{m.id.name}: factor {entries[row, index]:.4g} at {'AM' if row == 0 else 'PM'} "
            f"bin {grid.bin(index).lo:g} h does not exceed 1")
    return FactorTable(FactorKind.multiplicative, entries, grid, m.id)


def _check_poles(m: FittedModel, session: Session, grid: IntervalGrid, denominator: np.ndarray):
    bad = np.nonzero(denominator <= 0)[0]
    if len(bad):
        raise exceptions.PoleError(f"{m.id.name}: fitted denominator is nonpositive for {session.name} bins "
                                   f"starting at {[grid.bin(int(i)).lo for i in bad]} h")


def _exponential_factors(m: FittedModel, grid: IntervalGrid, moments: BinMoments, mids: np.ndarray) -> np.ndarray:
    """rho * mean(x)^(b - 1) * exp(alpha_j + beta t) per cell, with rho from the cell moments."""
    min_n = m.options.get("min_bin_records", 5)
    entries = np.empty((2, grid.bin_count))
    for s in Session:
        for i in range(grid.bin_count):
            c = moments.cell_or_session(s, i, min_n)
            if not c.mean_x > 0:
                raise exceptions.DomainError(f"{m.id.name}: mean partial yield of {s.name} bin {i} is not positive")
            rho = np.exp(0.5 * (c.var_y / c.mean_y ** 2 - m.b * c.var_x / c.mean_x ** 2))
            entries[s.index - 1, i] = rho * c.mean_x ** (m.b - 1) * np.exp(m.alpha[s] + m.beta * mids[i])
    return entries


def expected_pair_sum(b: float, moments: BinMoments, bin: BinRef) -> float:
    """(2 - b) times the mean daily yield of the cows whose AM milking falls in bin."""
    return (2 - b) * float(moments.cells["mean_y"][0, bin.index])


def pair_sum(t: FactorTable, bin: BinRef, moments: Optional[BinMoments] = None) -> float:
    """Sum of the AM factor at bin and the PM factor at its complement bin (one test-day configuration)."""
    if t.kind is not FactorKind.additive:
        raise exceptions.UsageError("Pair sums are only defined for additive factor tables")
    other = complement_bin(t.grid, bin)
    if moments is not None:
        n_am, n_pm = moments.cells["n"][0, bin.index], moments.cells["n"][1, other.index]
        if min(n_am, n_pm) == 0:
            logger.warning(f"Pair sum for bin {bin.lo:g} h uses a cell without records")
    return t.value(Session.AM, bin.index) + t.value(Session.PM, other.index)


def complement_mcf(f: float) -> float:
    """Factor of the other milking given the factor f of one milking."""
    if not f > 1:
        raise exceptions.DomainError(f"A multiplicative factor must exceed 1, got {f}")
    return f / (f - 1)


def mcf_subset(m: FittedModel, sessions: Iterable[Session], grid: IntervalGrid, bin: BinRef) -> float:
    """Factor for the sum of a subset of the day's milkings under the proportion model (M6).

    bin is the bin of the AM interval; the PM milking belongs to the complement bin.
    """
    if m.id.family != "M6":
        raise exceptions.UsageError(f"Subset factors need an M6 fit, got {m.id.name}")
    sessions = list(dict.fromkeys(Session.parse(s) for s in sessions))
    if not sessions:
        raise exceptions.UsageError("Cannot compute a factor for an empty set of milkings")
    bins = {Session.AM: bin, Session.PM: complement_bin(grid, bin)}
    denominator = sum(m.alpha[s] for s in sessions) + m.beta * sum(bins[s].midpoint for s in sessions)
    if not denominator > 0:
        raise exceptions.PoleError(f"Subset proportion is nonpositive for bin {bin.lo:g} h")
    return 1.0 / denominator


def _dim_checked(m: FittedModel, family: str):
    if m.id.family != family:
        raise exceptions.UsageError(f"Expected an {family} fit, got {m.id.name}")
    if m.gamma is None or m.d0 is None:
        raise exceptions.UsageError(f"{m.id.name} was fitted without a DIM covariate")


def dim_adjusted_prediction(m: FittedModel, obs: PartialObservation, moments: BinMoments, bin: BinRef) -> float:
    """F x + gamma (mean DIM - d0) x / mean x for an M5 fit with a common DIM coefficient."""
    _dim_checked(m, "M5")
    cell = moments.cell(obs.session, bin.index)
    if cell.n == 0:
        raise exceptions.MissingFactorError(f"{obs.session.name} bin {bin.lo:g} h has no records")
    if not cell.mean_x > 0:
        raise exceptions.DomainError(f"Mean partial yield of {obs.session.name} bin {bin.lo:g} h is not positive")
    factor = mcf_table(m).value(obs.session, bin.index)
    return factor * obs.partial_kg + m.gamma * (cell.mean_d - m.d0) * obs.partial_kg / cell.mean_x


@dataclass(frozen=True)
class DimAdjustedFactor:
    """A DIM adjusted factor with the unadjusted factor and the bias term of ignoring DIM."""

    factor: float
    unadjusted: float
    bias_term: float

    def serialize(self):
        """Convert class data into dict."""
        return {"factor": self.factor, "unadjusted": self.unadjusted, "bias_term": self.bias_term}


def dim_adjusted_mcf(m: FittedModel, grid: IntervalGrid, moments: BinMoments, bin: BinRef,
                     session: Session) -> DimAdjustedFactor:
    """1 / (alpha_j + beta t + gamma (mean DIM - d0)) for an M6 fit with DIM."""
    _dim_checked(m, "M6")
    cell = moments.cell(session, bin.index)
    if cell.n == 0:
        raise exceptions.MissingFactorError(f"{session.name} bin {bin.lo:g} h has no records")
    base = m.alpha[session] + m.beta * bin.midpoint
    shift = m.gamma * (cell.mean_d - m.d0)
    if not base + shift > 0 or not base > 0:
        raise exceptions.PoleError(f"Fitted proportion is nonpositive for {session.name} bin {bin.lo:g} h")
    return DimAdjustedFactor(1.0 / (base + shift), 1.0 / base, shift / cell.mean_x)


def ratio_factor_table(moments: BinMoments) -> FactorTable:
    """Empirical factors sum(y) / sum(x) per cell; cells without yield stay empty."""
    with np.errstate(invalid="ignore", divide="ignore"):
        entries = np.where(moments.cells["sum_x"] > 0, moments.cells["sum_y"] / moments.cells["sum_x"], np.nan)
    return FactorTable(FactorKind.multiplicative, entries, moments.grid)


def taylor_gap(moments: BinMoments, min_n: int = 30) -> np.ndarray:
    """Relative gap between mean(y/x) and mean(y)/mean(x) per cell, NaN for cells under min_n records."""
    cells = moments.cells
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio_of_means = cells["mean_y"] / cells["mean_x"]
        gap = np.abs(cells["mean_ratio"] - ratio_of_means) / ratio_of_means
    return np.where(cells["n"] >= min_n, gap, np.nan)
