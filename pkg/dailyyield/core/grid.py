"""Milking interval classes: a uniform grid of interval bins symmetric about 12 hours."""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from dailyyield.core import exceptions

logger = logging.getLogger(__name__)

# Relative tolerance used when checking that the span is a whole number of bins
_DIVISIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class BinRef:
    """One interval bin, half-open [lo, hi)."""

    index: int
    lo: float
    hi: float
    clamped: bool = False

    @property
    def midpoint(self) -> float:
        return (self.lo + self.hi) / 2

    def serialize(self):
        """Convert class data into dict."""
        return {"index": self.index, "lo": self.lo, "hi": self.hi, "midpoint": self.midpoint}


@dataclass(frozen=True)
class IntervalGrid:
    """Uniform partition of [lo, hi) hours into bins of equal width."""

    lo: float
    hi: float
    width: float

    @property
    def bin_count(self) -> int:
        return int(round((self.hi - self.lo) / self.width))

    def __str__(self):
        return f"{self.lo:g}:{self.hi:g}:{self.width:g}"

    def serialize(self):
        """Convert class data into dict."""
        return {"lo": self.lo, "hi": self.hi, "width": self.width}

    def bin(self, index: int, clamped: bool = False) -> BinRef:
        """Get the bin with the given index."""
        if not 0 <= index < self.bin_count:
            raise exceptions.DomainError(f"Bin index {index} outside grid {self}")
        return BinRef(index, self.lo + index * self.width, self.lo + (index + 1) * self.width, clamped)

    def bins(self) -> List[BinRef]:
        """Get all bins in order."""
        return [self.bin(i) for i in range(self.bin_count)]

    def midpoints(self) -> List[float]:
        return [b.midpoint for b in self.bins()]

    def indices(self, t) -> np.ndarray:
        """Get the (clamped) bin indices of many intervals.

        The floored quotient is moved by one bin where rounding put t outside [lo + i*width, lo + (i+1)*width),
        so every t lies in the bin that bin(i) describes.
        """
        t = np.asarray(t, dtype=float)
        index = np.floor((t - self.lo) / self.width).astype(int)
        index = np.where(t < self.lo + index * self.width, index - 1, index)
        index = np.where(t >= self.lo + (index + 1) * self.width, index + 1, index)
        return np.clip(index, 0, self.bin_count - 1)

    def index_of(self, t: float) -> int:
        """Get the (clamped) bin index of interval t without building a BinRef."""
        return int(self.indices(t))


def build_grid(lo: float, hi: float, width: float) -> IntervalGrid:
    """Build an interval grid, checking divisibility and symmetry about 12 hours."""
    if not lo < hi:
        raise exceptions.ConfigError(f"Grid lower bound {lo} must be below upper bound {hi}")
    if not width > 0:
        raise exceptions.ConfigError(f"Grid width must be positive, got {width}")
    if lo <= 0:
        raise exceptions.ConfigError(f"Grid lower bound must be positive, got {lo}")
    n_bins = (hi - lo) / width
    if abs(n_bins - round(n_bins)) > _DIVISIBILITY_TOL * max(1.0, n_bins):
        raise exceptions.ConfigError(f"Grid span {hi - lo:g} h is not divisible by width {width:g} h")
    if abs(lo + hi - 24) > _DIVISIBILITY_TOL:
        raise exceptions.ConfigError(f"Grid [{lo:g}, {hi:g}) is not symmetric about 12 h")
    return IntervalGrid(float(lo), float(hi), float(width))


def parse_grid_spec(spec: str) -> IntervalGrid:
    """Parse a grid given as 'LO:HI:WIDTH'."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise exceptions.ConfigError(f"Grid spec {spec!r} must have the form LO:HI:WIDTH")
    try:
        lo, hi, width = (float(p) for p in parts)
    except ValueError:
        raise exceptions.ConfigError(f"Grid spec {spec!r} contains non-numeric parts") from None
    return build_grid(lo, hi, width)


def bin_of(grid: IntervalGrid, t: float) -> BinRef:
    """Get the bin containing interval t, clamping to the edge bins outside the grid."""
    if not t > 0:
        raise exceptions.DomainError(f"Milking interval must be positive, got {t}")
    clamped = not grid.lo <= t < grid.hi
    if clamped:
        logger.debug(f"Interval {t:g} h outside grid {grid}, clamped to edge bin")
    return grid.bin(grid.index_of(t), clamped=clamped)


def complement_bin(grid: IntervalGrid, b: BinRef) -> BinRef:
    """Get the bin containing 24 h minus the midpoint of b."""
    if abs(grid.lo + grid.hi - 24) > _DIVISIBILITY_TOL:
        raise exceptions.ConfigError(f"Grid {grid} is not symmetric about 12 h")
    return grid.bin(grid.bin_count - 1 - b.index)
