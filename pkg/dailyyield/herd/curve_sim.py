"""Synthetic herds: per-cow milk accumulation curves, AM/PM intervals and partial yields.

Each cow gets a curve y(t) = y720 (1 + k) tau / (k + tau) with tau = t / 12 h, so that y(12 h) = y720
and y saturates at y720 (1 + k). The AM interval is drawn from a truncated normal distribution and
the PM interval is its complement to 24 hours.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np
import pandas as pd
from scipy import stats

from dailyyield.core import exceptions, settings
from dailyyield.core.status import Session
from dailyyield.herd.records import COLUMNS, MilkingDataset

logger = logging.getLogger(__name__)

HOURS_720 = 12.0  # 720 minutes


@dataclass(frozen=True)
class CurveParams:
    """Parameters of one cow's milk accumulation curve."""

    y720: float  # kg accumulated over a 720 minute interval
    k: float     # half-saturation in 12 hour units

    def __post_init__(self):
        if not self.y720 > 0 or not self.k > 0:
            raise exceptions.DomainError(f"Curve parameters must be positive, got y720={self.y720}, k={self.k}")


def _default(key):
    return field(default_factory=lambda: settings.get(key))


@dataclass(frozen=True)
class SimConfig:
    """Settings for simulating a herd; defaults come from the configuration."""

    n_cows: int = _default("SIM_COWS")
    y720_mean: float = _default("SIM_Y720_MEAN")
    y720_sd: float = _default("SIM_Y720_SD")
    k_mean: float = _default("SIM_K_MEAN")
    k_sd: float = _default("SIM_K_SD")
    interval_mean: float = _default("SIM_INTERVAL_MEAN")
    interval_sd: float = _default("SIM_INTERVAL_SD")
    interval_lo: float = _default("SIM_INTERVAL_LO")
    interval_hi: float = _default("SIM_INTERVAL_HI")
    param_lo_sd_mult: float = _default("SIM_PARAM_LO_SD_MULT")
    milking_sd: float = _default("MILKING_NOISE_SD")
    dim: float = _default("SIMULATED_DIM")
    seed: int = _default("SIM_SEED")

    def __post_init__(self):
        if self.n_cows < 1:
            raise exceptions.ConfigError(f"Number of cows must be at least 1, got {self.n_cows}")
        for name in ("y720_sd", "k_sd", "interval_sd", "param_lo_sd_mult"):
            if not getattr(self, name) > 0:
                raise exceptions.ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.interval_lo < self.interval_mean < self.interval_hi:
            raise exceptions.ConfigError(
                f"Interval mean {self.interval_mean} must lie inside ({self.interval_lo}, {self.interval_hi})")
        if self.interval_lo <= 0 or self.interval_hi >= 24:
            raise exceptions.ConfigError("Interval truncation bounds must lie inside (0, 24) hours")
        if self.milking_sd < 0:
            raise exceptions.ConfigError(f"milking_sd must be nonnegative, got {self.milking_sd}")

    def serialize(self):
        """Convert class data into dict."""
        return asdict(self)


def curve_yield(p: CurveParams, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Yield (kg) accumulated over an interval of t hours."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise exceptions.DomainError(f"Milking interval must be nonnegative, got {t}")
    y = _curve(p.y720, p.k, t_arr)
    return float(y) if np.ndim(y) == 0 else y


def sample_tn(mu: float, sd: float, lo: float, hi: float, rng: np.random.Generator,
              size: Optional[int] = None):
    """Draw from Normal(mu, sd) conditioned on [lo, hi]."""
    if not sd > 0:
        raise exceptions.DomainError(f"Standard deviation must be positive, got {sd}")
    if not lo < hi:
        raise exceptions.DomainError(f"Empty truncation interval [{lo}, {hi}]")
    if not lo < mu < hi:
        raise exceptions.DomainError(f"Mean {mu} outside truncation interval [{lo}, {hi}]")
    a, b = (lo - mu) / sd, (hi - mu) / sd
    draws = stats.truncnorm.rvs(a, b, loc=mu, scale=sd, size=size, random_state=rng)
    # Guard against rounding at the bounds for degenerate SDs
    draws = np.clip(draws, lo, hi)
    return float(draws) if size is None else draws


def _streams(seed: int):
    """Independent generators for curve heights, curve shapes, intervals and milking noise."""
    children = np.random.SeedSequence(seed).spawn(4)
    return [np.random.default_rng(c) for c in children]


def simulate_params(cfg: SimConfig, rng_y720: np.random.Generator, rng_k: np.random.Generator):
    """Draw y720 and k for every cow from truncated normals at mean +/- param_lo_sd_mult SDs."""
    m = cfg.param_lo_sd_mult
    y720_lo = max(cfg.y720_mean - m * cfg.y720_sd, np.nextafter(0, 1))
    k_lo = max(cfg.k_mean - m * cfg.k_sd, np.nextafter(0, 1))
    y720 = sample_tn(cfg.y720_mean, cfg.y720_sd, y720_lo, cfg.y720_mean + m * cfg.y720_sd, rng_y720, cfg.n_cows)
    k = sample_tn(cfg.k_mean, cfg.k_sd, k_lo, cfg.k_mean + m * cfg.k_sd, rng_k, cfg.n_cows)
    return y720, k


def simulate_herd(cfg: Optional[SimConfig] = None) -> MilkingDataset:
    """Simulate one AM and one PM record per cow; the daily yield is the sum of both milkings."""
    cfg = cfg or SimConfig()
    rng_y720, rng_k, rng_t, rng_e = _streams(cfg.seed)
    y720, k = simulate_params(cfg, rng_y720, rng_k)
    t_am = sample_tn(cfg.interval_mean, cfg.interval_sd, cfg.interval_lo, cfg.interval_hi, rng_t, cfg.n_cows)
    t_pm = 24.0 - t_am

    x_am = _curve(y720, k, t_am)
    x_pm = _curve(y720, k, t_pm)
    if cfg.milking_sd > 0:
        noise = rng_e.normal(0.0, cfg.milking_sd, size=(2, cfg.n_cows))
        x_am = np.maximum(x_am + noise[0], 0.0)
        x_pm = np.maximum(x_pm + noise[1], 0.0)
    daily = x_am + x_pm

    cow_ids = np.arange(1, cfg.n_cows + 1)
    # Records ordered cow by cow, AM before PM
    frame = pd.DataFrame({
        "cow_id": np.repeat(cow_ids, 2),
        "session": np.tile([Session.AM.name, Session.PM.name], cfg.n_cows),
        "interval_h": np.column_stack([t_am, t_pm]).ravel(),
        "partial_kg": np.column_stack([x_am, x_pm]).ravel(),
        "daily_kg": np.repeat(daily, 2),
        "dim": np.full(2 * cfg.n_cows, float(cfg.dim)),
    }, columns=COLUMNS)

    in_range = np.mean((t_am >= 9) & (t_am <= 15))
    logger.info(f"Simulated {cfg.n_cows} cows (seed {cfg.seed}): mean daily yield {daily.mean():.2f} kg, "
                f"{100 * in_range:.1f}% of AM intervals in [9, 15] h")
    return MilkingDataset(frame, {"seed": cfg.seed, "config": cfg.serialize()})


def _curve(y720: np.ndarray, k: np.ndarray, t: np.ndarray) -> np.ndarray:
    tau = t / HOURS_720
    return y720 * (1 + k) * tau / (k + tau)
