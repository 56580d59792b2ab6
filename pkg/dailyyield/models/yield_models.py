"""The model catalog: fitting M1 to M7B and predicting daily yields from single milkings.

Models with the same number share one fit (M3A and M3B, say); the suffix only decides whether a
daily yield is predicted directly from the coefficients (A) or through a factor table built on the
interval grid (B). M1, M4 and M5 only exist as factor tables.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Optional

import numpy as np

from dailyyield.core import exceptions, settings
from dailyyield.core.grid import IntervalGrid, bin_of
from dailyyield.core.status import ModelId, PredictMode, Session
from dailyyield.herd.records import MilkingDataset, PartialObservation
from dailyyield.models import least_squares
from dailyyield.models.moments import BinMoments, class_stats

logger = logging.getLogger(__name__)

SLOPE_METHODS = ("ratio", "origin")


@dataclass(frozen=True)
class FittedModel:
    """A model id with its estimated coefficients, the grid and the training moments.

    alpha, beta, gamma and b are the coefficients of the regression families (M2, M3, M6, M7);
    per_bin holds the class means (M1), the per-session quadratic coefficients (M4) or the per-bin
    slopes and smoothing lines (M5). Arrays in per_bin have shape (2, bin_count), AM first.
    """

    id: ModelId
    grid: IntervalGrid
    moments: BinMoments
    alpha: Dict[Session, float] = field(default_factory=dict)
    beta: Optional[float] = None
    gamma: Optional[float] = None
    b: Optional[float] = None
    d0: Optional[float] = None
    per_bin: dict = field(default_factory=dict)
    standard_errors: dict = field(default_factory=dict)
    residual_variance: Optional[float] = None
    options: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def __str__(self):
        return str(self.parameters())

    def as_id(self, model_id: ModelId) -> "FittedModel":
        """The same fit under another id of its family (e.g. M3B from an M3A fit)."""
        if model_id.family != self.id.family:
            raise exceptions.UsageError(f"{model_id.name} does not share a fit with {self.id.name}")
        return replace(self, id=model_id)

    def parameters(self) -> Dict[str, float]:
        """Flat mapping of the estimated parameters."""
        params = {}
        family = self.id.family
        if family in ("M2", "M3", "M6", "M7"):
            for s in Session:
                params[f"alpha_{s.name}"] = self.alpha[s]
            params["beta"] = self.beta
            if self.b is not None:
                params["b"] = self.b
            if self.gamma is not None:
                params["gamma"] = self.gamma
        elif family == "M4":
            for s in Session:
                a, b1, b2 = self.per_bin["curve"][s]
                params.update({f"a_{s.name}": a, f"b1_{s.name}": b1, f"b2_{s.name}": b2})
        elif family == "M5":
            for s in Session:
                a, slope = self.per_bin["line"][s]
                params.update({f"alpha_{s.name}": a, f"beta_{s.name}": slope})
            if self.gamma is not None:
                params["gamma"] = self.gamma
        return {k: float(v) for k, v in params.items()}

    def linear_predictor(self, is_am: np.ndarray, t: np.ndarray, d: Optional[np.ndarray] = None) -> np.ndarray:
        """alpha_j + beta t (+ gamma (d - d0) where DIM is known) for the regression families."""
        if self.beta is None:
            raise exceptions.UsageError(f"{self.id.name} has no interval coefficient")
        eta = np.where(is_am, self.alpha[Session.AM], self.alpha[Session.PM]) + self.beta * t
        if self.gamma is not None and d is not None:
            eta = eta + self.gamma * np.where(np.isnan(d), 0.0, d - self.d0)
        return eta


def fit_model(model_id: ModelId, data: MilkingDataset, grid: IntervalGrid, use_dim: bool = False,
              slope_method: str = "ratio", min_bin_records: Optional[int] = None) -> FittedModel:
    """Fit one model of the catalog on labelled records."""
    data.require_daily()
    if slope_method not in SLOPE_METHODS:
        raise exceptions.UsageError(f"Unknown slope method {slope_method!r}, expected one of {SLOPE_METHODS}")
    if use_dim and not model_id.supports_dim:
        raise exceptions.UsageError(f"{model_id.name} does not take a DIM covariate")
    min_n = min_bin_records or settings.get("MIN_BIN_RECORDS", 5)
    moments = class_stats(data, grid)
    base = FittedModel(model_id, grid, moments, options={"use_dim": use_dim, "slope_method": slope_method,
                                                          "min_bin_records": min_n})

    d0 = _dim_center(data) if use_dim else None
    family = model_id.family
    if family == "M1":
        model = _fit_class_means(base, min_n)
    elif family in ("M2", "M3", "M6", "M7"):
        model = _fit_regression(base, data, d0)
    elif family == "M4":
        model = _fit_quadratic_proportions(base, min_n)
    else:
        model = _fit_reciprocal_slopes(base, data, d0, min_n, slope_method)
    logger.debug(f"Fitted {model_id.name}: {model.parameters()}")
    return model


def _dim_center(data: MilkingDataset) -> float:
    if not data.has_dim():
        raise exceptions.UsageError("A DIM covariate was requested but not all records carry DIM")
    d = data.d
    if np.var(d) == 0:
        raise exceptions.UsageError("A DIM covariate was requested but DIM is constant")
    return float(d.mean())


def _fit_class_means(base: FittedModel, min_n: int) -> FittedModel:
    """M1: mean of y - 2x per (session, bin)."""
    cells = base.moments.cells
    with np.errstate(invalid="ignore"):
        mu = cells["mean_y"] - 2 * cells["mean_x"]
    sparse = [(s.name, i) for s in Session for i in range(base.grid.bin_count)
              if cells["n"][s.index - 1, i] < min_n]
    flags = []
    if sparse:
        flags.append(f"{len(sparse)} cells with fewer than {min_n} records")
        logger.debug(f"M1 cells with fewer than {min_n} records: {sparse}")
    return replace(base, b=2.0, per_bin={"mu": mu}, flags=flags)


def _design(data: MilkingDataset, d0: Optional[float], extra: Optional[np.ndarray], extra_name: str):
    """Session intercepts, interval, optional DIM and an optional partial-yield column."""
    is_am = data.is_am.astype(float)
    columns = [is_am, 1 - is_am, data.t]
    names = ["alpha_AM", "alpha_PM", "beta"]
    if d0 is not None:
        columns.append(data.d - d0)
        names.append("gamma")
    if extra is not None:
        columns.append(extra)
        names.append(extra_name)
    return np.column_stack(columns), names


def _fit_regression(base: FittedModel, data: MilkingDataset, d0: Optional[float]) -> FittedModel:
    """M2, M3, M6 and M7 on the individual records."""
    x, y = data.x, data.y
    family = base.id.family
    if family == "M2":
        X, names = _design(data, d0, None, "")
        response = y - 2 * x
    elif family == "M3":
        X, names = _design(data, d0, x, "b")
        response = y
    elif family == "M6":
        if np.any(y <= 0):
            raise exceptions.DomainError(f"{base.id.name} needs positive daily yields")
        X, names = _design(data, d0, None, "")
        response = x / y
    else:
        bad = (x <= 0) | (y <= 0)
        if np.any(bad):
            offenders = data.frame.loc[bad, ["cow_id", "session"]].head(10)
            listing = ", ".join(f"{r.cow_id}/{r.session}" for r in offenders.itertuples(index=False))
            raise exceptions.DomainError(f"{base.id.name} needs positive yields, offending records: {listing}")
        X, names = _design(data, d0, np.log(x), "b")
        response = np.log(y)

    est = least_squares.ols_matrix(X, response, names=names, center=[2], intercepts=[0, 1])
    b = est["b"] if "b" in names else (2.0 if family == "M2" else None)
    return replace(
        base,
        alpha={Session.AM: est["alpha_AM"], Session.PM: est["alpha_PM"]},
        beta=est["beta"],
        gamma=est["gamma"] if d0 is not None else None,
        b=b,
        d0=d0,
        standard_errors={name: est.se(name) for name in names},
        residual_variance=est.residual_variance,
    )


def _fit_quadratic_proportions(base: FittedModel, min_n: int) -> FittedModel:
    """M4: per-bin sum(x)/sum(y) on midpoint and midpoint squared, separately per session."""
    cells = base.moments.cells
    mids = np.array(base.grid.midpoints())
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = cells["sum_x"] / cells["sum_y"]
    curve, ses = {}, {}
    for s in Session:
        use = base.moments.populated(s, min_n)
        X = np.column_stack([np.ones(use.sum()), mids[use], mids[use] ** 2])
        est = least_squares.ols_matrix(X, ratio[s.index - 1, use], names=["a", "b1", "b2"])
        curve[s] = [float(c) for c in est.coefficients]
        ses.update({f"{name}_{s.name}": est.se(name) for name in est.names})
    return replace(base, per_bin={"ratio": ratio, "curve": curve}, standard_errors=ses)


def _fit_reciprocal_slopes(base: FittedModel, data: MilkingDataset, d0: Optional[float], min_n: int,
                           slope_method: str) -> FittedModel:
    """M5: per-bin factors, then a linear smoothing of their reciprocals per session."""
    grid, moments = base.grid, base.moments
    cells = moments.cells
    x, y = data.x, data.y
    cell = np.where(data.is_am, 0, 1) * grid.bin_count + grid.indices(data.t)

    slope = np.full((2, grid.bin_count), np.nan)
    for s in Session:
        for i in np.nonzero(moments.populated(s, min_n))[0]:
            members = cell == (s.index - 1) * grid.bin_count + i
            if slope_method == "ratio":
                slope[s.index - 1, i] = least_squares.ratio_of_sums(x[members], y[members])
            else:
                slope[s.index - 1, i] = least_squares.origin_fit(x[members], y[members])

    gamma, bias, ses = None, None, {}
    if d0 is not None:
        gamma, gamma_se = _common_dim_slope(cell, x, y, data.d - d0, 2 * grid.bin_count)
        ses["gamma"] = gamma_se
        with np.errstate(invalid="ignore"):
            bias = gamma * (cells["mean_d"] - d0) / cells["mean_x"]
        slope = slope - bias

    mids = np.array(grid.midpoints())
    line = {}
    for s in Session:
        use = ~np.isnan(slope[s.index - 1])
        X = np.column_stack([np.ones(use.sum()), mids[use]])
        est = least_squares.ols_matrix(X, 1.0 / slope[s.index - 1, use], names=["alpha", "beta"])
        line[s] = [float(c) for c in est.coefficients]
        ses.update({f"{name}_{s.name}": est.se(name) for name in est.names})
    per_bin = {"slope": slope, "line": line}
    if bias is not None:
        per_bin["bias"] = bias
    return replace(base, per_bin=per_bin, gamma=gamma, d0=d0, standard_errors=ses)


def _common_dim_slope(cell: np.ndarray, x: np.ndarray, y: np.ndarray, dc: np.ndarray, n_cells: int):
    """Common DIM coefficient of y = F_cell x + gamma (d - d0), fitted jointly over all cells."""
    present = np.unique(cell)
    columns = [np.where(cell == c, x, 0.0) for c in present]
    columns.append(dc)
    names = [f"F{c}" for c in present] + ["gamma"]
    est = least_squares.ols_matrix(np.column_stack(columns), y, names=names)
    return est["gamma"], est.se("gamma")


def predict_arrays(m: FittedModel, is_am: np.ndarray, t: np.ndarray, x: np.ndarray,
                   d: Optional[np.ndarray] = None, mode: Optional[PredictMode] = None) -> np.ndarray:
    """Predict daily yields for many observations at once."""
    mode = mode or m.id.default_mode
    is_am = np.asarray(is_am, dtype=bool)
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(t <= 0):
        raise exceptions.DomainError("Milking intervals must be positive")

    if mode is PredictMode.direct:
        pred = _predict_direct(m, is_am, t, x, d)
    else:
        pred = _predict_factor(m, is_am, t, x)

    negative = pred < 0
    if np.any(negative):
        logger.warning(f"{m.id.name}: {int(negative.sum())} negative predictions clamped to 0")
        pred = np.where(negative, 0.0, pred)
    return pred


def _predict_direct(m: FittedModel, is_am, t, x, d) -> np.ndarray:
    if not m.id.supports_direct:
        raise exceptions.UsageError(f"{m.id.name} has no direct prediction, use factor mode")
    eta = m.linear_predictor(is_am, t, d)
    family = m.id.family
    if family in ("M2", "M3"):
        return eta + m.b * x
    if family == "M6":
        if np.any(eta <= 0):
            raise exceptions.PoleError(f"{m.id.name}: fitted proportion is nonpositive at some intervals")
        return x / eta
    return x ** m.b * np.exp(eta)


def _predict_factor(m: FittedModel, is_am, t, x) -> np.ndarray:
    from dailyyield.factors import correction_factors

    table = correction_factors.factor_table(m)
    values = table.lookup(is_am, t)
    if table.kind.name == "additive":
        return values + table.b * x
    return values * x


def predict_daily(m: FittedModel, obs: PartialObservation, mode: Optional[PredictMode] = None) -> float:
    """Predict the daily yield of one sampled milking."""
    mode = mode or m.id.default_mode
    if mode is PredictMode.factor:
        # Validates the interval and reports clamping
        bin_of(m.grid, obs.interval_h)
    d = None if obs.dim is None else np.array([obs.dim], dtype=float)
    pred = predict_arrays(m, np.array([obs.session is Session.AM]), np.array([obs.interval_h]),
                          np.array([obs.partial_kg]), d, mode)
    return float(pred[0])


def predict_dataset(m: FittedModel, data: MilkingDataset, mode: Optional[PredictMode] = None) -> np.ndarray:
    """Predict daily yields for every record of a dataset."""
    d = data.d if data.has_dim() else None
    return predict_arrays(m, data.is_am, data.t, data.x, d, mode)
