"""Replicated train/test evaluation of the model catalog.

Each replicate fits every requested model on the training cows and predicts the daily yields of the
test cows. Results are reduced in replicate order, so reports do not depend on the number of worker
threads.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from dailyyield.core import exceptions, settings
from dailyyield.core.grid import IntervalGrid, build_grid
from dailyyield.core.status import ModelId, PredictMode, Session
from dailyyield.herd.records import MilkingDataset
from dailyyield.models import least_squares
from dailyyield.models.yield_models import fit_model, predict_dataset

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["model", "status", "variance", "bias_sq", "mse", "accuracy"]
DIAGNOSTIC_COLUMNS = ["model", "session", "intercept", "slope", "correlation"]


@dataclass(frozen=True)
class Split:
    """Positions (into the dataset's distinct cow ids) of the training and test cows."""

    train: np.ndarray
    test: np.ndarray


@dataclass(frozen=True)
class SplitPlan:
    """Train/test partitions of a herd, one per replicate."""

    n_cows: int
    seed: int
    splits: tuple
    folds: Optional[int] = None

    @property
    def m(self) -> int:
        return len(self.splits)

    def serialize(self):
        """Convert class data into dict."""
        return {"n_cows": self.n_cows, "seed": self.seed, "replicates": self.m, "folds": self.folds}


def make_splits(n_cows: int, n_train: int, m: int, seed: int, folds: Optional[int] = None) -> SplitPlan:
    """Draw m random train/test partitions of n_cows cows.

    With folds=K each of the m repetitions is a shuffled K-fold partition instead, giving m*K
    replicates; n_train is then implied by the fold sizes.
    """
    if m < 1:
        raise exceptions.UsageError(f"Need at least one replicate, got {m}")
    children = np.random.SeedSequence(seed).spawn(m)
    splits = []
    if folds is None:
        if not 0 < n_train < n_cows:
            raise exceptions.UsageError(f"Training size must lie strictly between 0 and {n_cows}, got {n_train}")
        for child in children:
            perm = np.random.default_rng(child).permutation(n_cows)
            splits.append(Split(np.sort(perm[:n_train]), np.sort(perm[n_train:])))
    else:
        if not 2 <= folds <= n_cows:
            raise exceptions.UsageError(f"Number of folds must lie between 2 and {n_cows}, got {folds}")
        for child in children:
            perm = np.random.default_rng(child).permutation(n_cows)
            for part in np.array_split(perm, folds):
                test = np.sort(part)
                splits.append(Split(np.setdiff1d(np.arange(n_cows), test), test))
    return SplitPlan(n_cows, seed, tuple(splits), folds)


@dataclass(frozen=True)
class Metrics:
    """Prediction error over all (replicate, test record) pairs."""

    mse: float
    variance: float
    bias_sq: float
    r2_accuracy: float
    sigma2: float
    n: int

    def serialize(self):
        """Convert class data into dict."""
        return {"mse": self.mse, "variance": self.variance, "bias_sq": self.bias_sq,
                "accuracy": self.r2_accuracy, "sigma2": self.sigma2, "n": self.n}


def accuracy(sigma2: float, mse: float) -> float:
    """sigma2 / (sigma2 + mse), the share of phenotypic variance left after prediction error."""
    return sigma2 / (sigma2 + mse)


def metrics(predictions: Sequence[np.ndarray], truths: Sequence[np.ndarray],
            keys: Optional[Sequence[np.ndarray]] = None) -> Metrics:
    """Decompose the prediction error of replicated predictions.

    predictions, truths and keys hold one array per replicate. keys identify test records across
    replicates (defaults to the position in the replicate). The variance part is the across-replicate
    variance of each record's predictions weighted by how often the record was predicted: the sum over
    records of R_i times their variance, divided by the number of predictions. This differs from the
    unweighted mean over records of their variances unless every record is predicted equally often,
    as in fold mode.
    """
    if not len(predictions):
        raise exceptions.UsageError("Need predictions from at least one replicate")
    if len(predictions) != len(truths) or (keys is not None and len(keys) != len(predictions)):
        raise exceptions.UsageError("Predictions, truths and keys must cover the same replicates")
    if keys is None:
        keys = [np.arange(len(p)) for p in predictions]
    for p, y, k in zip(predictions, truths, keys):
        if not len(p) == len(y) == len(k):
            raise exceptions.UsageError(f"Replicate with {len(p)} predictions, {len(y)} truths and {len(k)} keys")

    pred = np.concatenate([np.asarray(p, dtype=float) for p in predictions])
    truth = np.concatenate([np.asarray(y, dtype=float) for y in truths])
    if not len(pred):
        raise exceptions.UsageError("No test records to evaluate")
    _, group = np.unique(np.concatenate([np.asarray(k) for k in keys]), return_inverse=True)

    sq_err = (pred - truth) ** 2
    mse = float(sq_err.mean())
    # Sum over records of R_i times the population variance of their R_i predictions
    count = np.bincount(group)
    pred_mean = np.bincount(group, weights=pred) / count
    within = float(np.sum((pred - pred_mean[group]) ** 2))
    variance = within / len(pred)

    sigma2 = float(np.var(truth))
    per_replicate = []
    for chunk in np.split(sq_err, np.cumsum([len(p) for p in predictions])[:-1]):
        if not len(chunk):
            continue
        mse_r = float(chunk.mean())
        # Constant truths predicted without error count as perfectly accurate
        per_replicate.append(accuracy(sigma2, mse_r) if sigma2 + mse_r > 0 else 1.0)
    return Metrics(mse, variance, mse - variance, float(np.mean(per_replicate)), sigma2, len(pred))


@dataclass(frozen=True)
class DiagLine:
    """Least squares line of true on predicted daily yield, with their correlation."""

    intercept: float
    slope: float
    correlation: float

    def serialize(self):
        """Convert class data into dict."""
        return {"intercept": self.intercept, "slope": self.slope, "correlation": self.correlation}


def regression_diagnostics(truths: np.ndarray, predictions: np.ndarray, sessions: np.ndarray) -> Dict[Session, DiagLine]:
    """Regress true on predicted yields separately for AM and PM records.

    sessions holds one label per record (Session members or 'AM'/'PM').
    """
    truths = np.asarray(truths, dtype=float)
    predictions = np.asarray(predictions, dtype=float)
    labels = np.array([Session.parse(s) for s in sessions], dtype=object)
    if not len(truths) == len(predictions) == len(labels):
        raise exceptions.UsageError("Truths, predictions and sessions must have equal lengths")

    lines = {}
    for s in Session:
        mask = labels == s
        if mask.sum() < 3:
            raise exceptions.DomainError(f"Need at least 3 {s.name} records for diagnostics, got {int(mask.sum())}")
        y, yhat = truths[mask], predictions[mask]
        if np.var(yhat) == 0:
            raise exceptions.DegenerateFitError(f"{s.name} predictions have no variance")
        est = least_squares.ols_matrix(np.column_stack([np.ones(len(yhat)), yhat]), y, names=["intercept", "slope"])
        corr = float(np.corrcoef(y, yhat)[0, 1]) if np.var(y) > 0 else float("nan")
        lines[s] = DiagLine(est["intercept"], est["slope"], corr)
    return lines


@dataclass
class ModelResult:
    """Outcome of benchmarking one model."""

    model: ModelId
    metrics: Optional[Metrics] = None
    diagnostics: Dict[Session, DiagLine] = field(default_factory=dict)
    parameters: Dict[str, tuple] = field(default_factory=dict)  # name -> (mean, sd) over replicates
    error: Optional[str] = None

    @property
    def status(self) -> str:
        return "ok" if self.error is None else f"failed: {self.error}"


@dataclass
class BenchmarkReport:
    """Benchmark results of all requested models, ordered by MSE (failed models last)."""

    results: List[ModelResult]
    plan: SplitPlan
    grid: IntervalGrid

    def __getitem__(self, model: ModelId) -> ModelResult:
        for r in self.results:
            if r.model is model:
                return r
        raise KeyError(model)

    def succeeded(self) -> List[ModelResult]:
        return [r for r in self.results if r.error is None]

    def to_frame(self) -> pd.DataFrame:
        """One row per model: variance, squared bias, MSE and accuracy."""
        rows = []
        for r in self.results:
            m = r.metrics
            rows.append({
                "model": r.model.name,
                "status": r.status,
                "variance": m.variance if m else np.nan,
                "bias_sq": m.bias_sq if m else np.nan,
                "mse": m.mse if m else np.nan,
                "accuracy": m.r2_accuracy if m else np.nan,
            })
        return pd.DataFrame(rows, columns=REPORT_COLUMNS)

    def diagnostics_frame(self) -> pd.DataFrame:
        """One row per (model, session): the diagnostic line and parameter means and SDs.

        Session specific parameters (names ending in _AM or _PM) go to their session's row without
        the suffix; common parameters are repeated on both rows.
        """
        rows = []
        for r in self.succeeded():
            for s, line in r.diagnostics.items():
                row = {"model": r.model.name, "session": s.name, **line.serialize()}
                for name, (mean, sd) in r.parameters.items():
                    base, _, suffix = name.rpartition("_")
                    if suffix in ("AM", "PM"):
                        if suffix != s.name:
                            continue
                        name = base
                    row[f"{name}_mean"] = mean
                    row[f"{name}_sd"] = sd
                rows.append(row)
        frame = pd.DataFrame(rows)
        extra = [c for c in frame.columns if c not in DIAGNOSTIC_COLUMNS]
        return frame.reindex(columns=DIAGNOSTIC_COLUMNS + extra)

    def write_csv(self, path: Union[Path, str], diagnostics_path: Optional[Union[Path, str]] = None):
        """Write the report CSV and, if a path is given, the diagnostics CSV."""
        fmt = f"%.{settings.get('CSV_PRECISION', 6)}g"
        self.to_frame().to_csv(path, index=False, float_format=fmt, lineterminator="\n")
        logger.info(f"Wrote benchmark report to '{path}'")
        if diagnostics_path is not None:
            self.diagnostics_frame().to_csv(diagnostics_path, index=False, float_format=fmt, lineterminator="\n")
            logger.info(f"Wrote benchmark diagnostics to '{diagnostics_path}'")


@dataclass(frozen=True)
class _Replicate:
    train: MilkingDataset
    test: MilkingDataset
    keys: np.ndarray  # row positions of the test records in the full dataset


def _prepare(data: MilkingDataset, plan: SplitPlan) -> List[_Replicate]:
    cows = data.cow_ids
    if len(cows) != plan.n_cows:
        raise exceptions.UsageError(f"Split plan is for {plan.n_cows} cows but the data has {len(cows)}")
    cow_col = data.frame["cow_id"]
    replicates = []
    for split in plan.splits:
        test_mask = cow_col.isin(cows[split.test]).to_numpy()
        replicates.append(_Replicate(data.subset(~test_mask), data.subset(test_mask), np.nonzero(test_mask)[0]))
    return replicates


def run_benchmark(data: MilkingDataset, model_ids: Iterable[ModelId], plan: SplitPlan, grid: IntervalGrid,
                  workers: Optional[int] = None, use_dim: bool = False) -> BenchmarkReport:
    """Fit and evaluate every model on every replicate of the plan.

    A model that fails to fit or predict in any replicate is reported as failed; the others are
    unaffected.
    """
    data.require_daily()
    workers = workers or settings.get("BENCH_WORKERS", 1)
    replicates = _prepare(data, plan)
    results = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for model_id in model_ids:
            results.append(_evaluate(model_id, replicates, grid, pool, use_dim and model_id.supports_dim))
    results.sort(key=lambda r: (r.error is not None, r.metrics.mse if r.metrics else np.inf))
    return BenchmarkReport(results, plan, grid)


def _evaluate(model_id: ModelId, replicates: List[_Replicate], grid: IntervalGrid, pool: ThreadPoolExecutor,
              use_dim: bool) -> ModelResult:
    def run(rep: _Replicate):
        m = fit_model(model_id, rep.train, grid, use_dim=use_dim)
        return predict_dataset(m, rep.test), m.parameters()

    try:
        # map returns results in submission order
        outcomes = list(pool.map(run, replicates))
        predictions = [pred for pred, _ in outcomes]
        truths = [rep.test.y for rep in replicates]
        result = ModelResult(model_id, metrics=metrics(predictions, truths, [rep.keys for rep in replicates]))
        sessions = np.concatenate([np.where(rep.test.is_am, "AM", "PM") for rep in replicates])
        result.diagnostics = regression_diagnostics(np.concatenate(truths), np.concatenate(predictions), sessions)
    except (exceptions.YieldError, ValueError, np.linalg.LinAlgError) as e:
        logger.warning(f"Benchmark of {model_id.name} failed: {e}")
        return ModelResult(model_id, error=type(e).__name__)

    params = pd.DataFrame([p for _, p in outcomes])
    result.parameters = {name: (float(params[name].mean()), float(params[name].std()) if len(params) > 1 else 0.0)
                         for name in params.columns}
    logger.info(f"{model_id.name}: mse {result.metrics.mse:.4f}, accuracy {result.metrics.r2_accuracy:.4f}")
    return result


def discretization_bias(model_id: ModelId, data: MilkingDataset, widths: Sequence[float],
                        bounds: Optional[tuple] = None) -> Dict[float, float]:
    """Mean absolute difference between direct and factor-table predictions for several bin widths.

    The model is refitted on data for every grid; bounds default to those of the configured grid.
    """
    if not model_id.supports_direct:
        raise exceptions.UsageError(f"{model_id.name} has no direct prediction to compare with")
    if bounds is None:
        lo, hi, _ = settings.get("GRID", "8:16:0.5").split(":")
        bounds = (float(lo), float(hi))
    gaps = {}
    for width in widths:
        grid = build_grid(bounds[0], bounds[1], width)
        m = fit_model(model_id, data, grid)
        direct = predict_dataset(m, data, PredictMode.direct)
        factor = predict_dataset(m, data, PredictMode.factor)
        gaps[width] = float(np.mean(np.abs(direct - factor)))
        logger.debug(f"{model_id.name} on grid {grid}: mean |direct - factor| = {gaps[width]:.4g} kg")
    return gaps
