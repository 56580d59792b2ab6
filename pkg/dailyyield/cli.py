"""Command line interface: simulate herds, fit models, export factors, predict and benchmark."""

import functools
import logging
from pathlib import Path

import click

from dailyyield import __version__, configure_logging
from dailyyield.bench import bench_eval
from dailyyield.core import exceptions, settings, utils
from dailyyield.core.grid import parse_grid_spec
from dailyyield.core.status import FactorKind, ModelId, PredictMode
from dailyyield.factors import correction_factors
from dailyyield.herd import curve_sim, records
from dailyyield.models import storage, yield_models

logger = logging.getLogger(__name__)

MODEL_CHOICE = click.Choice([m.name for m in ModelId], case_sensitive=False)


def handle_errors(function):
    """Turn library errors into a one-line message and exit code (2 for usage errors, 1 otherwise)."""
    @functools.wraps(function)
    def decorator(*args, **kwargs):
        try:
            return function(*args, **kwargs)
        except (exceptions.UsageError, exceptions.ConfigError) as e:
            click.echo(utils.response(str(e), err=True), err=True)
            raise SystemExit(2)
        except (exceptions.YieldError, OSError) as e:
            click.echo(utils.response(str(e), err=True, error=type(e).__name__), err=True)
            raise SystemExit(1)
    return decorator


def _grid(spec):
    return parse_grid_spec(spec or settings.get("GRID"))


@click.group()
@click.version_option(__version__, prog_name="dailyyield")
@click.option("--debug", is_flag=True, help="Log debug messages to the console.")
def cli(debug):
    """Estimate daily milk yields from single AM or PM milkings."""
    configure_logging(debug)


@cli.command()
@click.option("--cows", type=click.IntRange(min=1), default=None, help="Number of cows.")
@click.option("--seed", type=int, default=None, help="Random seed.")
@click.option("--milking-sd", type=click.FloatRange(min=0), default=None,
              help="Milking-to-milking variation (kg) added to each partial yield.")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Records CSV to write.")
@handle_errors
def simulate(cows, seed, milking_sd, out):
    """Simulate a herd and write its records CSV."""
    overrides = {"n_cows": cows, "seed": seed, "milking_sd": milking_sd}
    cfg = curve_sim.SimConfig(**{k: v for k, v in overrides.items() if v is not None})
    dataset = curve_sim.simulate_herd(cfg)
    records.write_csv(dataset, out)


@cli.command()
@click.option("--model", "model_name", type=MODEL_CHOICE, required=True, help="Model id.")
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True, help="Labelled records CSV.")
@click.option("--grid", "grid_spec", default=None, help="Interval grid LO:HI:WIDTH in hours.")
@click.option("--use-dim", is_flag=True, help="Fit a DIM covariate.")
@click.option("--slope-method", type=click.Choice(yield_models.SLOPE_METHODS), default="ratio",
              help="Per-bin factor estimator for M5.")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Model file to write.")
@handle_errors
def fit(model_name, data, grid_spec, use_dim, slope_method, out):
    """Fit a model and write it to a model file."""
    grid = _grid(grid_spec)
    dataset = records.read_csv(data)
    m = yield_models.fit_model(ModelId[model_name.upper()], dataset, grid, use_dim=use_dim,
                               slope_method=slope_method)
    storage.save_model(m, out)


@cli.command()
@click.option("--model-file", type=click.Path(exists=True, dir_okay=False), required=True, help="Fitted model file.")
@click.option("--kind", type=click.Choice([k.name for k in FactorKind]), default=None,
              help="Factor kind (defaults to the model's own kind).")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Factors CSV to write.")
@handle_errors
def factors(model_file, kind, out):
    """Export a model's correction factor table."""
    m = storage.load_model(model_file)
    kind = FactorKind[kind] if kind else m.id.factor_kind
    if kind is FactorKind.additive:
        table = correction_factors.acf_table(m)
    else:
        table = correction_factors.mcf_table(m)
    fmt = f"%.{settings.get('CSV_PRECISION', 6)}g"
    table.to_frame().to_csv(out, index=False, float_format=fmt, lineterminator="\n")
    logger.info(f"Wrote {kind.name} factors of {m.id.name} to '{out}'")


@cli.command()
@click.option("--model-file", type=click.Path(exists=True, dir_okay=False), required=True, help="Fitted model file.")
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True, help="Records CSV.")
@click.option("--mode", type=click.Choice([p.name for p in PredictMode]), default=None,
              help="Prediction mode (defaults to the model's own mode).")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Predictions CSV to write.")
@handle_errors
def predict(model_file, data, mode, out):
    """Predict daily yields for a records CSV (daily_kg may be missing)."""
    m = storage.load_model(model_file)
    dataset = records.read_csv(data, require_daily=False)
    predictions = yield_models.predict_dataset(m, dataset, PredictMode[mode] if mode else None)
    frame = dataset.frame.copy()
    frame["predicted_kg"] = predictions
    fmt = f"%.{settings.get('CSV_PRECISION', 6)}g"
    frame.to_csv(out, index=False, float_format=fmt, lineterminator="\n")
    logger.info(f"Wrote {len(frame)} predictions to '{out}'")


@cli.command()
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True, help="Labelled records CSV.")
@click.option("--models", "model_list", default="all", help="'all' or a comma separated list of model ids.")
@click.option("--replicates", type=click.IntRange(min=1), default=None, help="Number of train/test splits.")
@click.option("--train", type=click.IntRange(min=1), default=None, help="Training cows per split.")
@click.option("--folds", type=click.IntRange(min=2), default=None, help="Use K-fold partitions instead of splits.")
@click.option("--seed", type=int, default=None, help="Random seed for the splits.")
@click.option("--grid", "grid_spec", default=None, help="Interval grid LO:HI:WIDTH in hours.")
@click.option("--workers", type=click.IntRange(min=1), default=None, help="Threads used for replicates.")
@click.option("--use-dim", is_flag=True, help="Fit a DIM covariate where the model supports it.")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Report CSV to write.")
@click.option("--diagnostics", type=click.Path(dir_okay=False), default=None,
              help="Diagnostics CSV (defaults to <out>_diagnostics.csv).")
@handle_errors
def benchmark(data, model_list, replicates, train, folds, seed, grid_spec, workers, use_dim, out, diagnostics):
    """Evaluate models over replicated train/test splits."""
    try:
        model_ids = ModelId.parse_list(model_list)
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--models")
    if not model_ids:
        raise click.BadParameter("No model ids given", param_hint="--models")

    grid = _grid(grid_spec)
    dataset = records.read_csv(data)
    plan = bench_eval.make_splits(
        len(dataset.cow_ids),
        train or settings.get("BENCH_TRAIN"),
        replicates or settings.get("BENCH_REPLICATES"),
        settings.get("SIM_SEED") if seed is None else seed,
        folds=folds,
    )
    report = bench_eval.run_benchmark(dataset, model_ids, plan, grid, workers=workers, use_dim=use_dim)

    out = Path(out)
    diagnostics = diagnostics or out.with_name(f"{out.stem}_diagnostics.csv")
    report.write_csv(out, diagnostics)
    if not report.succeeded():
        raise exceptions.YieldError("No model could be evaluated")


def main():
    """Run the command line interface."""
    cli(prog_name="dailyyield")
