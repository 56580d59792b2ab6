"""Tests for the command line interface."""

import logging

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from dailyyield.cli import cli
from dailyyield.core.status import ModelId
from dailyyield.models import storage


@pytest.fixture(autouse=True)
def restore_logging():
    """Give the root logger back its handlers after the command reconfigured it."""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def herd_csv(runner, tmp_path):
    path = tmp_path / "herd.csv"
    result = runner.invoke(cli, ["simulate", "--cows", "300", "--seed", "1", "--out", str(path)])
    assert result.exit_code == 0, result.output
    return path


def fit(runner, herd_csv, tmp_path, model):
    out = tmp_path / f"{model}.model"
    result = runner.invoke(cli, ["fit", "--model", model, "--data", str(herd_csv), "--grid", "8:16:0.5",
                                 "--out", str(out)])
    assert result.exit_code == 0, result.output
    return out


class TestSimulate:
    """The simulate command."""

    def test_rows(self, runner, tmp_path):
        out = tmp_path / "herd.csv"
        result = runner.invoke(cli, ["simulate", "--cows", "10", "--seed", "1", "--out", str(out)])
        assert result.exit_code == 0
        frame = pd.read_csv(out)
        assert list(frame.columns) == ["cow_id", "session", "interval_h", "partial_kg", "daily_kg", "dim"]
        assert len(frame) == 20

    def test_deterministic(self, runner, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for path in paths:
            runner.invoke(cli, ["simulate", "--cows", "40", "--seed", "5", "--out", str(path)])
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_no_cows(self, runner, tmp_path):
        result = runner.invoke(cli, ["simulate", "--cows", "0", "--out", str(tmp_path / "herd.csv")])
        assert result.exit_code == 2

    def test_unwritable(self, runner, tmp_path):
        result = runner.invoke(cli, ["simulate", "--cows", "5", "--out", str(tmp_path / "missing" / "herd.csv")])
        assert result.exit_code == 1
        assert "Error:" in result.output


class TestFit:
    """The fit command."""

    def test_round_trip(self, runner, herd_csv, tmp_path):
        path = fit(runner, herd_csv, tmp_path, "M3A")
        m = storage.load_model(path)
        assert m.id is ModelId.M3A
        assert str(m.grid) == "8:16:0.5"

    def test_fixed_b(self, runner, herd_csv, tmp_path):
        assert storage.load_model(fit(runner, herd_csv, tmp_path, "M2A")).b == 2.0

    def test_unknown_model(self, runner, herd_csv, tmp_path):
        result = runner.invoke(cli, ["fit", "--model", "M9", "--data", str(herd_csv), "--out", str(tmp_path / "m")])
        assert result.exit_code == 2
        assert "M7B" in result.output

    def test_bad_grid(self, runner, herd_csv, tmp_path):
        result = runner.invoke(cli, ["fit", "--model", "M2A", "--data", str(herd_csv), "--grid", "8:15:0.5",
                                     "--out", str(tmp_path / "m")])
        assert result.exit_code == 2

    def test_malformed_csv(self, runner, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("cow_id,session,interval_h,partial_kg,daily_kg,dim\n1,AM,11,12,24,150\n1,PM,x,12,24,150\n")
        result = runner.invoke(cli, ["fit", "--model", "M2A", "--data", str(path), "--out", str(tmp_path / "m")])
        assert result.exit_code == 1
        assert "Line 3" in result.output

    def test_log_model_needs_positive_yields(self, runner, herd_csv, tmp_path):
        frame = pd.read_csv(herd_csv)
        frame.loc[0, "partial_kg"] = 0
        path = tmp_path / "zero.csv"
        frame.to_csv(path, index=False)
        result = runner.invoke(cli, ["fit", "--model", "M7A", "--data", str(path), "--out", str(tmp_path / "m")])
        assert result.exit_code == 1


class TestFactors:
    """The factors command."""

    def test_multiplicative(self, runner, herd_csv, tmp_path):
        out = tmp_path / "factors.csv"
        result = runner.invoke(cli, ["factors", "--model-file", str(fit(runner, herd_csv, tmp_path, "M6B")),
                                     "--out", str(out)])
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(out)
        assert list(frame.columns) == ["session", "bin_lo", "bin_mid", "bin_hi", "kind", "value"]
        assert len(frame) == 2 * 16
        at_12 = frame.loc[frame["bin_mid"] == 12.25, "value"]
        assert ((at_12 >= 1.9) & (at_12 <= 2.1)).all()

    def test_additive_affine(self, runner, herd_csv, tmp_path):
        out = tmp_path / "factors.csv"
        runner.invoke(cli, ["factors", "--model-file", str(fit(runner, herd_csv, tmp_path, "M2B")), "--out", str(out)])
        frame = pd.read_csv(out)
        for _, rows in frame.groupby("session"):
            np.testing.assert_allclose(np.diff(rows["value"].to_numpy(), n=2), 0.0, atol=1e-4)

    def test_wrong_kind(self, runner, herd_csv, tmp_path):
        result = runner.invoke(cli, ["factors", "--model-file", str(fit(runner, herd_csv, tmp_path, "M6B")),
                                     "--kind", "additive", "--out", str(tmp_path / "f.csv")])
        assert result.exit_code == 2


class TestPredict:
    """The predict command."""

    def test_predictions_without_daily(self, runner, herd_csv, tmp_path):
        model = fit(runner, herd_csv, tmp_path, "M7A")
        unlabelled = tmp_path / "unlabelled.csv"
        pd.read_csv(herd_csv).drop(columns=["daily_kg"]).to_csv(unlabelled, index=False)
        out = tmp_path / "predictions.csv"
        result = runner.invoke(cli, ["predict", "--model-file", str(model), "--data", str(unlabelled), "--out", str(out)])
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(out)
        assert len(frame) == 600
        truth = pd.read_csv(herd_csv)["daily_kg"]
        assert np.mean(np.abs(frame["predicted_kg"] - truth)) < 1.0

    def test_factor_mode(self, runner, herd_csv, tmp_path):
        model = fit(runner, herd_csv, tmp_path, "M3A")
        out = tmp_path / "predictions.csv"
        result = runner.invoke(cli, ["predict", "--model-file", str(model), "--data", str(herd_csv),
                                     "--mode", "factor", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "predicted_kg" in pd.read_csv(out).columns


class TestBenchmark:
    """The benchmark command."""

    def test_report_and_diagnostics(self, runner, herd_csv, tmp_path):
        out = tmp_path / "report.csv"
        result = runner.invoke(cli, ["benchmark", "--data", str(herd_csv), "--models", "M2A,M6A,M7B",
                                     "--replicates", "2", "--train", "200", "--seed", "7", "--out", str(out)])
        assert result.exit_code == 0, result.output
        report = pd.read_csv(out)
        assert list(report.columns) == ["model", "status", "variance", "bias_sq", "mse", "accuracy"]
        assert sorted(report["model"]) == ["M2A", "M6A", "M7B"]
        diagnostics = pd.read_csv(tmp_path / "report_diagnostics.csv")
        assert len(diagnostics) == 6

    def test_deterministic_across_workers(self, runner, herd_csv, tmp_path):
        outputs = []
        for workers in ("1", "3"):
            out = tmp_path / f"report{workers}.csv"
            runner.invoke(cli, ["benchmark", "--data", str(herd_csv), "--models", "all", "--replicates", "3",
                                "--train", "200", "--seed", "7", "--workers", workers, "--out", str(out)])
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

    def test_single_replicate(self, runner, herd_csv, tmp_path):
        out = tmp_path / "report.csv"
        result = runner.invoke(cli, ["benchmark", "--data", str(herd_csv), "--models", "M3A", "--replicates", "1",
                                     "--train", "200", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert pd.read_csv(out)["variance"].iloc[0] == 0

    def test_unknown_models(self, runner, herd_csv, tmp_path):
        result = runner.invoke(cli, ["benchmark", "--data", str(herd_csv), "--models", "M2A,M9",
                                     "--out", str(tmp_path / "r.csv")])
        assert result.exit_code == 2

    def test_training_set_too_large(self, runner, herd_csv, tmp_path):
        result = runner.invoke(cli, ["benchmark", "--data", str(herd_csv), "--train", "300",
                                     "--out", str(tmp_path / "r.csv")])
        assert result.exit_code == 2

    def test_all_models_fail(self, runner, herd_csv, tmp_path):
        frame = pd.read_csv(herd_csv)
        frame.loc[:, "partial_kg"] = np.where(frame.index % 2 == 0, 0.0, frame["partial_kg"])
        path = tmp_path / "zero.csv"
        frame.to_csv(path, index=False)
        result = runner.invoke(cli, ["benchmark", "--data", str(path), "--models", "M7A", "--replicates", "1",
                                     "--train", "200", "--out", str(tmp_path / "r.csv")])
        assert result.exit_code == 1
        assert "failed" in pd.read_csv(tmp_path / "r.csv")["status"].iloc[0]
