"""Tests for the replicated train/test benchmark."""

import numpy as np
import pytest

from dailyyield.bench import bench_eval
from dailyyield.bench.bench_eval import (Split, SplitPlan, accuracy, discretization_bias, make_splits, metrics,
                                         regression_diagnostics, run_benchmark)
from dailyyield.core import exceptions
from dailyyield.core.status import ModelId

# Published (model, MSE, accuracy) for 2000/1000 splits of 3000 cows
PUBLISHED = [
    (ModelId.M1, 0.486, 0.968),
    (ModelId.M2A, 0.448, 0.971),
    (ModelId.M2B, 0.480, 0.968),
    (ModelId.M3A, 0.435, 0.972),
    (ModelId.M3B, 0.465, 0.970),
    (ModelId.M4, 0.422, 0.972),
    (ModelId.M5, 0.421, 0.972),
    (ModelId.M6A, 0.386, 0.975),
    (ModelId.M6B, 0.417, 0.973),
    (ModelId.M7A, 0.376, 0.976),
    (ModelId.M7B, 0.385, 0.975),
]


@pytest.fixture(scope="module")
def report(herd, grid):
    """All models on five replicates of the default protocol."""
    plan = make_splits(len(herd.cow_ids), 2000, 5, seed=7)
    return run_benchmark(herd, list(ModelId), plan, grid, workers=2)


class TestSplits:
    """Train/test partitions."""

    def test_sizes_and_partition(self):
        plan = make_splits(3000, 2000, 30, seed=3)
        assert plan.m == 30
        for split in plan.splits:
            assert len(split.train) == 2000 and len(split.test) == 1000
            assert not set(split.train) & set(split.test)
            assert set(split.train) | set(split.test) == set(range(3000))

    def test_deterministic(self):
        a, b = make_splits(100, 60, 4, seed=9), make_splits(100, 60, 4, seed=9)
        for x, y in zip(a.splits, b.splits):
            np.testing.assert_array_equal(x.train, y.train)

    def test_replicates_differ(self):
        plan = make_splits(100, 60, 2, seed=9)
        assert not np.array_equal(plan.splits[0].test, plan.splits[1].test)

    @pytest.mark.parametrize("n_cows, n_train, m", [(10, 10, 1), (10, 0, 1), (10, 5, 0)])
    def test_invalid(self, n_cows, n_train, m):
        with pytest.raises(exceptions.UsageError):
            make_splits(n_cows, n_train, m, seed=1)

    def test_folds_cover_every_cow(self):
        plan = make_splits(103, 0, 2, seed=4, folds=10)
        assert plan.m == 20
        for rep in range(2):
            tests = np.concatenate([s.test for s in plan.splits[rep * 10:(rep + 1) * 10]])
            assert sorted(tests) == list(range(103))


class TestMetrics:
    """Error decomposition."""

    def test_perfect_predictions(self):
        truths = [np.array([20.0, 24.0, 30.0])] * 3
        result = metrics(truths, truths)
        assert result.mse == 0.0
        assert result.r2_accuracy == 1.0

    def test_accuracy_formula(self):
        assert accuracy(14.70, 0.486) == pytest.approx(0.968, abs=5e-4)

    def test_accuracy_decreases_with_mse(self):
        values = [accuracy(15.0, mse) for mse in np.linspace(0, 5, 50)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_decomposition(self):
        rng = np.random.default_rng(0)
        truth = rng.normal(24, 4, 50)
        keys, preds, truths = [], [], []
        for _ in range(6):
            idx = rng.choice(50, 20, replace=False)
            keys.append(idx)
            truths.append(truth[idx])
            preds.append(truth[idx] + rng.normal(0.3, 0.5, 20))
        result = metrics(preds, truths, keys)
        assert result.mse == pytest.approx(result.variance + result.bias_sq, abs=1e-9)
        assert result.variance > 0 and result.bias_sq > 0
        assert 0 <= result.r2_accuracy <= 1

    def test_variance_weights_records_by_predictions(self):
        # record 0 predicted as 1 and 3, record 1 once
        preds = [np.array([1.0, 5.0]), np.array([3.0])]
        truths = [np.array([2.0, 5.0]), np.array([2.0])]
        result = metrics(preds, truths, [np.array([0, 1]), np.array([0])])
        assert result.variance == pytest.approx(2.0 / 3.0)

    def test_single_replicate_has_no_variance(self):
        result = metrics([np.array([1.0, 2.0])], [np.array([1.5, 2.5])])
        assert result.variance == 0.0
        assert result.bias_sq == pytest.approx(0.25)

    def test_mismatched(self):
        with pytest.raises(exceptions.UsageError):
            metrics([np.ones(3)], [np.ones(4)])
        with pytest.raises(exceptions.UsageError):
            metrics([], [])


class TestDiagnostics:
    """Regressions of true on predicted yield."""

    def test_identity(self):
        y = np.array([20.0, 22.0, 25.0, 27.0, 21.0, 23.0, 26.0, 30.0])
        sessions = ["AM", "PM"] * 4
        lines = regression_diagnostics(y, y, sessions)
        for line in lines.values():
            assert line.intercept == pytest.approx(0.0, abs=1e-9)
            assert line.slope == pytest.approx(1.0)
            assert line.correlation == pytest.approx(1.0)

    def test_constant_predictions(self):
        with pytest.raises(exceptions.DegenerateFitError):
            regression_diagnostics(np.arange(6.0), np.full(6, 3.0), ["AM", "PM"] * 3)

    def test_too_few_records(self):
        with pytest.raises(exceptions.DomainError):
            regression_diagnostics(np.arange(4.0), np.arange(4.0), ["AM", "PM", "PM", "PM"])


class TestRunBenchmark:
    """The full protocol on the default herd."""

    def test_covers_all_models(self, report):
        assert {r.model for r in report.results} == set(ModelId)
        assert all(r.error is None for r in report.results)

    def test_ordered_by_mse(self, report):
        mses = [r.metrics.mse for r in report.results]
        assert mses == sorted(mses)

    def test_mse_ordering(self, report):
        mse = {r.model: r.metrics.mse for r in report.results}
        assert mse[ModelId.M7A] < mse[ModelId.M6A] < mse[ModelId.M6B]
        assert mse[ModelId.M6A] < mse[ModelId.M2A]
        assert mse[ModelId.M7A] < mse[ModelId.M7B]
        assert mse[ModelId.M3A] <= mse[ModelId.M2A]
        assert mse[ModelId.M1] == max(mse[m] for m in (ModelId.M1, ModelId.M2A, ModelId.M3A))
        for a, b in [(ModelId.M2A, ModelId.M2B), (ModelId.M3A, ModelId.M3B), (ModelId.M6A, ModelId.M6B),
                     (ModelId.M7A, ModelId.M7B)]:
            assert mse[a] <= mse[b]

    def test_magnitudes(self, report):
        for r in report.results:
            assert 0.96 <= r.metrics.r2_accuracy <= 0.985
            assert r.metrics.mse == pytest.approx(r.metrics.variance + r.metrics.bias_sq, abs=1e-9)
            if r.model is not ModelId.M1:
                assert r.metrics.variance <= 1e-3

    @pytest.mark.parametrize("model, mse, r2", PUBLISHED)
    def test_close_to_published(self, report, model, mse, r2):
        result = report[model].metrics
        assert result.mse == pytest.approx(mse, rel=0.3)
        assert result.r2_accuracy == pytest.approx(r2, abs=0.01)

    def test_exponential_diagnostics(self, report):
        for line in report[ModelId.M7A].diagnostics.values():
            assert abs(line.intercept) <= 0.3
            assert 0.98 <= line.slope <= 1.02
            assert line.correlation >= 0.98

    def test_additive_diagnostics(self, report):
        for line in report[ModelId.M2A].diagnostics.values():
            assert 0.4 <= line.intercept <= 1.1

    def test_parameter_summary(self, report):
        b_mean, b_sd = report[ModelId.M3A].parameters["b"]
        assert 1.90 <= b_mean <= 1.98
        assert 0 < b_sd < 0.05

    def test_frames(self, report):
        frame = report.to_frame()
        assert list(frame.columns) == ["model", "status", "variance", "bias_sq", "mse", "accuracy"]
        assert len(frame) == 11
        assert set(frame["status"]) == {"ok"}
        diagnostics = report.diagnostics_frame()
        assert list(diagnostics.columns[:5]) == ["model", "session", "intercept", "slope", "correlation"]
        assert len(diagnostics) == 22
        assert "beta_mean" in diagnostics.columns

    def test_independent_of_workers(self, herd, grid, report):
        plan = make_splits(len(herd.cow_ids), 2000, 5, seed=7)
        serial = run_benchmark(herd, [ModelId.M7A, ModelId.M5], plan, grid, workers=1)
        for r in serial.results:
            assert r.metrics == report[r.model].metrics

    def test_failed_model_is_flagged(self, herd, grid):
        frame = herd.frame.copy()
        frame.loc[0, "partial_kg"] = 0.0
        data = type(herd)(frame)
        # Cow 1 trains the log model, which cannot take a zero yield
        plan = SplitPlan(3000, 1, (Split(np.arange(2000), np.arange(2000, 3000)),))
        report = run_benchmark(data, [ModelId.M7A, ModelId.M6A], plan, grid)
        assert report[ModelId.M7A].status.startswith("failed")
        assert report[ModelId.M6A].error is None
        assert report.results[-1].model is ModelId.M7A

    def test_unexpected_error_is_flagged(self, herd, grid, monkeypatch):
        fit = bench_eval.fit_model

        def failing_fit(model_id, *args, **kwargs):
            if model_id is ModelId.M4:
                raise np.linalg.LinAlgError("SVD did not converge")
            return fit(model_id, *args, **kwargs)

        monkeypatch.setattr(bench_eval, "fit_model", failing_fit)
        plan = make_splits(len(herd.cow_ids), 2000, 1, seed=2)
        report = run_benchmark(herd, [ModelId.M4, ModelId.M2A], plan, grid)
        assert report[ModelId.M4].status == "failed: LinAlgError"
        assert report[ModelId.M2A].error is None

    def test_mismatched_plan(self, herd, grid):
        with pytest.raises(exceptions.UsageError):
            run_benchmark(herd, [ModelId.M2A], make_splits(100, 50, 1, seed=1), grid)


class TestDiscretizationBias:
    """Direct against factor predictions for shrinking bins."""

    def test_shrinks_with_bin_width(self, herd):
        gaps = discretization_bias(ModelId.M3A, herd, [2.0, 1.0, 0.5, 0.25])
        values = [gaps[w] for w in (2.0, 1.0, 0.5, 0.25)]
        assert values[-1] > 0
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_needs_direct_model(self, herd):
        with pytest.raises(exceptions.UsageError):
            discretization_bias(ModelId.M4, herd, [1.0])
