import math

import numpy as np
import pytest

from boxplain.errors import UsageError
from boxplain.model import explain
from boxplain.performance import (
    LossKind,
    box_stats,
    compare_performance,
    loss,
    model_performance,
    survival_at,
)

from conftest import make_dataset


def explainer_with_residuals(residuals):
    """Constant-zero model with targets equal to the residuals."""
    r = np.asarray(residuals, dtype=np.float64)
    ds = make_dataset({"x": np.arange(float(r.size))})
    return explain(lambda q: np.zeros(q.n), ds, r, "m")


class TestLoss:
    def test_perfect_fit_zero_for_every_kind(self):
        for kind in LossKind:
            assert loss(kind, [1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_rmse_hand_value(self):
        # sqrt((9 + 16) / 2) = sqrt(12.5)
        assert loss(LossKind.RMSE, [0.0, 0.0], [3.0, 4.0]) == pytest.approx(
            math.sqrt(12.5), abs=1e-12
        )

    def test_mae_hand_value(self):
        assert loss(LossKind.MAE, [0.0, 0.0], [3.0, -3.0]) == 3.0

    def test_length_mismatch_and_empty(self):
        with pytest.raises(UsageError):
            loss(LossKind.MSE, [1.0], [1.0, 2.0])
        with pytest.raises(UsageError):
            loss(LossKind.MSE, [], [])

    def test_rmse_squared_is_mse(self, rng):
        for _ in range(10):
            y = rng.normal(0, 5, 40)
            yhat = rng.normal(0, 5, 40)
            rmse = loss(LossKind.RMSE, y, yhat)
            mse = loss(LossKind.MSE, y, yhat)
            assert abs(rmse * rmse - mse) <= 1e-12 * max(mse, 1e-300)

    def test_parse(self):
        assert LossKind.parse("RMSE") is LossKind.RMSE
        with pytest.raises(UsageError):
            LossKind.parse("huber")


class TestModelPerformance:
    def test_perfect_model(self):
        result = explainer_with_residuals([0.0, 0.0, 0.0])
        perf = model_performance(result)
        assert perf.recdf == ((0.0, 0.0),)
        assert perf.rmse == 0.0
        b = perf.box
        assert (b.whisker_lo, b.q1, b.median, b.q3, b.whisker_hi) == (0,) * 5
        assert b.outliers == ()

    def test_recdf_counting_convention(self):
        # |r| = {1,2,3}; ECDF(t) = #{|r| <= t}/n gives survivals 2/3, 1/3, 0
        perf = model_performance(explainer_with_residuals([1.0, -2.0, 3.0]))
        assert perf.recdf == (
            (1.0, pytest.approx(2 / 3)),
            (2.0, pytest.approx(1 / 3)),
            (3.0, 0.0),
        )

    def test_recdf_with_ties(self):
        perf = model_performance(explainer_with_residuals([1.0, 1.0, -1.0, 2.0]))
        assert perf.recdf == ((1.0, pytest.approx(0.25)), (2.0, 0.0))

    def test_box_flags_extreme_outlier(self):
        perf = model_performance(explainer_with_residuals([1.0, 1.0, 1.0, 100.0]))
        assert perf.box.outliers == (100.0,)
        assert perf.box.whisker_lo == 1.0
        assert perf.box.whisker_hi == 1.0

    def test_survival_properties(self, rng):
        for _ in range(10):
            res = rng.normal(0, 3, int(rng.integers(2, 30)))
            perf = model_performance(explainer_with_residuals(res))
            n = res.size
            assert perf.recdf[-1][1] == 0.0
            survivals = [s for _, s in perf.recdf]
            assert all(a >= b for a, b in zip(survivals, survivals[1:]))
            positive = np.abs(res)[np.abs(res) > 0]
            if positive.size:
                just_below = positive.min() * (1 - 1e-9)
                assert survival_at(perf.recdf, just_below) >= 1 / n - 1e-12

    def test_cross_model_exceedance_from_tables(self, rng):
        for _ in range(10):
            ra = rng.normal(0, 2, 37)
            rb = rng.normal(0, 1, 23)
            pa = model_performance(explainer_with_residuals(ra))
            pb = model_performance(explainer_with_residuals(rb))
            max_b = pb.recdf[-1][0]
            from_table = survival_at(pa.recdf, max_b)
            direct = np.count_nonzero(np.abs(ra) > max_b) / ra.size
            assert from_table == pytest.approx(direct, abs=1e-12)

    def test_does_not_mutate_data(self):
        ds = make_dataset({"x": [1.0, 2.0]})
        e = explain(lambda q: q.values("x") * 0.5, ds, np.array([1.0, 1.0]), "m")
        model_performance(e)
        assert list(ds.values("x")) == [1.0, 2.0]

    def test_residuals_are_y_minus_prediction(self):
        ds = make_dataset({"x": [1.0, 2.0]})
        e = explain(lambda q: q.values("x"), ds, np.array([3.0, 1.0]), "m")
        perf = model_performance(e)
        assert list(perf.residuals) == [2.0, -1.0]


class TestBoxStats:
    def test_quartiles_match_type7(self, rng):
        vals = rng.normal(0, 2, 41)
        b = box_stats(vals)
        assert b.q1 == pytest.approx(np.quantile(vals, 0.25), abs=1e-12)
        assert b.median == pytest.approx(np.quantile(vals, 0.5), abs=1e-12)
        assert b.q3 == pytest.approx(np.quantile(vals, 0.75), abs=1e-12)
        assert b.q1 <= b.median <= b.q3

    def test_whiskers_are_extreme_points_within_fences(self, rng):
        vals = np.concatenate([rng.normal(0, 1, 50), [40.0, -40.0]])
        b = box_stats(vals)
        iqr = b.q3 - b.q1
        assert b.whisker_hi <= b.q3 + 1.5 * iqr
        assert b.whisker_lo >= b.q1 - 1.5 * iqr
        assert 40.0 in b.outliers and -40.0 in b.outliers
        inside = vals[(vals >= b.q1 - 1.5 * iqr) & (vals <= b.q3 + 1.5 * iqr)]
        assert b.whisker_hi == inside.max()
        assert b.whisker_lo == inside.min()


class TestComparePerformance:
    def test_single_result_identity(self):
        perf = model_performance(explainer_with_residuals([1.0, 2.0]))
        overlay = compare_performance([perf])
        assert overlay.recdf_rows == tuple(
            ("m", t, s) for t, s in perf.recdf
        )
        assert overlay.box_rows == (("m", perf.box),)
        assert overlay.rmse_rows == (("m", perf.rmse),)

    def test_two_results_concatenate(self):
        pa = model_performance(explainer_with_residuals([1.0, 2.0, 3.0]))
        e = explainer_with_residuals([4.0, 5.0, 6.0])
        e.label = "other"
        pb = model_performance(e)
        overlay = compare_performance([pa, pb])
        assert len(overlay.recdf_rows) == 6
        labels = [row[0] for row in overlay.recdf_rows]
        assert labels == ["m"] * 3 + ["other"] * 3

    def test_duplicate_labels_rejected(self):
        pa = model_performance(explainer_with_residuals([1.0]))
        pb = model_performance(explainer_with_residuals([2.0]))
        with pytest.raises(UsageError, match="duplicate"):
            compare_performance([pa, pb])

    def test_empty_rejected(self):
        with pytest.raises(UsageError):
            compare_performance([])
