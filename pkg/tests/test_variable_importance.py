import numpy as np
import pytest

from boxplain.data import permute_column
from boxplain.errors import UsageError
from boxplain.model import explain
from boxplain.performance import LossKind
from boxplain.variable_importance import (
    compare_importance,
    variable_importance,
)

from conftest import make_dataset, random_dataset


def identity_explainer(xs, label="id"):
    ds = make_dataset({"x": np.asarray(xs, dtype=np.float64)})
    fn = lambda q: q.values("x").astype(np.float64)  # noqa: E731
    return explain(fn, ds, ds.values("x"), label)


class TestVariableImportance:
    def test_unread_variable_has_exactly_zero_drop(self, rng):
        ds = make_dataset({"x": rng.normal(0, 1, 25), "unused": rng.normal(0, 1, 25)})
        fn = lambda q: q.values("x") * 2.0  # noqa: E731
        e = explain(fn, ds, fn(ds), "m")
        result = variable_importance(e, LossKind.RMSE, repeats=5, seed=3)
        row = next(r for r in result.rows if r.variable == "unused")
        assert row.drop == 0.0
        assert all(v == result.baseline_loss for v in row.permuted)

    def test_constant_column_has_exactly_zero_drop(self, rng):
        ds = make_dataset({"x": rng.normal(0, 1, 20), "c": np.full(20, 5.0)})
        fn = lambda q: q.values("x") + q.values("c")  # noqa: E731
        e = explain(fn, ds, fn(ds), "m")
        result = variable_importance(e, LossKind.MSE, repeats=4, seed=0)
        row = next(r for r in result.rows if r.variable == "c")
        assert row.drop == 0.0

    def test_two_point_swap_hand_value(self):
        # f(x) = x, y = x, data {1, 2}: the swapping permutation gives
        # RMSE = sqrt(((1-2)^2 + (2-1)^2) / 2) = 1
        from boxplain.data import derive_seed

        e = identity_explainer([1.0, 2.0])
        swap_seed = next(
            s for s in range(200)
            if list(permute_column(e.data, "x",
                                   derive_seed(s, "x", 0)).values("x")) == [2.0, 1.0]
        )
        result = variable_importance(e, LossKind.RMSE, repeats=1, seed=swap_seed)
        row = result.rows[0]
        assert result.baseline_loss == 0.0
        assert row.permuted == (1.0,)
        assert row.drop == 1.0

    def test_deterministic_across_runs(self, rng):
        ds = random_dataset(rng, 30, numeric=2, categorical=1)
        fn = lambda q: q.values("x1") + 2 * q.values("x2")  # noqa: E731
        e = explain(fn, ds, fn(ds) + 0.5, "m")
        a = variable_importance(e, LossKind.RMSE, repeats=3, seed=7)
        b = variable_importance(e, LossKind.RMSE, repeats=3, seed=7)
        assert a == b

    def test_adding_repeats_preserves_earlier_ones(self, rng):
        ds = random_dataset(rng, 25, numeric=2)
        fn = lambda q: q.values("x1") * q.values("x2")  # noqa: E731
        e = explain(fn, ds, fn(ds) + 1.0, "m")
        two = variable_importance(e, LossKind.MAE, repeats=2, seed=5)
        four = variable_importance(e, LossKind.MAE, repeats=4, seed=5)
        for r2, r4 in zip(two.rows, four.rows):
            assert r2.permuted == r4.permuted[:2]

    def test_drop_is_mean_minus_baseline(self, rng):
        ds = random_dataset(rng, 20, numeric=2)
        fn = lambda q: q.values("x1")  # noqa: E731
        e = explain(fn, ds, rng.normal(0, 1, 20), "m")
        result = variable_importance(e, LossKind.RMSE, repeats=3, seed=1)
        import math

        for row in result.rows:
            assert row.drop == row.permuted_mean - result.baseline_loss
            if len(set(row.permuted)) == 1:
                assert row.permuted_mean == row.permuted[0]
            else:
                assert row.permuted_mean == math.fsum(row.permuted) / 3

    def test_all_shuffled_deterministic_and_nonnegative(self, rng):
        ds = random_dataset(rng, 30, numeric=2, categorical=1)
        fn = lambda q: q.values("x1") - q.values("x2")  # noqa: E731
        e = explain(fn, ds, fn(ds), "m")
        a = variable_importance(e, LossKind.RMSE, repeats=2, seed=2)
        b = variable_importance(e, LossKind.RMSE, repeats=2, seed=2)
        assert a.all_shuffled == b.all_shuffled
        assert all(v >= 0.0 for v in a.all_shuffled.permuted)

    def test_variable_subset(self, rng):
        ds = random_dataset(rng, 15, numeric=3)
        fn = lambda q: q.values("x1")  # noqa: E731
        e = explain(fn, ds, fn(ds), "m")
        result = variable_importance(e, LossKind.RMSE, repeats=1, seed=0,
                                     variables=["x2", "x1"])
        assert [r.variable for r in result.rows] == ["x2", "x1"]

    def test_bad_arguments(self, rng):
        e = identity_explainer([1.0, 2.0, 3.0])
        with pytest.raises(UsageError):
            variable_importance(e, LossKind.RMSE, repeats=0, seed=0)
        with pytest.raises(UsageError):
            variable_importance(e, LossKind.RMSE, repeats=1, seed=0,
                                variables=["nope"])

    def test_jobs_parallel_matches_serial(self, rng):
        ds = random_dataset(rng, 40, numeric=3)
        fn = lambda q: q.values("x1") * 2 + q.values("x3")  # noqa: E731
        e = explain(fn, ds, fn(ds) + rng.normal(0, 0.1, 40), "m")
        serial = variable_importance(e, LossKind.RMSE, repeats=4, seed=9, jobs=1)
        threaded = variable_importance(e, LossKind.RMSE, repeats=4, seed=9, jobs=4)
        assert serial == threaded

    def test_negative_drop_not_clamped(self):
        # adversarial: model is anti-correlated with y, a lucky shuffle helps
        ds = make_dataset({"x": [1.0, 2.0, 3.0, 4.0]})
        fn = lambda q: -q.values("x")  # noqa: E731
        e = explain(fn, ds, ds.values("x"), "m")
        result = variable_importance(e, LossKind.RMSE, repeats=50, seed=0)
        assert min(result.rows[0].permuted) - result.baseline_loss < 0
        assert result.rows[0].drop < 0


class TestCompareImportance:
    def _result(self, rng, label, fn, n=30):
        ds = random_dataset(rng, n, numeric=3)
        e = explain(fn, ds, fn(ds) + rng.normal(0, 0.2, n), label)
        return variable_importance(e, LossKind.RMSE, repeats=2, seed=1)

    def test_single_result_sorted_by_drop(self, rng):
        fn = lambda q: 5 * q.values("x2") + q.values("x3")  # noqa: E731
        result = self._result(rng, "m", fn)
        overlay = compare_importance([result])
        assert len(overlay.rows) == 3
        drops = {r.variable: r.drop for r in result.rows}
        order = list(overlay.variable_order)
        assert order == sorted(order, key=lambda v: (-drops[v], v))
        assert order[0] == "x2"

    def test_two_results_share_variable_order(self, rng):
        fn_a = lambda q: 5 * q.values("x2")  # noqa: E731
        fn_b = lambda q: 5 * q.values("x1")  # noqa: E731
        ra = self._result(rng, "a", fn_a)
        rb = self._result(rng, "b", fn_b)
        overlay = compare_importance([ra, rb])
        assert len(overlay.rows) == 6
        # variable order is fixed by the first result
        assert overlay.variable_order[0] == "x2"
        labels = [row[0] for row in overlay.rows]
        assert labels == ["a"] * 3 + ["b"] * 3

    def test_intervals_anchor_at_own_baseline(self, rng):
        fn_a = lambda q: q.values("x1")  # noqa: E731
        fn_b = lambda q: q.values("x1") * 3  # noqa: E731
        ra = self._result(rng, "a", fn_a)
        rb = self._result(rng, "b", fn_b)
        overlay = compare_importance([ra, rb])
        baselines = {row[0]: row[2] for row in overlay.rows}
        assert baselines["a"] == ra.baseline_loss
        assert baselines["b"] == rb.baseline_loss

    def test_mixed_loss_kinds_rejected(self, rng):
        ds = random_dataset(rng, 20, numeric=2)
        fn = lambda q: q.values("x1")  # noqa: E731
        e1 = explain(fn, ds, fn(ds), "a")
        e2 = explain(fn, ds, fn(ds), "b")
        ra = variable_importance(e1, LossKind.RMSE, repeats=1, seed=0)
        rb = variable_importance(e2, LossKind.MAE, repeats=1, seed=0)
        with pytest.raises(UsageError, match="loss kinds"):
            compare_importance([ra, rb])

    def test_duplicate_labels_rejected(self, rng):
        ds = random_dataset(rng, 20, numeric=2)
        fn = lambda q: q.values("x1")  # noqa: E731
        e = explain(fn, ds, fn(ds), "same")
        r = variable_importance(e, LossKind.RMSE, repeats=1, seed=0)
        with pytest.raises(UsageError, match="duplicate"):
            compare_importance([r, r])
