"""Permutation-based variable importance, reported as (baseline, permuted) pairs.

Each variable's importance is the loss increase after shuffling that column;
the result keeps both ends of the interval so models with different baseline
performance can be compared on the same chart.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .data import derive_seed, permute_column
from .errors import ModelAdapterError, UsageError
from .model import Explainer, predict_batch
from .performance import LossKind, loss

ALL_SHUFFLED = "_all_"


@dataclass(frozen=True)
class ImportanceRow:
    variable: str
    permuted: tuple[float, ...]  # loss per repeat
    permuted_mean: float
    drop: float  # permuted_mean - baseline, negative values kept as-is

    def to_json_obj(self) -> dict:
        return {
            "variable": self.variable,
            "permuted": list(self.permuted),
            "permuted_mean": self.permuted_mean,
            "drop": self.drop,
        }


@dataclass(frozen=True)
class ImportanceResult:
    label: str
    loss_kind: LossKind
    baseline_loss: float
    rows: tuple[ImportanceRow, ...]
    all_shuffled: ImportanceRow  # every feature column permuted independently
    repeats: int
    seed: int

    kind = "importance"

    def to_json_obj(self) -> dict:
        obj = self.all_shuffled.to_json_obj()
        obj.pop("variable")
        return {
            "kind": self.kind,
            "label": self.label,
            "loss": self.loss_kind.value,
            "baseline": self.baseline_loss,
            "rows": [r.to_json_obj() for r in self.rows],
            "all_shuffled": obj,
            "repeats": self.repeats,
            "seed": self.seed,
        }


def _mean(values: tuple[float, ...]) -> float:
    # the mean of identical repeats is that value exactly; summing first
    # would round and break the exact-zero drop of an unread variable
    if all(v == values[0] for v in values):
        return values[0]
    return math.fsum(values) / len(values)


def _run_tasks(tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [t() for t in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(t) for t in tasks]
        return [f.result() for f in futures]


def variable_importance(
    explainer: Explainer,
    loss_kind: LossKind = LossKind.RMSE,
    repeats: int = 10,
    seed: int = 0,
    variables: list[str] | None = None,
    jobs: int = 1,
) -> ImportanceResult:
    """Baseline loss plus, per variable and repeat, the loss after shuffling.

    Permutation streams are keyed by (seed, variable, repeat), so adding
    repeats or reordering variables never changes earlier results.
    """
    if repeats < 1:
        raise UsageError(f"repeats must be >= 1, got {repeats}")
    data = explainer.data
    names = list(variables) if variables is not None else list(data.feature_names)
    for v in names:
        if not data.has_column(v):
            raise UsageError(f"no such variable: '{v}'")

    baseline = loss(loss_kind, explainer.y, predict_batch(explainer, data))

    def one_loss(variable: str, repeat: int) -> float:
        shuffled = permute_column(data, variable, derive_seed(seed, variable, repeat))
        try:
            yhat = predict_batch(explainer, shuffled)
        except ModelAdapterError as e:
            raise ModelAdapterError(
                f"while scoring permuted variable '{variable}' "
                f"repeat {repeat}: {e}",
                stderr_text=e.stderr_text,
            ) from e
        return loss(loss_kind, explainer.y, yhat)

    def all_shuffled_loss(repeat: int) -> float:
        shuffled = data
        for v in data.feature_names:
            shuffled = permute_column(shuffled, v, derive_seed(seed, v, repeat))
        try:
            yhat = predict_batch(explainer, shuffled)
        except ModelAdapterError as e:
            raise ModelAdapterError(
                f"while scoring all-shuffled data repeat {repeat}: {e}",
                stderr_text=e.stderr_text,
            ) from e
        return loss(loss_kind, explainer.y, yhat)

    tasks = [
        (lambda v=v, b=b: one_loss(v, b))
        for v in names
        for b in range(repeats)
    ]
    tasks += [(lambda b=b: all_shuffled_loss(b)) for b in range(repeats)]
    flat = _run_tasks(tasks, jobs)

    rows = []
    for i, v in enumerate(names):
        losses = tuple(flat[i * repeats: (i + 1) * repeats])
        mean = _mean(losses)
        rows.append(ImportanceRow(v, losses, mean, mean - baseline))
    shuffled_losses = tuple(flat[len(names) * repeats:])
    shuffled_mean = _mean(shuffled_losses)
    all_row = ImportanceRow(
        ALL_SHUFFLED, shuffled_losses, shuffled_mean, shuffled_mean - baseline
    )
    return ImportanceResult(
        label=explainer.label,
        loss_kind=loss_kind,
        baseline_loss=baseline,
        rows=tuple(rows),
        all_shuffled=all_row,
        repeats=repeats,
        seed=seed,
    )


@dataclass(frozen=True)
class ImportanceOverlay:
    """Long-format merge for the interval chart; intervals stay anchored at
    each model's own baseline."""

    variable_order: tuple[str, ...]
    rows: tuple[tuple[str, str, float, float], ...]  # (label, variable, baseline, permuted_mean)


def compare_importance(results: list[ImportanceResult]) -> ImportanceOverlay:
    if not results:
        raise UsageError("compare_importance needs at least one result")
    labels = [r.label for r in results]
    if len(set(labels)) != len(labels):
        raise UsageError(f"duplicate labels in comparison: {labels}")
    kinds = {r.loss_kind for r in results}
    if len(kinds) > 1:
        raise UsageError(
            f"cannot compare importance across loss kinds: "
            f"{sorted(k.value for k in kinds)}"
        )
    order: list[str] = []
    for r in results:
        for row in sorted(r.rows, key=lambda x: (-x.drop, x.variable)):
            if row.variable not in order:
                order.append(row.variable)
    rows = []
    for r in results:
        by_name = {row.variable: row for row in r.rows}
        for v in order:
            if v in by_name:
                rows.append((r.label, v, r.baseline_loss, by_name[v].permuted_mean))
    return ImportanceOverlay(tuple(order), tuple(rows))
