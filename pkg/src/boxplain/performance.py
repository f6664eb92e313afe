"""Residual-based model performance: losses, reverse ECDF, boxplot statistics.

The headline chart is the survival curve of absolute residuals,
1 - ECDF(|r|), paired with a Tukey boxplot of |r| carrying an RMSE marker.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .data import quantile
from .errors import UsageError
from .model import Explainer, predict_batch


class LossKind(str, Enum):
    RMSE = "rmse"
    MSE = "mse"
    MAE = "mae"

    @classmethod
    def parse(cls, text: str) -> "LossKind":
        try:
            return cls(text.lower())
        except ValueError:
            raise UsageError(f"unknown loss kind {text!r}; use rmse, mse or mae")


def loss(kind: LossKind, y, yhat) -> float:
    yv = np.asarray(y, dtype=np.float64).reshape(-1)
    pv = np.asarray(yhat, dtype=np.float64).reshape(-1)
    if yv.size == 0 or yv.size != pv.size:
        raise UsageError(
            f"loss needs equal nonzero lengths, got {yv.size} and {pv.size}"
        )
    d = yv - pv
    if kind is LossKind.MSE:
        return float(np.mean(d * d))
    if kind is LossKind.RMSE:
        return float(np.sqrt(np.mean(d * d)))
    if kind is LossKind.MAE:
        return float(np.mean(np.abs(d)))
    raise UsageError(f"unknown loss kind {kind!r}")


@dataclass(frozen=True)
class BoxStats:
    """Tukey five-number summary of |residuals| plus the flagged outliers."""

    whisker_lo: float
    q1: float
    median: float
    q3: float
    whisker_hi: float
    outliers: tuple[float, ...]

    def to_json_obj(self) -> dict:
        return {
            "whisker_lo": self.whisker_lo,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "whisker_hi": self.whisker_hi,
            "outliers": list(self.outliers),
        }


def box_stats(values) -> BoxStats:
    """Quartiles via the type-7 quantile; whiskers at the most extreme points
    inside the 1.5*IQR fences; everything beyond is an outlier."""
    arr = np.sort(np.asarray(values, dtype=np.float64).reshape(-1))
    if arr.size == 0:
        raise UsageError("box_stats of an empty vector")
    q1 = quantile(arr, 0.25)
    med = quantile(arr, 0.5)
    q3 = quantile(arr, 0.75)
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    inside = arr[(arr >= lo_fence) & (arr <= hi_fence)]
    outliers = arr[(arr < lo_fence) | (arr > hi_fence)]
    # Quartiles always lie inside the fences, so `inside` is never empty.
    return BoxStats(
        whisker_lo=float(inside.min()),
        q1=q1,
        median=med,
        q3=q3,
        whisker_hi=float(inside.max()),
        outliers=tuple(float(v) for v in outliers),
    )


@dataclass(frozen=True)
class PerformanceResult:
    label: str
    residuals: np.ndarray  # y - yhat
    abs_sorted: np.ndarray
    recdf: tuple[tuple[float, float], ...]  # (t, 1 - ECDF(t)) at distinct |r|
    box: BoxStats
    rmse: float

    kind = "performance"

    def to_json_obj(self) -> dict:
        return {
            "kind": self.kind,
            "label": self.label,
            "rmse": self.rmse,
            "box": self.box.to_json_obj(),
            "recdf": [[t, s] for t, s in self.recdf],
        }


def model_performance(explainer: Explainer) -> PerformanceResult:
    """Predict on the validation data and summarize the residual distribution.

    ECDF convention: ECDF(t) = #{|r| <= t} / n, right-continuous steps.
    """
    yhat = predict_batch(explainer, explainer.data)
    residuals = explainer.y - yhat
    abs_sorted = np.sort(np.abs(residuals))
    n = abs_sorted.size
    ts = np.unique(abs_sorted)
    counts = np.searchsorted(abs_sorted, ts, side="right")
    recdf = tuple((float(t), float(1.0 - c / n)) for t, c in zip(ts, counts))
    return PerformanceResult(
        label=explainer.label,
        residuals=residuals,
        abs_sorted=abs_sorted,
        recdf=recdf,
        box=box_stats(abs_sorted),
        rmse=loss(LossKind.RMSE, explainer.y, yhat),
    )


def survival_at(recdf: tuple[tuple[float, float], ...], t: float) -> float:
    """Evaluate the reverse-ECDF step function (right-continuous) at t."""
    value = 1.0
    for ti, si in recdf:
        if ti <= t:
            value = si
        else:
            break
    return value


@dataclass(frozen=True)
class PerformanceOverlay:
    """Long-format merge of several performance results for one chart."""

    recdf_rows: tuple[tuple[str, float, float], ...]  # (label, t, survival)
    box_rows: tuple[tuple[str, BoxStats], ...]
    rmse_rows: tuple[tuple[str, float], ...]


def compare_performance(results: list[PerformanceResult]) -> PerformanceOverlay:
    if not results:
        raise UsageError("compare_performance needs at least one result")
    labels = [r.label for r in results]
    if len(set(labels)) != len(labels):
        raise UsageError(f"duplicate labels in comparison: {labels}")
    recdf_rows = tuple(
        (r.label, t, s) for r in results for t, s in r.recdf
    )
    box_rows = tuple((r.label, r.box) for r in results)
    rmse_rows = tuple((r.label, r.rmse) for r in results)
    return PerformanceOverlay(recdf_rows, box_rows, rmse_rows)
