"""Global conditional-effect explainers: partial dependence, accumulated
local effects, and merging paths for categorical levels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import (
    ColumnKind,
    GridStrategy,
    concat_rows,
    make_grid,
    replace_column,
    substitute,
)
from .errors import UsageError
from .model import Explainer, predict_batch

DEFAULT_PDP_GRID = GridStrategy.quantile(21)
DEFAULT_ALE_BINS = 20


@dataclass(frozen=True)
class ProfileCurve:
    """(grid value -> response) series; kind is one of pdp, ale, cp."""

    label: str
    variable: str
    kind: str
    points: tuple[tuple[float | str, float], ...]
    normalized: tuple[tuple[float, float], ...] | None = None

    def to_json_obj(self) -> dict:
        obj = {
            "kind": self.kind,
            "label": self.label,
            "variable": self.variable,
            "points": [[z, float(g)] for z, g in self.points],
        }
        if self.normalized is not None:
            obj["normalized"] = [[float(u), float(g)] for u, g in self.normalized]
        return obj


def _require_numeric(explainer: Explainer, variable: str, what: str) -> None:
    if explainer.data.kind(variable) is not ColumnKind.NUMERIC:
        raise UsageError(
            f"{what} requires a numeric variable; "
            f"'{variable}' is categorical (use factor_merge)"
        )


def partial_dependence(
    explainer: Explainer,
    variable: str,
    strategy: GridStrategy = DEFAULT_PDP_GRID,
) -> ProfileCurve:
    """Mean model response with the variable substituted to each grid value.

    All grid values are scored in one batched predict call of n * k rows.
    """
    _require_numeric(explainer, variable, "partial_dependence")
    grid = make_grid(explainer.data, variable, strategy)
    data = explainer.data
    stacked = concat_rows([substitute(data, variable, z) for z in grid])
    preds = predict_batch(explainer, stacked).reshape(len(grid), data.n)
    points = tuple((float(z), float(p.mean())) for z, p in zip(grid, preds))
    return ProfileCurve(explainer.label, variable, "pdp", points)


def accumulated_local_effects(
    explainer: Explainer,
    variable: str,
    k: int = DEFAULT_ALE_BINS,
) -> ProfileCurve:
    """Accumulate within-bin prediction differences over quantile bins.

    Breakpoints are the deduplicated type-7 quantiles at k+1 probabilities.
    Bin j holds the rows with value in (z_{j-1}, z_j] (bin 1 also takes the
    minimum). The local effect of bin j is the mean, over its own rows, of
    predict(row, var := z_j) - predict(row, var := z_{j-1}); empty bins
    contribute zero. Accumulated effects start at g(z_0) = 0 and are then
    centered so the bin-count-weighted trapezoid mean is zero.
    """
    _require_numeric(explainer, variable, "accumulated_local_effects")
    if k < 1:
        raise UsageError(f"ale needs k >= 1 bins, got {k}")
    data = explainer.data
    bps = make_grid(data, variable, GridStrategy.quantile(k + 1))
    if len(bps) == 1:
        return ProfileCurve(
            explainer.label, variable, "ale", ((float(bps[0]), 0.0),)
        )
    bp_arr = np.asarray(bps, dtype=np.float64)
    nbins = len(bps) - 1
    vals = data.values(variable)
    bins = np.searchsorted(bp_arr, vals, side="left")
    bins = np.clip(bins, 1, nbins)

    lo_vals = bp_arr[bins - 1]
    hi_vals = bp_arr[bins]
    preds_lo = predict_batch(explainer, replace_column(data, variable, lo_vals))
    preds_hi = predict_batch(explainer, replace_column(data, variable, hi_vals))
    delta = preds_hi - preds_lo

    effects = np.zeros(nbins)
    counts = np.zeros(nbins)
    for j in range(1, nbins + 1):
        mask = bins == j
        counts[j - 1] = mask.sum()
        if counts[j - 1] > 0:
            effects[j - 1] = delta[mask].mean()

    g = np.concatenate([[0.0], np.cumsum(effects)])
    center = float(np.sum(counts * (g[:-1] + g[1:]) / 2.0) / counts.sum())
    points = tuple((float(z), float(gz - center)) for z, gz in zip(bps, g))
    return ProfileCurve(explainer.label, variable, "ale", points)


@dataclass(frozen=True)
class LevelStat:
    level: str
    count: int
    mean: float


@dataclass(frozen=True)
class MergeStep:
    group_a: tuple[str, ...]
    group_b: tuple[str, ...]
    cost: float
    cumulative: float


@dataclass(frozen=True)
class MergingPath:
    """Sequence of adjacent-group merges of categorical levels ordered by
    mean model response, with Ward-style costs."""

    label: str
    variable: str
    level_stats: tuple[LevelStat, ...]  # in mean-response order
    steps: tuple[MergeStep, ...]

    kind = "factor_merge"

    def groups_at(self, cut: int) -> tuple[tuple[str, ...], ...]:
        """Groups remaining after enough merges to leave ``cut`` of them."""
        n_levels = len(self.level_stats)
        if not 1 <= cut <= n_levels:
            raise UsageError(f"cut count must be in 1..{n_levels}, got {cut}")
        groups = [(s.level,) for s in self.level_stats]
        for step in self.steps[: n_levels - cut]:
            i = groups.index(step.group_a)
            groups[i] = step.group_a + step.group_b
            groups.remove(step.group_b)
        return tuple(groups)

    def to_json_obj(self) -> dict:
        return {
            "kind": self.kind,
            "label": self.label,
            "variable": self.variable,
            "levels": [
                {"level": s.level, "count": s.count, "mean": s.mean}
                for s in self.level_stats
            ],
            "steps": [
                {
                    "a": list(s.group_a),
                    "b": list(s.group_b),
                    "cost": s.cost,
                    "cumulative": s.cumulative,
                }
                for s in self.steps
            ],
        }


def factor_merge(explainer: Explainer, variable: str) -> MergingPath:
    """Ward-style merging path over the mean model response per level.

    Levels are scored on the observed validation rows (no substitution),
    ordered by mean response, and adjacent groups are merged greedily by the
    smallest increase in within-group sum of squares:
    cost = n_a * n_b / (n_a + n_b) * (mean_a - mean_b)^2.
    """
    if explainer.data.kind(variable) is not ColumnKind.CATEGORICAL:
        raise UsageError(
            f"factor_merge requires a categorical variable; '{variable}' is numeric"
        )
    preds = predict_batch(explainer, explainer.data)
    vals = explainer.data.values(variable)
    levels = sorted(set(vals))
    stats = []
    for lev in levels:
        mask = vals == lev
        stats.append(LevelStat(lev, int(mask.sum()), float(preds[mask].mean())))
    stats.sort(key=lambda s: (s.mean, s.level))

    groups = [((s.level,), s.count, s.mean) for s in stats]
    steps: list[MergeStep] = []
    cumulative = 0.0
    while len(groups) > 1:
        best_i = 0
        best_cost = None
        for i in range(len(groups) - 1):
            (_, na, ma), (_, nb, mb) = groups[i], groups[i + 1]
            cost = na * nb / (na + nb) * (ma - mb) ** 2
            if best_cost is None or cost < best_cost:
                best_cost = cost
                best_i = i
        (la, na, ma), (lb, nb, mb) = groups[best_i], groups[best_i + 1]
        cumulative += best_cost
        steps.append(MergeStep(la, lb, float(best_cost), float(cumulative)))
        merged_mean = (na * ma + nb * mb) / (na + nb)
        groups[best_i: best_i + 2] = [(la + lb, na + nb, merged_mean)]
    return MergingPath(explainer.label, variable, tuple(stats), tuple(steps))
