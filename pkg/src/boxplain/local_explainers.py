"""Single-observation explainers: ceteris-paribus profiles and greedy
break-down attributions (a fast approximation of Shapley values, with an
exact enumeration oracle for small feature counts)."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations

from .data import (
    ColumnKind,
    GridStrategy,
    Observation,
    TabularDataset,
    concat_rows,
    ecdf_position,
    make_grid,
    replace_column,
    substitute,
)
from .errors import ModelAdapterError, UsageError
from .model import Explainer, predict_batch
from .variable_response import ProfileCurve

DEFAULT_CP_GRID = GridStrategy.quantile(21)

STEP_UP = "up"
STEP_DOWN = "down"


@dataclass(frozen=True)
class CPProfile:
    """Per-variable response curves around one observation.

    Every curve's grid includes the observation's own value, so evaluating a
    curve there reproduces ``anchor_prediction`` exactly.
    """

    label: str
    observation: Observation
    anchor_prediction: float
    curves: tuple[ProfileCurve, ...]

    kind = "cp"

    def curve(self, variable: str) -> ProfileCurve:
        for c in self.curves:
            if c.variable == variable:
                return c
        raise UsageError(f"profile has no curve for variable '{variable}'")

    def to_json_obj(self) -> dict:
        return {
            "kind": self.kind,
            "label": self.label,
            "anchor": {
                "prediction": self.anchor_prediction,
                "observation": dict(sorted(self.observation.values.items())),
            },
            "curves": [c.to_json_obj() for c in self.curves],
        }


def _single_row(obs: Observation, schema_of: TabularDataset) -> TabularDataset:
    return obs.to_dataset(schema_of)


def ceteris_paribus(
    explainer: Explainer,
    obs: Observation,
    variables: list[str] | None = None,
    strategy: GridStrategy = DEFAULT_CP_GRID,
) -> CPProfile:
    """Sweep one variable at a time across a grid while the rest stay fixed.

    Numeric grids come from ``strategy``; categorical variables sweep their
    observed levels. The observation's own value is always on the grid.
    """
    data = explainer.data
    obs = obs.validated(data)
    names = list(variables) if variables is not None else list(data.feature_names)
    for v in names:
        if not data.has_column(v):
            raise UsageError(f"no such variable: '{v}'")

    base_row = _single_row(obs, data)
    anchor = float(predict_batch(explainer, base_row)[0])

    curves = []
    for v in names:
        own = obs.values[v]
        if data.kind(v) is ColumnKind.NUMERIC:
            grid = sorted(set(make_grid(data, v, strategy)) | {float(own)})
        else:
            grid = sorted(set(make_grid(data, v, GridStrategy.unique())) | {str(own)})
        stacked = concat_rows([substitute(base_row, v, z) for z in grid])
        preds = predict_batch(explainer, stacked)
        points = tuple((z, float(p)) for z, p in zip(grid, preds))
        curves.append(ProfileCurve(explainer.label, v, "cp", points))
    return CPProfile(explainer.label, obs, anchor, tuple(curves))


def normalize_cp(profile: CPProfile, explainer: Explainer) -> CPProfile:
    """Map each curve's grid through the validation ECDF onto [0, 1].

    Responses are untouched; only numeric variables can be normalized.
    """
    new_curves = []
    for c in profile.curves:
        if explainer.data.kind(c.variable) is not ColumnKind.NUMERIC:
            raise UsageError(
                f"normalize_cp requires numeric variables; "
                f"'{c.variable}' is categorical"
            )
        col = explainer.data.values(c.variable)
        normalized = tuple(
            (ecdf_position(col, float(z)), y) for z, y in c.points
        )
        new_curves.append(
            ProfileCurve(c.label, c.variable, c.kind, c.points, normalized)
        )
    return CPProfile(
        profile.label, profile.observation, profile.anchor_prediction,
        tuple(new_curves),
    )


@dataclass(frozen=True)
class AttributionStep:
    variable: str
    value: float | str
    contribution: float


@dataclass(frozen=True)
class Attribution:
    """Greedy decomposition of prediction - baseline into per-variable parts.

    baseline + sum(contributions) telescopes to the observation's prediction.
    """

    label: str
    baseline: float  # mean prediction over the validation data
    steps: tuple[AttributionStep, ...]
    final_prediction: float
    direction: str  # "up" | "down"

    kind = "breakdown"

    def to_json_obj(self) -> dict:
        return {
            "kind": self.kind,
            "label": self.label,
            "baseline": self.baseline,
            "steps": [
                {"variable": s.variable, "value": s.value,
                 "contribution": s.contribution}
                for s in self.steps
            ],
            "prediction": self.final_prediction,
            "direction": self.direction,
        }


def _candidate_means(explainer, datasets, jobs):
    def score(d):
        return float(predict_batch(explainer, d).mean())

    if jobs <= 1 or len(datasets) <= 1:
        return [score(d) for d in datasets]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return [f.result() for f in [pool.submit(score, d) for d in datasets]]


def break_down(
    explainer: Explainer,
    obs: Observation,
    direction: str = STEP_UP,
    jobs: int = 1,
) -> Attribution:
    """Greedily fix (or relax) one variable at a time, attributing to each
    the change in mean prediction when its column is pinned to the
    observation's value.

    Step-up starts from the validation data and fixes the variable with the
    largest |mean shift| first; step-down starts fully pinned and relaxes the
    variable with the smallest |mean shift| first, reporting contributions in
    fixing order. Ties break to the lexicographically smallest name.
    """
    if direction not in (STEP_UP, STEP_DOWN):
        raise UsageError(f"direction must be 'up' or 'down', got {direction!r}")
    data = explainer.data
    obs = obs.validated(data)
    names = list(data.feature_names)

    baseline = float(predict_batch(explainer, data).mean())
    final_prediction = float(predict_batch(explainer, _single_row(obs, data))[0])

    if direction == STEP_UP:
        current = data
        v = baseline
        remaining = sorted(names)
        steps: list[AttributionStep] = []
        step_index = 0
        while remaining:
            step_index += 1
            try:
                cands = [substitute(current, j, obs.values[j]) for j in remaining]
                means = _candidate_means(explainer, cands, jobs)
            except ModelAdapterError as e:
                raise ModelAdapterError(
                    f"break-down step {step_index}: {e}", stderr_text=e.stderr_text
                ) from e
            best = max(range(len(remaining)), key=lambda i: abs(means[i] - v))
            # max() keeps the first (lexicographically smallest) on ties
            j = remaining[best]
            steps.append(AttributionStep(j, obs.values[j], means[best] - v))
            current = cands[best]
            v = means[best]
            remaining.pop(best)
        return Attribution(explainer.label, baseline, tuple(steps),
                           final_prediction, direction)

    # step-down: start fully pinned, relax the least influential variable first
    current = data
    for j in names:
        current = substitute(current, j, obs.values[j])
    v = float(predict_batch(explainer, current).mean())
    remaining = sorted(names)
    relax_steps: list[AttributionStep] = []
    step_index = 0
    while remaining:
        step_index += 1
        try:
            cands = [
                replace_column(current, j, data.values(j)) for j in remaining
            ]
            means = _candidate_means(explainer, cands, jobs)
        except ModelAdapterError as e:
            raise ModelAdapterError(
                f"break-down step {step_index}: {e}", stderr_text=e.stderr_text
            ) from e
        best = min(range(len(remaining)), key=lambda i: abs(means[i] - v))
        j = remaining[best]
        relax_steps.append(AttributionStep(j, obs.values[j], v - means[best]))
        current = cands[best]
        v = means[best]
        remaining.pop(best)
    # fixing order is the reverse of relaxation order
    return Attribution(explainer.label, baseline, tuple(reversed(relax_steps)),
                       final_prediction, direction)


def shapley_oracle(
    explainer: Explainer, obs: Observation, max_features: int = 8
) -> dict[str, float]:
    """Exact Shapley values by enumerating all coalitions (test oracle).

    The value of a coalition S is the mean prediction with the columns in S
    pinned to the observation. Only practical for small feature counts.
    """
    data = explainer.data
    obs = obs.validated(data)
    names = sorted(data.feature_names)
    p = len(names)
    if p > max_features or p > 8:
        raise UsageError(
            f"shapley_oracle enumerates 2^p coalitions; p={p} exceeds the limit"
        )

    values: dict[frozenset, float] = {}
    for size in range(p + 1):
        for subset in combinations(names, size):
            d = data
            for j in subset:
                d = substitute(d, j, obs.values[j])
            values[frozenset(subset)] = float(predict_batch(explainer, d).mean())

    fact = math.factorial
    shapley = {}
    for j in names:
        total = 0.0
        others = [x for x in names if x != j]
        for size in range(p):
            w = fact(size) * fact(p - size - 1) / fact(p)
            for subset in combinations(others, size):
                s = frozenset(subset)
                total += w * (values[s | {j}] - values[s])
        shapley[j] = total
    return shapley
