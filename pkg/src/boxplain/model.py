"""The explainer wrapper plus two trainable reference models (linear, tree).

Any predictive model is reduced to a single contract: a function mapping a
query dataset of m rows to m finite scores. ``explain`` binds such a function
to validation data, true targets and a display label; everything downstream
works only through that handle.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .data import ColumnKind, TabularDataset, take_rows
from .errors import FitError, ModelAdapterError, UsageError


@dataclass(frozen=True)
class PredictFunction:
    """Callable contract: TabularDataset of m rows -> length-m finite score vector.

    ``reentrant`` declares whether concurrent calls are safe; when it is
    False the explainer serializes calls through a lock.
    """

    fn: Callable[[TabularDataset], np.ndarray]
    reentrant: bool = True

    def __call__(self, query: TabularDataset) -> np.ndarray:
        return self.fn(query)


@dataclass(eq=False)
class Explainer:
    predict: PredictFunction
    data: TabularDataset  # feature columns only
    y: np.ndarray
    label: str
    _gate: threading.Lock = field(default_factory=threading.Lock, repr=False)


def _validate_scores(out, m: int, label: str) -> np.ndarray:
    try:
        arr = np.asarray(out, dtype=np.float64).reshape(-1)
    except (TypeError, ValueError) as e:
        raise ModelAdapterError(f"model '{label}' returned non-numeric output: {e}")
    if arr.size != m:
        raise ModelAdapterError(
            f"model '{label}' returned {arr.size} predictions for {m} query rows"
        )
    if arr.size and not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise ModelAdapterError(
            f"model '{label}' returned a non-finite prediction at row {bad}"
        )
    return arr


def explain(predict, data: TabularDataset, y, label: str) -> Explainer:
    """Wrap a predict function, validation data and targets into an Explainer.

    Runs one probe call on the first min(n, 8) rows so broken adapters fail
    here rather than deep inside an explainer.
    """
    if not isinstance(predict, PredictFunction):
        if not callable(predict):
            raise UsageError("predict must be callable")
        predict = PredictFunction(predict)
    if not label:
        raise UsageError("label must be nonempty")
    if data.target is not None:
        data = data.drop_target()
    if data.n < 1:
        raise UsageError("validation data must have at least one row")
    yv = np.array(y, dtype=np.float64, copy=True).reshape(-1)
    if yv.size != data.n:
        raise UsageError(f"y has length {yv.size}, data has {data.n} rows")
    if not np.all(np.isfinite(yv)):
        raise UsageError("y contains non-finite values")
    yv.setflags(write=False)

    probe_m = min(data.n, 8)
    probe = take_rows(data, range(probe_m))
    _validate_scores(predict(probe), probe_m, label)
    return Explainer(predict=predict, data=data, y=yv, label=label)


def predict_batch(explainer: Explainer, query: TabularDataset) -> np.ndarray:
    """Score query rows through the wrapped model, validating the contract."""
    if query.schema() != explainer.data.schema():
        raise UsageError(
            f"query schema {query.schema()} does not match "
            f"explainer data schema {explainer.data.schema()}"
        )
    if explainer.predict.reentrant:
        out = explainer.predict(query)
    else:
        with explainer._gate:
            out = explainer.predict(query)
    return _validate_scores(out, query.n, explainer.label)


# ---------------------------------------------------------------------------
# Built-in reference model: ordinary least squares

@dataclass(frozen=True)
class CategoricalCoding:
    levels: tuple[str, ...]  # sorted; first level is the reference (offset 0)
    offsets: dict[str, float]

    def offset(self, level: str) -> float:
        return self.offsets.get(level, 0.0)


@dataclass(frozen=True)
class LinearModel:
    intercept: float
    coefficients: dict[str, float]  # per numeric column
    categoricals: dict[str, CategoricalCoding]

    kind = "linear"

    def predict(self, query: TabularDataset) -> np.ndarray:
        out = np.full(query.n, self.intercept, dtype=np.float64)
        for name, coef in self.coefficients.items():
            out += coef * query.values(name)
        for name, coding in self.categoricals.items():
            vals = query.values(name)
            out += np.array([coding.offset(v) for v in vals], dtype=np.float64)
        return out


def _design_matrix(data: TabularDataset):
    """Intercept + numeric columns + dummy-coded categoricals (first level dropped)."""
    cols = [np.ones(data.n)]
    descriptors = ["intercept"]
    slots = []  # ("numeric", name) | ("level", name, level)
    for c in data.columns:
        if c.kind is ColumnKind.NUMERIC:
            cols.append(c.values.astype(np.float64))
            descriptors.append(f"column '{c.name}'")
            slots.append(("numeric", c.name))
        else:
            levels = c.levels
            for lev in levels[1:]:
                cols.append((c.values == lev).astype(np.float64))
                descriptors.append(f"column '{c.name}' level '{lev}'")
                slots.append(("level", c.name, lev))
    return np.column_stack(cols), descriptors, slots


def _solve_least_squares(X: np.ndarray, y: np.ndarray, descriptors):
    n, p = X.shape
    if n <= p:
        raise FitError(f"need more rows ({n}) than fitted parameters ({p})")
    q, r = np.linalg.qr(X, mode="reduced")
    diag = np.abs(np.diag(r))
    tol = max(n, p) * np.finfo(np.float64).eps * (diag.max() if diag.size else 0.0)
    deficient = np.flatnonzero(diag <= tol)
    if deficient.size:
        raise FitError(f"rank-deficient design: {descriptors[int(deficient[0])]}")
    rhs = q.T @ y
    beta = np.zeros(p)
    for i in range(p - 1, -1, -1):
        beta[i] = (rhs[i] - r[i, i + 1:] @ beta[i + 1:]) / r[i, i]
    return beta


def fit_linear(data: TabularDataset, y) -> LinearModel:
    """Ordinary least squares through a QR decomposition; dummy-coded factors."""
    data = data.drop_target()
    yv = np.asarray(y, dtype=np.float64).reshape(-1)
    if yv.size != data.n:
        raise UsageError(f"y has length {yv.size}, data has {data.n} rows")
    X, descriptors, slots = _design_matrix(data)
    beta = _solve_least_squares(X, yv, descriptors)
    coefficients: dict[str, float] = {}
    categoricals: dict[str, CategoricalCoding] = {}
    for b, slot in zip(beta[1:], slots):
        if slot[0] == "numeric":
            coefficients[slot[1]] = float(b)
        else:
            _, name, lev = slot
            if name not in categoricals:
                categoricals[name] = CategoricalCoding(
                    levels=data.column(name).levels, offsets={}
                )
            categoricals[name].offsets[lev] = float(b)
    return LinearModel(float(beta[0]), coefficients, categoricals)


# ---------------------------------------------------------------------------
# Built-in reference model: CART-style regression tree

@dataclass(frozen=True)
class TreeLeaf:
    value: float


@dataclass(frozen=True)
class TreeSplit:
    variable: str
    threshold: float | None  # numeric split: x < threshold goes left
    left_levels: frozenset[str] | None  # categorical split: level in set goes left
    left: "TreeLeaf | TreeSplit"
    right: "TreeLeaf | TreeSplit"


@dataclass(frozen=True)
class RegressionTree:
    root: TreeLeaf | TreeSplit
    max_depth: int
    min_leaf: int

    kind = "tree"

    def predict(self, query: TabularDataset) -> np.ndarray:
        out = np.empty(query.n, dtype=np.float64)

        def walk(node, idx):
            if isinstance(node, TreeLeaf):
                out[idx] = node.value
                return
            vals = query.values(node.variable)[idx]
            if node.threshold is not None:
                mask = vals < node.threshold
            else:
                members = node.left_levels
                mask = np.array([v in members for v in vals], dtype=bool)
            walk(node.left, idx[mask])
            walk(node.right, idx[~mask])

        walk(self.root, np.arange(query.n))
        return out


def _sse_from_sums(s1: float, s2: float, cnt: int) -> float:
    if cnt == 0:
        return 0.0
    return max(s2 - s1 * s1 / cnt, 0.0)


def _best_split_numeric(values, yv, min_leaf):
    order = np.argsort(values, kind="stable")
    v = values[order]
    ys = yv[order]
    n = v.size
    c1 = np.cumsum(ys)
    c2 = np.cumsum(ys * ys)
    total1, total2 = c1[-1], c2[-1]
    best = None  # (reduction, threshold)
    parent = _sse_from_sums(total1, total2, n)
    for i in range(1, n):
        if v[i] == v[i - 1]:
            continue
        if i < min_leaf or n - i < min_leaf:
            continue
        left = _sse_from_sums(c1[i - 1], c2[i - 1], i)
        right = _sse_from_sums(total1 - c1[i - 1], total2 - c2[i - 1], n - i)
        red = parent - left - right
        if best is None or red > best[0]:
            best = (red, float((v[i - 1] + v[i]) / 2.0))
    return best


def _best_split_categorical(values, yv, min_leaf):
    levels = sorted(set(values))
    if len(levels) < 2:
        return None
    stats = []
    for lev in levels:
        mask = values == lev
        ysub = yv[mask]
        stats.append((float(ysub.mean()), lev, int(ysub.size),
                      float(ysub.sum()), float((ysub * ysub).sum())))
    stats.sort()  # by (mean, level): deterministic mean-ordered levels
    n = yv.size
    total1 = sum(s[3] for s in stats)
    total2 = sum(s[4] for s in stats)
    parent = _sse_from_sums(total1, total2, n)
    best = None  # (reduction, left levels tuple)
    cnt = 0
    s1 = 0.0
    s2 = 0.0
    for j in range(len(stats) - 1):
        cnt += stats[j][2]
        s1 += stats[j][3]
        s2 += stats[j][4]
        if cnt < min_leaf or n - cnt < min_leaf:
            continue
        left = _sse_from_sums(s1, s2, cnt)
        right = _sse_from_sums(total1 - s1, total2 - s2, n - cnt)
        red = parent - left - right
        if best is None or red > best[0]:
            best = (red, tuple(s[1] for s in stats[: j + 1]))
    return best


def fit_tree(data: TabularDataset, y, max_depth: int, min_leaf: int) -> RegressionTree:
    """Greedy binary regression tree minimizing within-child sum of squares.

    Numeric candidate thresholds sit at midpoints between consecutive sorted
    distinct values (x < t goes left). Categorical candidates are prefix
    partitions of the levels ordered by mean target, which is optimal for SSE.
    Growth stops at the depth limit, when min_leaf forbids every split, or
    when no split reduces the SSE.
    """
    if max_depth < 1:
        raise UsageError(f"max_depth must be >= 1, got {max_depth}")
    if min_leaf < 1:
        raise UsageError(f"min_leaf must be >= 1, got {min_leaf}")
    data = data.drop_target()
    yv = np.asarray(y, dtype=np.float64).reshape(-1)
    if yv.size != data.n:
        raise UsageError(f"y has length {yv.size}, data has {data.n} rows")
    if data.n < 1:
        raise UsageError("cannot fit a tree on an empty dataset")

    def build(idx: np.ndarray, depth: int):
        ysub = yv[idx]
        leaf = TreeLeaf(float(ysub.mean()))
        if depth >= max_depth or idx.size < 2 * min_leaf:
            return leaf
        if np.all(ysub == ysub[0]):
            return leaf
        scale = max(1.0, float((ysub * ysub).sum()))
        best = None  # (reduction, col_index, payload)
        for ci, col in enumerate(data.columns):
            vals = col.values[idx]
            if col.kind is ColumnKind.NUMERIC:
                cand = _best_split_numeric(vals, ysub, min_leaf)
            else:
                cand = _best_split_categorical(vals, ysub, min_leaf)
            if cand is not None and (best is None or cand[0] > best[0]):
                best = (cand[0], ci, cand[1])
        if best is None or best[0] <= 1e-12 * scale:
            return leaf
        _, ci, payload = best
        col = data.columns[ci]
        vals = col.values[idx]
        if col.kind is ColumnKind.NUMERIC:
            mask = vals < payload
            node_args = dict(threshold=float(payload), left_levels=None)
        else:
            members = frozenset(payload)
            mask = np.array([v in members for v in vals], dtype=bool)
            node_args = dict(threshold=None, left_levels=frozenset(payload))
        return TreeSplit(
            variable=col.name,
            left=build(idx[mask], depth + 1),
            right=build(idx[~mask], depth + 1),
            **node_args,
        )

    return RegressionTree(build(np.arange(data.n), 0), max_depth, min_leaf)


# ---------------------------------------------------------------------------
# Built-in model (de)serialization

MODEL_FORMAT_VERSION = 1


def _tree_node_to_obj(node):
    if isinstance(node, TreeLeaf):
        return {"value": node.value}
    obj = {
        "variable": node.variable,
        "left": _tree_node_to_obj(node.left),
        "right": _tree_node_to_obj(node.right),
    }
    if node.threshold is not None:
        obj["threshold"] = node.threshold
    else:
        obj["left_levels"] = sorted(node.left_levels)
    return obj


def _tree_node_from_obj(obj):
    if "value" in obj:
        return TreeLeaf(float(obj["value"]))
    return TreeSplit(
        variable=obj["variable"],
        threshold=float(obj["threshold"]) if "threshold" in obj else None,
        left_levels=frozenset(obj["left_levels"]) if "left_levels" in obj else None,
        left=_tree_node_from_obj(obj["left"]),
        right=_tree_node_from_obj(obj["right"]),
    )


def model_to_json(model) -> str:
    """Serialize a built-in model to a versioned JSON document."""
    if isinstance(model, LinearModel):
        params = {
            "intercept": model.intercept,
            "coefficients": dict(model.coefficients),
            "categoricals": {
                name: {"levels": list(c.levels), "offsets": dict(c.offsets)}
                for name, c in model.categoricals.items()
            },
        }
    elif isinstance(model, RegressionTree):
        params = {
            "max_depth": model.max_depth,
            "min_leaf": model.min_leaf,
            "root": _tree_node_to_obj(model.root),
        }
    else:
        raise UsageError(f"cannot serialize model of type {type(model).__name__}")
    doc = {"version": MODEL_FORMAT_VERSION, "kind": model.kind, "parameters": params}
    return json.dumps(doc, sort_keys=True, ensure_ascii=False,
                      separators=(",", ":")) + "\n"


def model_from_json(text: str):
    """Load a built-in model previously written by ``model_to_json``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"model file is not valid JSON: {e}") from None
    if not isinstance(doc, dict) or doc.get("version") != MODEL_FORMAT_VERSION:
        raise UsageError("model file missing or unsupported version field")
    kind = doc.get("kind")
    params = doc.get("parameters", {})
    if kind == "linear":
        cats = {
            name: CategoricalCoding(
                levels=tuple(c["levels"]),
                offsets={k: float(v) for k, v in c["offsets"].items()},
            )
            for name, c in params.get("categoricals", {}).items()
        }
        model = LinearModel(
            intercept=float(params["intercept"]),
            coefficients={k: float(v) for k, v in params.get("coefficients", {}).items()},
            categoricals=cats,
        )
        if not math.isfinite(model.intercept):
            raise UsageError("model file has non-finite intercept")
        return model
    if kind == "tree":
        return RegressionTree(
            root=_tree_node_from_obj(params["root"]),
            max_depth=int(params["max_depth"]),
            min_leaf=int(params["min_leaf"]),
        )
    raise UsageError(f"unknown model kind {kind!r}")
