"""Immutable tabular datasets and the column primitives every explainer builds on.

A dataset is an ordered collection of named, typed columns (numeric or
categorical) of equal length. All operations are pure: they return new
datasets and never touch the input, so datasets can be shared freely across
threads.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, UsageError


class ColumnKind(str, Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class GridStrategy:
    """How to turn a column into an ordered evaluation grid."""

    kind: str  # "uniform" | "quantile" | "unique"
    k: int | None = None

    @classmethod
    def uniform(cls, k: int) -> "GridStrategy":
        if k < 2:
            raise UsageError(f"uniform grid needs k >= 2, got {k}")
        return cls("uniform", k)

    @classmethod
    def quantile(cls, k: int) -> "GridStrategy":
        if k < 2:
            raise UsageError(f"quantile grid needs k >= 2, got {k}")
        return cls("quantile", k)

    @classmethod
    def unique(cls) -> "GridStrategy":
        return cls("unique", None)


@dataclass(frozen=True)
class Column:
    name: str
    kind: ColumnKind
    values: np.ndarray  # float64 for numeric, object (str) for categorical

    def __post_init__(self):
        arr = np.asarray(self.values)
        if self.kind is ColumnKind.NUMERIC:
            try:
                arr = arr.astype(np.float64, copy=True)
            except (TypeError, ValueError) as e:
                raise DataError(f"column '{self.name}': {e}") from None
            if arr.size and not np.all(np.isfinite(arr)):
                raise DataError(f"column '{self.name}': non-finite numeric value")
        else:
            arr = np.array([str(v) for v in arr], dtype=object)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def levels(self) -> tuple[str, ...]:
        if self.kind is not ColumnKind.CATEGORICAL:
            raise UsageError(f"column '{self.name}' is numeric, has no levels")
        return tuple(sorted(set(self.values)))


@dataclass(frozen=True)
class TabularDataset:
    """Immutable columnar table; ``target`` names the response column if present."""

    columns: tuple[Column, ...]
    target: str | None = None

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise DataError("duplicate column names")
        lengths = {len(c.values) for c in self.columns}
        if len(lengths) > 1:
            raise DataError("columns have differing lengths")
        if self.target is not None and self.target not in names:
            raise DataError(f"target column '{self.target}' not present")

    @property
    def n(self) -> int:
        return len(self.columns[0].values) if self.columns else 0

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns if c.name != self.target)

    def has_column(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise UsageError(f"no such column: '{name}'")

    def kind(self, name: str) -> ColumnKind:
        return self.column(name).kind

    def values(self, name: str) -> np.ndarray:
        return self.column(name).values

    def schema(self) -> tuple[tuple[str, ColumnKind], ...]:
        return tuple((c.name, c.kind) for c in self.columns)

    def drop_target(self) -> "TabularDataset":
        if self.target is None:
            return self
        cols = tuple(c for c in self.columns if c.name != self.target)
        return TabularDataset(cols, target=None)

    def target_vector(self) -> np.ndarray:
        if self.target is None:
            raise UsageError("dataset has no target column")
        col = self.column(self.target)
        if col.kind is not ColumnKind.NUMERIC:
            raise DataError(f"target column '{self.target}' is not numeric")
        return col.values

    def row_values(self, i: int) -> dict[str, float | str]:
        if not 0 <= i < self.n:
            raise UsageError(f"row index {i} out of range 0..{self.n - 1}")
        out: dict[str, float | str] = {}
        for c in self.columns:
            v = c.values[i]
            out[c.name] = float(v) if c.kind is ColumnKind.NUMERIC else str(v)
        return out

    @classmethod
    def from_columns(
        cls,
        cols: Iterable[tuple[str, ColumnKind, Sequence]],
        target: str | None = None,
    ) -> "TabularDataset":
        return cls(tuple(Column(n, k, np.asarray(v)) for n, k, v in cols), target)


@dataclass(frozen=True)
class Observation:
    """One feature row, keyed by column name; validated against a dataset schema."""

    values: dict[str, float | str] = field(default_factory=dict)

    def validated(self, data: TabularDataset) -> "Observation":
        feats = data.feature_names
        missing = [c for c in feats if c not in self.values]
        if missing:
            raise UsageError(f"observation missing column '{missing[0]}'")
        extra = [c for c in self.values if c not in feats]
        if extra:
            raise UsageError(f"observation has unexpected column '{extra[0]}'")
        fixed: dict[str, float | str] = {}
        for name in feats:
            v = self.values[name]
            if data.kind(name) is ColumnKind.NUMERIC:
                try:
                    fv = float(v)
                except (TypeError, ValueError):
                    raise UsageError(
                        f"observation value for numeric column '{name}' "
                        f"is not a number: {v!r}"
                    ) from None
                if not math.isfinite(fv):
                    raise UsageError(f"observation value for '{name}' is not finite")
                fixed[name] = fv
            else:
                fixed[name] = str(v)
        return Observation(fixed)

    def to_dataset(self, schema_of: TabularDataset) -> TabularDataset:
        """One-row dataset with the columns ordered like ``schema_of``'s features."""
        obs = self.validated(schema_of)
        cols = []
        for name in schema_of.feature_names:
            kind = schema_of.kind(name)
            cols.append((name, kind, [obs.values[name]]))
        return TabularDataset.from_columns(cols)

    @classmethod
    def from_row(cls, data: TabularDataset, i: int) -> "Observation":
        if not 0 <= i < data.n:
            raise UsageError(f"index {i} out of range 0..{data.n - 1}")
        row = {k: v for k, v in data.row_values(i).items() if k != data.target}
        return cls(row)


def _parse_number(cell: str) -> float | None:
    """A cell parses as a number iff float() accepts it and the result is finite."""
    try:
        v = float(cell)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def load_csv(
    source,
    target: str,
    schema_hints: dict[str, ColumnKind] | None = None,
) -> TabularDataset:
    """Parse RFC-4180-style CSV (header row, UTF-8, '.' decimal) into a dataset.

    A column is numeric iff every cell parses as a finite decimal number,
    unless a schema hint forces the kind. Missing (empty) cells are rejected.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    elif hasattr(source, "read"):
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    else:
        raise UsageError(f"unsupported CSV source: {type(source).__name__}")

    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise DataError("empty CSV: no header row")
    header = rows[0]
    if len(set(header)) != len(header):
        raise DataError("duplicate column names in header")
    body = rows[1:]
    if not body:
        raise DataError("CSV has a header but no data rows")
    if target not in header:
        raise DataError(f"target column '{target}' not found in header")

    width = len(header)
    for i, row in enumerate(body, start=1):
        if len(row) != width:
            raise DataError(f"row {i}: expected {width} cells, got {len(row)}")

    hints = schema_hints or {}
    for name in hints:
        if name not in header:
            raise DataError(f"schema hint for unknown column '{name}'")

    cols: list[Column] = []
    for j, name in enumerate(header):
        cells = [row[j] for row in body]
        for i, cell in enumerate(cells, start=1):
            if cell == "":
                raise DataError(f"missing value at row {i}, column '{name}'")
        hint = hints.get(name)
        parsed = [_parse_number(c) for c in cells]
        all_numeric = all(p is not None for p in parsed)
        if hint is ColumnKind.NUMERIC and not all_numeric:
            bad = next(i for i, p in enumerate(parsed, start=1) if p is None)
            raise DataError(
                f"column '{name}' hinted numeric but row {bad} "
                f"has unparsable cell {cells[bad - 1]!r}"
            )
        kind = hint or (ColumnKind.NUMERIC if all_numeric else ColumnKind.CATEGORICAL)
        if kind is ColumnKind.NUMERIC:
            cols.append(Column(name, kind, np.array(parsed, dtype=np.float64)))
        else:
            cols.append(Column(name, kind, np.array(cells, dtype=object)))
    return TabularDataset(tuple(cols), target=target)


def format_number(v: float) -> str:
    """Shortest decimal representation that round-trips the double exactly."""
    return repr(float(v))


def write_csv(data: TabularDataset) -> str:
    """Serialize to RFC-4180-style CSV (header, minimal quoting, LF line ends)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(data.names)
    numeric = [c.kind is ColumnKind.NUMERIC for c in data.columns]
    for i in range(data.n):
        row = []
        for c, is_num in zip(data.columns, numeric):
            row.append(format_number(c.values[i]) if is_num else str(c.values[i]))
        writer.writerow(row)
    return out.getvalue()


def quantile(column, p: float) -> float:
    """Type-7 (linear interpolation) quantile of a numeric vector."""
    arr = np.asarray(column, dtype=np.float64)
    if arr.size == 0:
        raise DataError("quantile of an empty column")
    if not 0.0 <= p <= 1.0:
        raise UsageError(f"quantile probability must be in [0,1], got {p}")
    v = np.sort(arr)
    h = (v.size - 1) * p
    lo = int(math.floor(h))
    if lo + 1 >= v.size:
        return float(v[-1])
    return float(v[lo] + (h - lo) * (v[lo + 1] - v[lo]))


def make_grid(data: TabularDataset, variable: str, strategy: GridStrategy) -> list:
    """Ordered evaluation grid for a column.

    uniform(k): k equally spaced points min..max; quantile(k): type-7 quantiles
    at p = 0, 1/(k-1), ..., 1; unique: sorted distinct values. Numeric grids
    are deduplicated, so the result is strictly increasing.
    """
    col = data.column(variable)
    if strategy.kind == "unique":
        if col.kind is ColumnKind.CATEGORICAL:
            return sorted(set(col.values))
        return [float(v) for v in np.unique(col.values)]
    if col.kind is not ColumnKind.NUMERIC:
        raise UsageError(
            f"{strategy.kind} grid requires a numeric column, "
            f"'{variable}' is categorical"
        )
    if strategy.kind == "uniform":
        pts = np.linspace(col.values.min(), col.values.max(), strategy.k)
    elif strategy.kind == "quantile":
        k = strategy.k
        pts = np.array([quantile(col.values, i / (k - 1)) for i in range(k)])
    else:
        raise UsageError(f"unknown grid strategy '{strategy.kind}'")
    return [float(v) for v in np.unique(pts)]


def substitute(data: TabularDataset, variable: str, value) -> TabularDataset:
    """New dataset with the named column constant at ``value`` for every row."""
    col = data.column(variable)
    if col.kind is ColumnKind.NUMERIC:
        if isinstance(value, str) or not isinstance(value, (int, float, np.floating, np.integer)):
            raise UsageError(
                f"column '{variable}' is numeric, cannot substitute {value!r}"
            )
        fv = float(value)
        if not math.isfinite(fv):
            raise UsageError(f"cannot substitute non-finite value into '{variable}'")
        new_vals = np.full(data.n, fv, dtype=np.float64)
    else:
        if not isinstance(value, str):
            raise UsageError(
                f"column '{variable}' is categorical, cannot substitute {value!r}"
            )
        new_vals = np.array([value] * data.n, dtype=object)
    return replace_column(data, variable, new_vals)


def replace_column(data: TabularDataset, variable: str, values) -> TabularDataset:
    """New dataset with the named column's values replaced, kind preserved."""
    col = data.column(variable)
    cols = tuple(
        Column(c.name, c.kind, values) if c.name == variable else c
        for c in data.columns
    )
    del col
    return TabularDataset(cols, target=data.target)


def derive_seed(seed: int, *parts) -> int:
    """Deterministic 64-bit stream key from a base seed and arbitrary tags.

    Stable across platforms and sessions (sha256, not hash()).
    """
    h = hashlib.sha256()
    h.update(int(seed).to_bytes(16, "little", signed=True))
    for p in parts:
        token = f"{type(p).__name__}:{p}".encode("utf-8")
        h.update(len(token).to_bytes(4, "little"))
        h.update(token)
    return int.from_bytes(h.digest()[:8], "little")


def _rng_for(seed: int, variable: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, "column", variable))


def permute_column(data: TabularDataset, variable: str, seed: int) -> TabularDataset:
    """Shuffle one column with a generator keyed by (seed, variable name).

    The same (seed, variable, n) always yields the same permutation, and
    different variables draw from independent streams.
    """
    col = data.column(variable)
    perm = _rng_for(seed, variable).permutation(data.n)
    return replace_column(data, variable, col.values[perm])


def take_rows(data: TabularDataset, indices) -> TabularDataset:
    """Row-subset view (copying) in the given index order."""
    idx = np.asarray(indices, dtype=np.intp)
    cols = tuple(Column(c.name, c.kind, c.values[idx]) for c in data.columns)
    return TabularDataset(cols, target=data.target)


def concat_rows(datasets: Sequence[TabularDataset]) -> TabularDataset:
    """Stack datasets with identical schemas vertically."""
    if not datasets:
        raise UsageError("concat_rows needs at least one dataset")
    first = datasets[0]
    for d in datasets[1:]:
        if d.schema() != first.schema():
            raise UsageError("concat_rows: schema mismatch")
    cols = []
    for j, c in enumerate(first.columns):
        parts = [d.columns[j].values for d in datasets]
        cols.append(Column(c.name, c.kind, np.concatenate(parts)))
    return TabularDataset(tuple(cols), target=first.target)


def ecdf_position(column, v: float) -> float:
    """Weak-inequality empirical CDF: fraction of values <= v."""
    arr = np.asarray(column, dtype=np.float64)
    if arr.size == 0:
        raise DataError("ecdf_position of an empty column")
    return float(np.count_nonzero(arr <= v) / arr.size)
