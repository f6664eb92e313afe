"""Clients that turn external programs and HTTP services into predict functions.

Subprocess protocol: the query is written to the child's stdin as CSV
(header row, LF line endings, shortest round-trip numbers), stdin is closed,
and stdout must contain exactly one decimal number per query row. One process
is spawned per call.

HTTP protocol: POST one JSON body per batch of at most ``max_batch`` rows,
``{"columns": [...], "kinds": [...], "rows": [[...], ...]}``, and expect
``{"predictions": [...]}`` with one number per row.
"""

from __future__ import annotations

import json
import math
import os
import subprocess
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass

import numpy as np

from .data import ColumnKind, TabularDataset, take_rows, write_csv
from .errors import ModelAdapterError, UsageError
from .model import PredictFunction

DEFAULT_TIMEOUT_MS = 30000
TIMEOUT_ENV = "BOXPLAIN_ADAPTER_TIMEOUT_MS"
STDERR_CAP = 4096


def _resolve_timeout_ms(explicit: int | None) -> int:
    if explicit is not None:
        return explicit
    raw = os.environ.get(TIMEOUT_ENV)
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise UsageError(f"{TIMEOUT_ENV} must be an integer, got {raw!r}")
    return DEFAULT_TIMEOUT_MS


def _cap(text: bytes | str) -> str:
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    return text[:STDERR_CAP]


@dataclass(frozen=True)
class SubprocessModelSpec:
    """External model run as one child process per predict call; not reentrant."""

    command: str | tuple[str, ...]
    timeout_ms: int | None = None

    def __post_init__(self):
        if not self.command:
            raise UsageError("subprocess model command must be nonempty")

    @property
    def argv(self) -> list[str]:
        if isinstance(self.command, str):
            return ["/bin/sh", "-c", self.command]
        return list(self.command)


@dataclass(frozen=True)
class HttpModelSpec:
    """External model behind an HTTP endpoint; safe for concurrent calls."""

    url: str
    timeout_ms: int | None = None
    max_batch: int = 1024
    headers: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        parsed = urllib.parse.urlparse(self.url)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise UsageError(f"invalid model endpoint URL: {self.url!r}")
        if self.max_batch < 1:
            raise UsageError(f"max_batch must be >= 1, got {self.max_batch}")


def subprocess_predict(spec: SubprocessModelSpec, query: TabularDataset) -> np.ndarray:
    """Run the child once, feed the query CSV, parse one prediction per line."""
    payload = write_csv(query).encode("utf-8")
    timeout_s = _resolve_timeout_ms(spec.timeout_ms) / 1000.0
    try:
        proc = subprocess.Popen(
            spec.argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
        )
    except OSError as e:
        raise ModelAdapterError(f"failed to start model process: {e}")
    try:
        stdout, stderr = proc.communicate(payload, timeout=timeout_s)
    except subprocess.TimeoutExpired:
        proc.kill()
        _, stderr = proc.communicate()
        raise ModelAdapterError(
            f"model process timed out after {int(timeout_s * 1000)} ms",
            stderr_text=_cap(stderr),
        )
    if proc.returncode != 0:
        raise ModelAdapterError(
            f"model process exited with status {proc.returncode}: {_cap(stderr)}",
            stderr_text=_cap(stderr),
        )
    lines = stdout.decode("utf-8", errors="replace").splitlines()
    if len(lines) != query.n:
        raise ModelAdapterError(
            f"expected {query.n} predictions, got {len(lines)}",
            stderr_text=_cap(stderr),
        )
    out = np.empty(query.n, dtype=np.float64)
    for i, line in enumerate(lines):
        try:
            v = float(line.strip())
        except ValueError:
            raise ModelAdapterError(
                f"prediction line {i + 1} is not a number: {line.strip()!r}",
                stderr_text=_cap(stderr),
            )
        if not math.isfinite(v):
            raise ModelAdapterError(
                f"prediction line {i + 1} is not finite: {line.strip()!r}",
                stderr_text=_cap(stderr),
            )
        out[i] = v
    return out


def _rows_payload(query: TabularDataset) -> dict:
    numeric = [c.kind is ColumnKind.NUMERIC for c in query.columns]
    rows = []
    for i in range(query.n):
        row = []
        for c, is_num in zip(query.columns, numeric):
            row.append(float(c.values[i]) if is_num else str(c.values[i]))
        rows.append(row)
    return {
        "columns": list(query.names),
        "kinds": [c.kind.value for c in query.columns],
        "rows": rows,
    }


def http_predict(spec: HttpModelSpec, query: TabularDataset) -> np.ndarray:
    """POST the query in batches and concatenate the returned predictions."""
    timeout_s = _resolve_timeout_ms(spec.timeout_ms) / 1000.0
    if query.n == 0:
        return np.empty(0, dtype=np.float64)
    chunks: list[np.ndarray] = []
    for start in range(0, query.n, spec.max_batch):
        batch = _slice_rows(query, start, min(start + spec.max_batch, query.n))
        body = json.dumps(_rows_payload(batch)).encode("utf-8")
        req = urllib.request.Request(
            spec.url,
            data=body,
            method="POST",
            headers={"Content-Type": "application/json", **dict(spec.headers)},
        )
        try:
            with urllib.request.urlopen(req, timeout=timeout_s) as resp:
                status = resp.status
                raw = resp.read()
        except urllib.error.HTTPError as e:
            raise ModelAdapterError(
                f"model endpoint returned status {e.code}: {_cap(e.read())}"
            )
        except (urllib.error.URLError, TimeoutError, OSError) as e:
            raise ModelAdapterError(f"model endpoint request failed: {e}")
        if not 200 <= status < 300:
            raise ModelAdapterError(
                f"model endpoint returned status {status}: {_cap(raw)}"
            )
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise ModelAdapterError(
                f"model endpoint returned malformed JSON: {_cap(raw)}"
            )
        preds = doc.get("predictions") if isinstance(doc, dict) else None
        if not isinstance(preds, list):
            raise ModelAdapterError(
                f"model endpoint response missing 'predictions': {_cap(raw)}"
            )
        if len(preds) != batch.n:
            raise ModelAdapterError(
                f"expected {batch.n} predictions in batch, got {len(preds)}"
            )
        arr = np.asarray(preds, dtype=np.float64)
        if arr.size and not np.all(np.isfinite(arr)):
            raise ModelAdapterError("model endpoint returned a non-finite prediction")
        chunks.append(arr)
    return np.concatenate(chunks)


def _slice_rows(query: TabularDataset, start: int, stop: int) -> TabularDataset:
    return take_rows(query, range(start, stop))


def subprocess_model(spec: SubprocessModelSpec) -> PredictFunction:
    """Predict function over the subprocess protocol (serialized by the gate)."""
    return PredictFunction(lambda q: subprocess_predict(spec, q), reentrant=False)


def http_model(spec: HttpModelSpec) -> PredictFunction:
    """Predict function over the HTTP protocol (safe for concurrent calls)."""
    return PredictFunction(lambda q: http_predict(spec, q), reentrant=True)
