import json
import sys
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from boxplain.adapters import (
    HttpModelSpec,
    SubprocessModelSpec,
    http_predict,
    subprocess_predict,
)
from boxplain.errors import ModelAdapterError, UsageError

from conftest import make_dataset

# Child process fixtures: each reads the query CSV on stdin and writes one
# prediction per data row. Written as python -c payloads for portability.

CONSTANT_CHILD = (
    "import sys; lines = sys.stdin.read().splitlines(); "
    "print('\\n'.join('1.5' for _ in lines[1:]))"
)

ROWSUM_CHILD = """
import csv, io, sys
rows = list(csv.reader(io.StringIO(sys.stdin.read())))
header, body = rows[0], rows[1:]
for row in body:
    total = 0.0
    for cell in row:
        try:
            total = total + float(cell)
        except ValueError:
            pass
    sys.stdout.write(repr(total) + "\\n")
"""

SHORT_CHILD = (
    "import sys; lines = sys.stdin.read().splitlines(); "
    "print('\\n'.join('1.0' for _ in lines[2:]))"
)


def child_spec(code, timeout_ms=None):
    return SubprocessModelSpec((sys.executable, "-c", code), timeout_ms=timeout_ms)


def rowsum_inprocess(query):
    """Left-to-right float sum of the numeric cells of each row."""
    out = []
    numeric = [c for c in query.columns if c.kind.value == "numeric"]
    for i in range(query.n):
        total = 0.0
        for c in numeric:
            total = total + float(c.values[i])
        out.append(total)
    return np.array(out)


class TestSubprocessPredict:
    def test_constant_child(self):
        ds = make_dataset({"x": [1.0, 2.0, 3.0]})
        out = subprocess_predict(child_spec(CONSTANT_CHILD), ds)
        assert list(out) == [1.5, 1.5, 1.5]

    def test_round_trip_fidelity(self, rng):
        vals1 = rng.normal(0, 1, 100) * 10.0 ** rng.integers(-10, 10, 100)
        vals2 = rng.normal(0, 100, 100)
        ds = make_dataset({
            "x1": vals1,
            "d": [str(v) for v in rng.choice(["a", "b"], 100)],
            "x2": vals2,
        })
        out = subprocess_predict(child_spec(ROWSUM_CHILD), ds)
        assert np.array_equal(out, rowsum_inprocess(ds))

    def test_nonzero_exit_carries_stderr(self):
        code = "import sys; sys.stderr.write('boom happened'); sys.exit(2)"
        ds = make_dataset({"x": [1.0]})
        with pytest.raises(ModelAdapterError, match="status 2") as exc:
            subprocess_predict(child_spec(code), ds)
        assert "boom happened" in str(exc.value)

    def test_wrong_line_count_message(self):
        ds = make_dataset({"x": [1.0, 2.0, 3.0]})
        with pytest.raises(ModelAdapterError, match="expected 3 predictions, got 2"):
            subprocess_predict(child_spec(SHORT_CHILD), ds)

    def test_unparsable_line(self):
        code = "import sys; sys.stdin.read(); print('not-a-number')"
        ds = make_dataset({"x": [1.0]})
        with pytest.raises(ModelAdapterError, match="not a number"):
            subprocess_predict(child_spec(code), ds)

    def test_non_finite_line(self):
        code = "import sys; sys.stdin.read(); print('nan')"
        ds = make_dataset({"x": [1.0]})
        with pytest.raises(ModelAdapterError, match="not finite"):
            subprocess_predict(child_spec(code), ds)

    def test_timeout_kills_child(self):
        code = "import sys, time; time.sleep(5); sys.stdin.read()"
        ds = make_dataset({"x": [1.0]})
        start = time.monotonic()
        with pytest.raises(ModelAdapterError, match="timed out"):
            subprocess_predict(child_spec(code, timeout_ms=300), ds)
        assert time.monotonic() - start < 3.0

    def test_spawn_failure(self):
        ds = make_dataset({"x": [1.0]})
        spec = SubprocessModelSpec(("/no/such/binary-xyz",))
        with pytest.raises(ModelAdapterError, match="failed to start"):
            subprocess_predict(spec, ds)

    def test_shell_command_string(self):
        ds = make_dataset({"x": [1.0, 2.0]})
        out = subprocess_predict(
            SubprocessModelSpec("tail -n +2 | sed 's/.*/7.0/'"), ds
        )
        assert list(out) == [7.0, 7.0]

    def test_env_var_overrides_timeout(self, monkeypatch):
        monkeypatch.setenv("BOXPLAIN_ADAPTER_TIMEOUT_MS", "200")
        code = "import sys, time; time.sleep(5); sys.stdin.read()"
        ds = make_dataset({"x": [1.0]})
        with pytest.raises(ModelAdapterError, match="200 ms"):
            subprocess_predict(child_spec(code), ds)

    def test_empty_command_rejected(self):
        with pytest.raises(UsageError):
            SubprocessModelSpec("")


class _StubHandler(BaseHTTPRequestHandler):
    server_log: list

    def log_message(self, *args):
        pass

    def do_POST(self):
        body = self.rfile.read(int(self.headers.get("Content-Length", 0)))
        doc = json.loads(body)
        rows = doc["rows"]
        kinds = doc["kinds"]
        self.server.request_sizes.append(len(rows))

        if self.path == "/error500":
            self.send_response(500)
            self.end_headers()
            self.wfile.write(b"server exploded")
            return
        if self.path == "/badjson":
            self._reply(200, b"{not json")
            return
        if self.path == "/short":
            self._reply(200, json.dumps({"predictions": [1.0]}).encode())
            return
        if self.path == "/slow":
            time.sleep(5)
            self._reply(200, json.dumps({"predictions": [0.0] * len(rows)}).encode())
            return
        preds = []
        for row in rows:
            total = 0.0
            for cell, kind in zip(row, kinds):
                if kind == "numeric":
                    total = total + float(cell)
            preds.append(total)
        self._reply(200, json.dumps({"predictions": preds}).encode())

    def _reply(self, status, payload):
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(payload)


@pytest.fixture(scope="module")
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    server.request_sizes = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()


def _url(server, path=""):
    host, port = server.server_address
    return f"http://{host}:{port}{path}"


class TestHttpPredict:
    def test_row_sums(self, stub_server):
        ds = make_dataset({"x1": [1.0, 3.0], "x2": [2.0, 4.0]})
        out = http_predict(HttpModelSpec(_url(stub_server)), ds)
        assert list(out) == [3.0, 7.0]

    def test_categorical_cells_sent_as_strings(self, stub_server):
        ds = make_dataset({"x": [1.0, 2.0], "d": ["u", "v"]})
        out = http_predict(HttpModelSpec(_url(stub_server)), ds)
        assert list(out) == [1.0, 2.0]

    def test_batching_sizes_and_order(self, stub_server):
        n = 2500
        ds = make_dataset({"x": np.arange(float(n))})
        stub_server.request_sizes.clear()
        out = http_predict(HttpModelSpec(_url(stub_server), max_batch=1024), ds)
        assert stub_server.request_sizes == [1024, 1024, 452]
        assert np.array_equal(out, np.arange(float(n)))

    def test_batching_is_invisible(self, stub_server, rng):
        ds = make_dataset({"x": rng.normal(0, 9, 100)})
        small = http_predict(HttpModelSpec(_url(stub_server), max_batch=7), ds)
        big = http_predict(HttpModelSpec(_url(stub_server), max_batch=1024), ds)
        assert np.array_equal(small, big)

    def test_server_error_includes_status(self, stub_server):
        ds = make_dataset({"x": [1.0]})
        with pytest.raises(ModelAdapterError, match="500"):
            http_predict(HttpModelSpec(_url(stub_server, "/error500")), ds)

    def test_malformed_json(self, stub_server):
        ds = make_dataset({"x": [1.0]})
        with pytest.raises(ModelAdapterError, match="malformed JSON"):
            http_predict(HttpModelSpec(_url(stub_server, "/badjson")), ds)

    def test_wrong_prediction_count(self, stub_server):
        ds = make_dataset({"x": [1.0, 2.0, 3.0]})
        with pytest.raises(ModelAdapterError, match="expected 3"):
            http_predict(HttpModelSpec(_url(stub_server, "/short")), ds)

    def test_timeout(self, stub_server):
        ds = make_dataset({"x": [1.0]})
        spec = HttpModelSpec(_url(stub_server, "/slow"), timeout_ms=300)
        with pytest.raises(ModelAdapterError, match="request failed"):
            http_predict(spec, ds)

    def test_connection_refused(self):
        ds = make_dataset({"x": [1.0]})
        spec = HttpModelSpec("http://127.0.0.1:1/", timeout_ms=500)
        with pytest.raises(ModelAdapterError):
            http_predict(spec, ds)

    def test_invalid_url_rejected(self):
        with pytest.raises(UsageError):
            HttpModelSpec("not-a-url")
        with pytest.raises(UsageError):
            HttpModelSpec("http://host/", max_batch=0)

    def test_round_trip_fidelity_against_inprocess(self, stub_server, rng):
        vals = rng.normal(0, 1, 64) * 10.0 ** rng.integers(-8, 8, 64)
        ds = make_dataset({"x1": vals, "x2": rng.normal(0, 5, 64)})
        out = http_predict(HttpModelSpec(_url(stub_server)), ds)
        assert np.array_equal(out, rowsum_inprocess(ds))
