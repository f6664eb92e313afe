"""
Explaining models that live outside the process
===============================================

The explainers only ever call a predict function, so a model behind a pipe
or an HTTP endpoint works like a local one. This demo spins up both kinds
of fixture around the same scoring rule (3*surface + year/10) and shows the
wrappers agreeing with the in-process version.
"""

import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from boxplain import (
    HttpModelSpec,
    SubprocessModelSpec,
    explain,
    http_model,
    model_performance,
    subprocess_model,
)

from _synthetic import apartments

CHILD = """
import csv, io, sys
rows = list(csv.reader(io.StringIO(sys.stdin.read())))
header = rows[0]
si, yi = header.index("surface"), header.index("year")
for row in rows[1:]:
    print(repr(3.0 * float(row[si]) + float(row[yi]) / 10.0))
"""


class ScoreHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def do_POST(self):
        doc = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        si = doc["columns"].index("surface")
        yi = doc["columns"].index("year")
        preds = [3.0 * row[si] + row[yi] / 10.0 for row in doc["rows"]]
        body = json.dumps({"predictions": preds}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(body)


data = apartments(n=200)
features, price = data.drop_target(), data.target_vector()


def in_process(query):
    return 3.0 * query.values("surface") + query.values("year") / 10.0


reference = explain(in_process, features, price, "in-process")

piped = explain(
    subprocess_model(SubprocessModelSpec((sys.executable, "-c", CHILD))),
    features, price, "subprocess",
)

server = ThreadingHTTPServer(("127.0.0.1", 0), ScoreHandler)
threading.Thread(target=server.serve_forever, daemon=True).start()
host, port = server.server_address
served = explain(
    http_model(HttpModelSpec(f"http://{host}:{port}/", max_batch=64)),
    features, price, "http",
)

for e in (reference, piped, served):
    print(f"{e.label:>11} RMSE: {model_performance(e).rmse:.4f}")

server.shutdown()
print("all three wrappers score identically; any explainer works on any of them")
