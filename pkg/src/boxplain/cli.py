"""Command-line orchestration: load data, wrap models, run one explainer,
write JSON/SVG outputs.

Exit codes: 0 success, 1 usage, 2 data, 3 model adapter, 4 I/O. Every error
prints a one-line machine-parsable ``ERROR[<code>]:`` prefix to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile

from . import adapters
from .data import GridStrategy, Observation, TabularDataset, load_csv
from .errors import BoxplainError, DataError, OutputError, UsageError
from .local_explainers import STEP_DOWN, STEP_UP, break_down, ceteris_paribus, normalize_cp
from .model import (
    Explainer,
    PredictFunction,
    explain,
    fit_linear,
    fit_tree,
    model_from_json,
    model_to_json,
)
from .performance import LossKind, model_performance
from .variable_importance import variable_importance
from .variable_response import accumulated_local_effects, factor_merge, partial_dependence
from .viz import export_json_many, render

DEFAULT_TREE_DEPTH = 5
DEFAULT_TREE_MIN_LEAF = 5


class _Parser(argparse.ArgumentParser):
    """argparse that reports through the package error channel (exit code 1)."""

    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}".rstrip())


def _build_parser() -> _Parser:
    parser = _Parser(prog="boxplain", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", required=True, help="validation CSV path")
    common.add_argument("--target", required=True, help="target column name")
    common.add_argument("--train", help="optional separate training CSV")
    common.add_argument("--model", action="append", required=True,
                        metavar="SPEC",
                        help="builtin:ols | builtin:tree[:maxdepth=D,minleaf=M] "
                             "| cmd:<shell command> | http(s)://<url> "
                             "| file:<model JSON>; repeatable")
    common.add_argument("--label", action="append", default=[],
                        help="display label for the i-th --model")
    common.add_argument("--json", dest="json_path", help="write results JSON here")
    common.add_argument("--svg", dest="svg_path", help="write chart SVG here")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    common.add_argument("--title", help="chart title")
    common.add_argument("--width", type=int, default=760)
    common.add_argument("--height", type=int, default=480)
    common.add_argument("--http-header", action="append", default=[],
                        metavar="'Name: value'",
                        help="extra header passed through to http models")
    common.add_argument("--save-model", help="write the fitted builtin model "
                                             "JSON here (single model only)")

    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sub.add_parser("perf", parents=[common],
                   help="residual diagnostics").add_argument(
        "--log-y", action="store_true", help="log-scale survival axis")

    p = sub.add_parser("pdp", parents=[common], help="partial dependence profile")
    p.add_argument("--variable", required=True)
    p.add_argument("--grid", default="quantile:21",
                   help="quantile:K or uniform:K (default quantile:21)")

    p = sub.add_parser("ale", parents=[common], help="accumulated local effects")
    p.add_argument("--variable", required=True)
    p.add_argument("--bins", type=int, default=20)

    p = sub.add_parser("merge", parents=[common],
                       help="merging path for a categorical variable")
    p.add_argument("--variable", required=True)

    p = sub.add_parser("importance", parents=[common],
                       help="permutation variable importance")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--loss", default="rmse", help="rmse | mse | mae")
    p.add_argument("--variables", help="comma-separated subset")

    p = sub.add_parser("cp", parents=[common],
                       help="ceteris-paribus profiles for one observation")
    p.add_argument("--observation", help="one-row CSV of feature values")
    p.add_argument("--row-index", type=int, help="0-based validation row")
    p.add_argument("--variables", help="comma-separated subset")
    p.add_argument("--grid", default="quantile:21")
    p.add_argument("--normalize", action="store_true",
                   help="add quantile-transformed x coordinates")

    p = sub.add_parser("breakdown", parents=[common],
                       help="break-down attribution for one observation")
    p.add_argument("--observation", help="one-row CSV of feature values")
    p.add_argument("--row-index", type=int, help="0-based validation row")
    p.add_argument("--direction", choices=["up", "down"], default="up")
    return parser


def _parse_grid(text: str) -> GridStrategy:
    kind, _, num = text.partition(":")
    if kind not in ("quantile", "uniform") or not num:
        raise UsageError(f"bad --grid {text!r}; use quantile:K or uniform:K")
    try:
        k = int(num)
    except ValueError:
        raise UsageError(f"bad --grid {text!r}; K must be an integer")
    return GridStrategy.quantile(k) if kind == "quantile" else GridStrategy.uniform(k)


def _parse_tree_params(text: str) -> tuple[int, int]:
    depth, leaf = DEFAULT_TREE_DEPTH, DEFAULT_TREE_MIN_LEAF
    if text:
        for part in text.split(","):
            key, _, val = part.partition("=")
            try:
                if key == "maxdepth":
                    depth = int(val)
                elif key == "minleaf":
                    leaf = int(val)
                else:
                    raise ValueError
            except ValueError:
                raise UsageError(
                    f"bad tree parameter {part!r}; use maxdepth=D,minleaf=M"
                ) from None
    return depth, leaf


def _read_file(path: str) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as e:
        raise OutputError(f"cannot read {path}: {e}") from None


def _http_headers(raw: list[str]) -> tuple[tuple[str, str], ...]:
    headers = []
    for item in raw:
        name, sep, value = item.partition(":")
        if not sep or not name.strip():
            raise UsageError(f"bad --http-header {item!r}; use 'Name: value'")
        headers.append((name.strip(), value.strip()))
    return tuple(headers)


def _build_explainers(args) -> tuple[list[Explainer], list]:
    data = load_csv(_read_file(args.data), target=args.target)
    features = data.drop_target()
    y = data.target_vector()
    if args.train:
        train = load_csv(_read_file(args.train), target=args.target)
        if train.drop_target().schema() != features.schema():
            raise DataError("--train schema does not match --data schema")
        train_x, train_y = train.drop_target(), train.target_vector()
    else:
        train_x, train_y = features, y

    specs = args.model
    labels = list(args.label) + [None] * (len(specs) - len(args.label))
    if len(args.label) > len(specs):
        raise UsageError("more --label flags than --model flags")

    explainers: list[Explainer] = []
    fitted_builtins: list = []
    headers = _http_headers(args.http_header)
    for spec, label in zip(specs, labels):
        label = label or spec
        if spec == "builtin:ols":
            model = fit_linear(train_x, train_y)
            fitted_builtins.append(model)
            fn = PredictFunction(model.predict)
        elif spec == "builtin:tree" or spec.startswith("builtin:tree:"):
            depth, leaf = _parse_tree_params(spec[len("builtin:tree:"):])
            model = fit_tree(train_x, train_y, max_depth=depth, min_leaf=leaf)
            fitted_builtins.append(model)
            fn = PredictFunction(model.predict)
        elif spec.startswith("cmd:"):
            command = spec[len("cmd:"):]
            fn = adapters.subprocess_model(adapters.SubprocessModelSpec(command))
        elif spec.startswith(("http://", "https://")):
            fn = adapters.http_model(adapters.HttpModelSpec(spec, headers=headers))
        elif spec.startswith("file:"):
            model = model_from_json(_read_file(spec[len("file:"):]).decode("utf-8"))
            fitted_builtins.append(model)
            fn = PredictFunction(model.predict)
        else:
            raise UsageError(f"unrecognized model spec {spec!r}")
        explainers.append(explain(fn, features, y, label))

    seen = set()
    for e in explainers:
        if e.label in seen:
            raise UsageError(f"duplicate model label '{e.label}'")
        seen.add(e.label)

    if args.save_model:
        if len(fitted_builtins) != 1 or len(specs) != 1:
            raise UsageError("--save-model requires exactly one builtin/file model")
        _atomic_write(args.save_model, model_to_json(fitted_builtins[0]))
    return explainers, fitted_builtins


def parse_observation(data: TabularDataset, path: str | None,
                      row_index: int | None) -> Observation:
    """Observation from a one-row CSV (feature schema) or a validation row."""
    if (path is None) == (row_index is None):
        raise UsageError("provide exactly one of --observation or --row-index")
    if row_index is not None:
        if not 0 <= row_index < data.n:
            raise UsageError(f"index {row_index} out of range 0..{data.n - 1}")
        return Observation.from_row(data, row_index)
    text = _read_file(path).decode("utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r]
    if len(rows) != 2:
        raise UsageError(
            f"observation file must have a header and exactly one row, "
            f"got {max(len(rows) - 1, 0)} rows"
        )
    header, cells = rows
    if len(cells) != len(header):
        raise UsageError("observation row length does not match its header")
    return Observation(dict(zip(header, cells))).validated(data)


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".boxplain-")
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from None
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from None
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _split_variables(raw: str | None) -> list[str] | None:
    if raw is None:
        return None
    names = [v.strip() for v in raw.split(",") if v.strip()]
    if not names:
        raise UsageError("--variables must name at least one column")
    return names


def _run_command(args) -> list:
    explainers, _ = _build_explainers(args)
    features = explainers[0].data
    if args.command == "perf":
        return [model_performance(e) for e in explainers]
    if args.command == "pdp":
        grid = _parse_grid(args.grid)
        return [partial_dependence(e, args.variable, grid) for e in explainers]
    if args.command == "ale":
        return [accumulated_local_effects(e, args.variable, args.bins)
                for e in explainers]
    if args.command == "merge":
        return [factor_merge(e, args.variable) for e in explainers]
    if args.command == "importance":
        kind = LossKind.parse(args.loss)
        variables = _split_variables(args.variables)
        return [
            variable_importance(e, kind, repeats=args.repeats, seed=args.seed,
                                variables=variables, jobs=args.jobs)
            for e in explainers
        ]
    if args.command == "cp":
        obs = parse_observation(features, args.observation, args.row_index)
        grid = _parse_grid(args.grid)
        results = [
            ceteris_paribus(e, obs, _split_variables(args.variables), grid)
            for e in explainers
        ]
        if args.normalize:
            results = [normalize_cp(r, e) for r, e in zip(results, explainers)]
        return results
    if args.command == "breakdown":
        obs = parse_observation(features, args.observation, args.row_index)
        direction = STEP_UP if args.direction == "up" else STEP_DOWN
        return [break_down(e, obs, direction, jobs=args.jobs)
                for e in explainers]
    raise UsageError(f"unknown command {args.command!r}")


def run(argv) -> int:
    """Parse argv, run one explainer pipeline, write outputs; returns exit code."""
    parser = _build_parser()
    try:
        try:
            args = parser.parse_args(list(argv))
        except SystemExit as e:  # --help exits 0 through argparse
            return int(e.code or 0)
        results = _run_command(args)
        payload = export_json_many(results)
        if args.json_path:
            _atomic_write(args.json_path, payload)
        if args.svg_path:
            chart = render(results, width=args.width, height=args.height,
                           title=args.title,
                           log_y=bool(getattr(args, "log_y", False)))
            _atomic_write(args.svg_path, chart.text)
        if not args.json_path and not args.svg_path:
            sys.stdout.write(payload)
        return 0
    except BoxplainError as e:
        code = e.exit_code
        message = str(e)
        first, _, rest = message.partition("\n")
        sys.stderr.write(f"ERROR[{code}]: {first}\n")
        if rest:
            sys.stderr.write(rest + "\n")
        stderr_text = getattr(e, "stderr_text", "")
        if stderr_text:
            sys.stderr.write(stderr_text.rstrip("\n") + "\n")
        return code
    except OSError as e:
        sys.stderr.write(f"ERROR[4]: {e}\n")
        return 4


def main(argv=None) -> None:
    sys.exit(run(sys.argv[1:] if argv is None else list(argv)))
