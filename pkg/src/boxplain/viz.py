"""Render any explainer result (or several, overlaid) to self-contained SVG,
and export results as canonical JSON.

No plotting library is used: charts are assembled from primitive SVG
elements with fixed number formatting, so identical inputs always produce
byte-identical documents.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError

# Per-label stroke colors (stable assignment by position, at most 10 models).
PALETTE = (
    "#0072b2", "#d55e00", "#009e73", "#cc79a7", "#e69f00",
    "#56b4e9", "#994f00", "#8a3ffc", "#6f6f6f", "#198038",
)
POS_COLOR = "#1f77b4"   # break-down: variable increases the prediction
NEG_COLOR = "#e8b915"   # break-down: variable lowers the prediction
REF_COLOR = "#8c8c8c"   # break-down: baseline-to-prediction reference
RMSE_COLOR = "#d62728"  # performance boxplot marker

_FONT = 'font-family="Helvetica,Arial,sans-serif"'


@dataclass(frozen=True)
class ChartDocument:
    text: str
    width: int
    height: int
    digest: str


def _esc(text: str) -> str:
    return (
        str(text)
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _px(v: float) -> str:
    return f"{v:.2f}"


def _fmt_value(v) -> str:
    if isinstance(v, str):
        return v
    s = f"{float(v):.6g}"
    return "0" if s == "-0" else s


def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """Tick positions at 1/2/5 x 10^k steps covering [lo, hi]."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise UsageError("cannot place ticks on a non-finite range")
    if hi < lo:
        lo, hi = hi, lo
    if hi == lo:
        pad = 0.5 if lo == 0 else abs(lo) * 0.05
        lo, hi = lo - pad, hi + pad
    raw = (hi - lo) / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = 10 * mag
    for mult in (1.0, 2.0, 5.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = first
    while t <= hi + step * 1e-9:
        ticks.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return ticks


class _Scale:
    """Affine, monotone data-to-pixel mapping over one axis."""

    def __init__(self, lo: float, hi: float, px_lo: float, px_hi: float):
        if hi == lo:
            pad = 0.5 if lo == 0 else abs(lo) * 0.05
            lo, hi = lo - pad, hi + pad
        self.lo, self.hi = lo, hi
        self.px_lo, self.px_hi = px_lo, px_hi

    def __call__(self, v: float) -> float:
        f = (v - self.lo) / (self.hi - self.lo)
        return self.px_lo + f * (self.px_hi - self.px_lo)


@dataclass
class _Rect:
    x: float
    y: float
    w: float
    h: float

    @property
    def x2(self):
        return self.x + self.w

    @property
    def y2(self):
        return self.y + self.h


def _axes(out, rect: _Rect, xscale, yscale, x_ticks, y_ticks,
          x_labels=None, y_fmt=_fmt_value):
    out.append(
        f'<line x1="{_px(rect.x)}" y1="{_px(rect.y2)}" x2="{_px(rect.x2)}" '
        f'y2="{_px(rect.y2)}" stroke="#333333" stroke-width="1"/>'
    )
    out.append(
        f'<line x1="{_px(rect.x)}" y1="{_px(rect.y)}" x2="{_px(rect.x)}" '
        f'y2="{_px(rect.y2)}" stroke="#333333" stroke-width="1"/>'
    )
    for i, t in enumerate(x_ticks):
        x = xscale(t)
        if not rect.x - 0.5 <= x <= rect.x2 + 0.5:
            continue
        out.append(
            f'<line x1="{_px(x)}" y1="{_px(rect.y2)}" x2="{_px(x)}" '
            f'y2="{_px(rect.y2 + 4)}" stroke="#333333" stroke-width="1"/>'
        )
        label = x_labels[i] if x_labels is not None else _fmt_value(t)
        out.append(
            f'<text x="{_px(x)}" y="{_px(rect.y2 + 16)}" text-anchor="middle" '
            f'font-size="11" {_FONT}>{_esc(label)}</text>'
        )
    for t in y_ticks:
        y = yscale(t)
        if not rect.y - 0.5 <= y <= rect.y2 + 0.5:
            continue
        out.append(
            f'<line x1="{_px(rect.x)}" y1="{_px(y)}" x2="{_px(rect.x2)}" '
            f'y2="{_px(y)}" stroke="#e3e3e3" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_px(rect.x - 6)}" y="{_px(y + 4)}" text-anchor="end" '
            f'font-size="11" {_FONT}>{_esc(y_fmt(t))}</text>'
        )


def _axis_titles(out, rect: _Rect, x_title=None, y_title=None):
    if x_title:
        out.append(
            f'<text x="{_px((rect.x + rect.x2) / 2)}" y="{_px(rect.y2 + 30)}" '
            f'text-anchor="middle" font-size="12" {_FONT}>{_esc(x_title)}</text>'
        )
    if y_title:
        cy = (rect.y + rect.y2) / 2
        out.append(
            f'<text x="{_px(rect.x - 44)}" y="{_px(cy)}" text-anchor="middle" '
            f'font-size="12" {_FONT} transform="rotate(-90 {_px(rect.x - 44)} '
            f'{_px(cy)})">{_esc(y_title)}</text>'
        )


def _legend(out, rect: _Rect, labels, colors):
    for i, (label, color) in enumerate(zip(labels, colors)):
        y = rect.y + 14 + i * 16
        out.append(
            f'<line x1="{_px(rect.x2 - 120)}" y1="{_px(y)}" '
            f'x2="{_px(rect.x2 - 100)}" y2="{_px(y)}" '
            f'stroke="{color}" stroke-width="2.5"/>'
        )
        out.append(
            f'<text x="{_px(rect.x2 - 94)}" y="{_px(y + 4)}" font-size="11" '
            f'{_FONT}>{_esc(label)}</text>'
        )


def _label_colors(labels):
    if len(labels) > len(PALETTE):
        raise UsageError(f"at most {len(PALETTE)} overlaid models supported")
    return {lab: PALETTE[i] for i, lab in enumerate(labels)}


# ---------------------------------------------------------------------------
# Line charts: pdp / ale / cp

def _series_from_results(results):
    """Flatten results into (label, variable, points, normalized) series."""
    series = []
    if results[0].kind == "cp":
        for profile in results:
            for c in profile.curves:
                series.append((c.label, c.variable, c.points, c.normalized))
    else:
        for c in results:
            series.append((c.label, c.variable, c.points, c.normalized))
    return series


def _line_chart(out, rect, results, labels):
    series = _series_from_results(results)
    use_normalized = all(s[3] is not None for s in series)
    colors = _label_colors(labels)

    xs: list[float] = []
    ys: list[float] = []
    prepared = []  # (label, variable, [(x, y)], x_is_index, levels)
    for label, variable, points, normalized in series:
        if use_normalized:
            pts = [(float(u), float(y)) for u, y in normalized]
            prepared.append((label, variable, pts, False, None))
        elif points and isinstance(points[0][0], str):
            pts = [(float(i), float(y)) for i, (_, y) in enumerate(points)]
            prepared.append((label, variable, pts,
                             True, [z for z, _ in points]))
        else:
            pts = [(float(z), float(y)) for z, y in points]
            prepared.append((label, variable, pts, False, None))
        xs.extend(p[0] for p in pts)
        ys.extend(p[1] for p in pts)

    xscale = _Scale(min(xs), max(xs), rect.x, rect.x2)
    yscale = _Scale(min(ys), max(ys), rect.y2, rect.y)
    categorical_only = all(p[3] for p in prepared)
    if categorical_only and len(prepared) == 1:
        levels = prepared[0][4]
        x_ticks = list(range(len(levels)))
        x_labels = levels
    else:
        x_ticks = nice_ticks(xscale.lo, xscale.hi)
        x_labels = None
    _axes(out, rect, xscale, yscale, x_ticks, nice_ticks(yscale.lo, yscale.hi),
          x_labels=x_labels)
    variables = sorted({var for _, var, *_ in prepared})
    x_title = ("quantile position" if use_normalized
               else variables[0] if len(variables) == 1 else None)
    _axis_titles(out, rect, x_title=x_title, y_title="response")

    many_vars = len({(lab, var) for lab, var, *_ in prepared}) > len(set(labels))
    for label, variable, pts, is_idx, _levels in prepared:
        color = colors[label]
        coords = " ".join(f"{_px(xscale(x))},{_px(yscale(y))}" for x, y in pts)
        out.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="2" '
            f'points="{coords}"/>'
        )
        if is_idx:
            for x, y in pts:
                out.append(
                    f'<circle cx="{_px(xscale(x))}" cy="{_px(yscale(y))}" '
                    f'r="3" fill="{color}"/>'
                )
        if many_vars and pts:
            x, y = pts[-1]
            out.append(
                f'<text x="{_px(xscale(x) + 4)}" y="{_px(yscale(y) + 4)}" '
                f'font-size="10" fill="{color}" {_FONT}>{_esc(variable)}</text>'
            )


# ---------------------------------------------------------------------------
# Performance: reverse-ECDF steps + |residual| boxplots with RMSE dots

def _step_points(recdf):
    pts = [(0.0, 1.0)]
    prev = 1.0
    for t, s in recdf:
        pts.append((t, prev))
        pts.append((t, s))
        prev = s
    return pts


def _performance_chart(out, rect, results, labels, log_y):
    colors = _label_colors(labels)
    gap = 30.0
    left = _Rect(rect.x, rect.y, (rect.w - gap) * 0.55, rect.h)
    right = _Rect(left.x2 + gap, rect.y, rect.w - left.w - gap, rect.h)

    max_t = max(t for r in results for t, _ in r.recdf)
    positives = [s for r in results for _, s in r.recdf if s > 0]
    floor = min(positives) / 2 if positives else None
    use_log = bool(log_y and floor is not None)

    def ymap_value(s):
        return math.log10(max(s, floor)) if use_log else s

    xscale = _Scale(0.0, max_t, left.x, left.x2)
    if use_log:
        yscale = _Scale(math.log10(floor), 0.0, left.y2, left.y)
        tick_vals = []
        t = 1.0
        while t >= floor:
            tick_vals.append(t)
            t /= 10.0
        y_ticks = [math.log10(v) for v in tick_vals]
        y_fmt = lambda v: _fmt_value(10.0 ** v)  # noqa: E731
    else:
        yscale = _Scale(0.0, 1.0, left.y2, left.y)
        y_ticks = nice_ticks(0.0, 1.0)
        y_fmt = _fmt_value
    _axes(out, left, xscale, yscale, nice_ticks(0.0, max_t), y_ticks, y_fmt=y_fmt)
    _axis_titles(out, left, x_title="|residual|", y_title="1 - ECDF")
    for r in results:
        color = colors[r.label]
        coords = " ".join(
            f"{_px(xscale(t))},{_px(yscale(ymap_value(s)))}"
            for t, s in _step_points(r.recdf)
        )
        out.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="2" '
            f'points="{coords}"/>'
        )

    box_hi = max(
        max((max(r.box.outliers) if r.box.outliers else r.box.whisker_hi),
            r.rmse, r.box.whisker_hi)
        for r in results
    )
    byscale = _Scale(0.0, box_hi, right.y2, right.y)
    bxscale = _Scale(-0.5, len(results) - 0.5, right.x, right.x2)
    _axes(out, right, bxscale, byscale, [], nice_ticks(0.0, box_hi))
    _axis_titles(out, right, y_title="|residual|")
    slot_w = min(40.0, right.w / (len(results) + 1))
    for i, r in enumerate(results):
        color = colors[r.label]
        cx = bxscale(float(i))
        x0, x1 = cx - slot_w / 2, cx + slot_w / 2
        b = r.box
        out.append(
            f'<line x1="{_px(cx)}" y1="{_px(byscale(b.whisker_lo))}" '
            f'x2="{_px(cx)}" y2="{_px(byscale(b.q1))}" '
            f'stroke="{color}" stroke-width="1"/>'
        )
        out.append(
            f'<line x1="{_px(cx)}" y1="{_px(byscale(b.q3))}" '
            f'x2="{_px(cx)}" y2="{_px(byscale(b.whisker_hi))}" '
            f'stroke="{color}" stroke-width="1"/>'
        )
        out.append(
            f'<rect x="{_px(x0)}" y="{_px(byscale(b.q3))}" width="{_px(x1 - x0)}" '
            f'height="{_px(byscale(b.q1) - byscale(b.q3))}" fill="#f2f2f2" '
            f'stroke="{color}" stroke-width="1.5"/>'
        )
        out.append(
            f'<line x1="{_px(x0)}" y1="{_px(byscale(b.median))}" '
            f'x2="{_px(x1)}" y2="{_px(byscale(b.median))}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        for v in b.outliers:
            out.append(
                f'<circle cx="{_px(cx)}" cy="{_px(byscale(v))}" r="2.5" '
                f'fill="none" stroke="{color}" stroke-width="1"/>'
            )
        out.append(
            f'<circle cx="{_px(cx)}" cy="{_px(byscale(r.rmse))}" r="4" '
            f'fill="{RMSE_COLOR}"/>'
        )
        out.append(
            f'<text x="{_px(cx)}" y="{_px(right.y2 + 16)}" text-anchor="middle" '
            f'font-size="11" {_FONT}>{_esc(r.label)}</text>'
        )


# ---------------------------------------------------------------------------
# Importance: interval bars anchored at each model's own baseline

def _importance_chart(out, rect, results, labels):
    from .variable_importance import compare_importance

    overlay = compare_importance(list(results))
    colors = _label_colors(labels)
    lo = min(min(b, p) for _, _, b, p in overlay.rows)
    hi = max(max(b, p) for _, _, b, p in overlay.rows)
    label_w = 110.0
    plot = _Rect(rect.x + label_w, rect.y, rect.w - label_w, rect.h)
    xscale = _Scale(min(lo, 0.0) if lo > 0 else lo, hi, plot.x, plot.x2)
    n_vars = len(overlay.variable_order)
    slot_h = plot.h / max(n_vars, 1)
    bar_h = min(10.0, slot_h / (len(results) + 1))

    _axes(out, plot, xscale, _Scale(0, 1, plot.y2, plot.y),
          nice_ticks(xscale.lo, xscale.hi), [])
    _axis_titles(out, plot, x_title="loss (baseline to permuted)")
    rows_by = {}
    for label, variable, baseline, permuted in overlay.rows:
        rows_by.setdefault(variable, []).append((label, baseline, permuted))
    for vi, variable in enumerate(overlay.variable_order):
        y_top = plot.y + vi * slot_h
        out.append(
            f'<text x="{_px(rect.x)}" y="{_px(y_top + slot_h / 2 + 4)}" '
            f'font-size="11" {_FONT}>{_esc(variable)}</text>'
        )
        entries = rows_by.get(variable, [])
        for li, (label, baseline, permuted) in enumerate(entries):
            y = y_top + (li + 1) * slot_h / (len(entries) + 1) - bar_h / 2
            x0 = xscale(min(baseline, permuted))
            x1 = xscale(max(baseline, permuted))
            out.append(
                f'<rect x="{_px(x0)}" y="{_px(y)}" width="{_px(max(x1 - x0, 0.5))}" '
                f'height="{_px(bar_h)}" fill="{colors[label]}"/>'
            )
            bx = xscale(baseline)
            out.append(
                f'<line x1="{_px(bx)}" y1="{_px(y - 2)}" x2="{_px(bx)}" '
                f'y2="{_px(y + bar_h + 2)}" stroke="#333333" stroke-width="1"/>'
            )


# ---------------------------------------------------------------------------
# Factor merge: one merging-path panel per model

def _merge_panel(out, rect, result, color):
    stats = result.level_stats
    steps = result.steps
    total = steps[-1].cumulative if steps else 1.0
    label_w = 90.0
    plot = _Rect(rect.x + label_w, rect.y + 20, rect.w - label_w, rect.h - 40)
    xscale = _Scale(0.0, total if total > 0 else 1.0, plot.x, plot.x2)
    slot_h = plot.h / max(len(stats), 1)

    out.append(
        f'<text x="{_px(rect.x)}" y="{_px(rect.y + 12)}" font-size="12" '
        f'{_FONT}>{_esc(result.label)}</text>'
    )
    pos = {}
    for i, s in enumerate(stats):
        y = plot.y + (i + 0.5) * slot_h
        pos[(s.level,)] = (0.0, y)
        out.append(
            f'<text x="{_px(rect.x)}" y="{_px(y + 4)}" font-size="10" '
            f'{_FONT}>{_esc(s.level)}</text>'
        )
    for step in steps:
        (xa, ya) = pos.pop(step.group_a)
        (xb, yb) = pos.pop(step.group_b)
        xm = step.cumulative
        for (x0, y0) in ((xa, ya), (xb, yb)):
            out.append(
                f'<line x1="{_px(xscale(x0))}" y1="{_px(y0)}" '
                f'x2="{_px(xscale(xm))}" y2="{_px(y0)}" '
                f'stroke="{color}" stroke-width="1.5"/>'
            )
        out.append(
            f'<line x1="{_px(xscale(xm))}" y1="{_px(ya)}" '
            f'x2="{_px(xscale(xm))}" y2="{_px(yb)}" '
            f'stroke="{color}" stroke-width="1.5"/>'
        )
        pos[step.group_a + step.group_b] = (xm, (ya + yb) / 2.0)
    _axes(out, plot, xscale, _Scale(0, 1, plot.y2, plot.y),
          nice_ticks(0.0, xscale.hi), [])
    _axis_titles(out, plot, x_title="cumulative merge cost")


def _factor_merge_chart(out, rect, results, labels):
    colors = _label_colors(labels)
    panel_w = rect.w / len(results)
    for i, r in enumerate(results):
        panel = _Rect(rect.x + i * panel_w, rect.y, panel_w - 10, rect.h)
        _merge_panel(out, panel, r, colors[r.label])


# ---------------------------------------------------------------------------
# Break-down: waterfall with gray reference frame, blue/yellow bars

def _breakdown_panel(out, rect, result):
    steps = result.steps
    traj = [result.baseline]
    for s in steps:
        traj.append(traj[-1] + s.contribution)
    lo = min(traj + [result.final_prediction])
    hi = max(traj + [result.final_prediction])
    label_w = 150.0
    plot = _Rect(rect.x + label_w, rect.y + 24, rect.w - label_w - 10, rect.h - 48)
    xscale = _Scale(lo, hi, plot.x, plot.x2)
    n_rows = len(steps) + 1  # one per step plus the reference row
    slot_h = plot.h / n_rows
    bar_h = min(16.0, slot_h * 0.6)

    out.append(
        f'<text x="{_px(rect.x)}" y="{_px(rect.y + 14)}" font-size="12" '
        f'{_FONT}>{_esc(result.label)}</text>'
    )
    bx = xscale(result.baseline)
    out.append(
        f'<line x1="{_px(bx)}" y1="{_px(plot.y)}" x2="{_px(bx)}" '
        f'y2="{_px(plot.y2)}" stroke="{REF_COLOR}" stroke-width="1" '
        f'stroke-dasharray="3,3"/>'
    )
    v = result.baseline
    for i, s in enumerate(steps):
        y = plot.y + (i + 0.5) * slot_h - bar_h / 2
        x0, x1 = xscale(min(v, v + s.contribution)), xscale(max(v, v + s.contribution))
        if s.contribution > 0:
            fill = POS_COLOR
        elif s.contribution < 0:
            fill = NEG_COLOR
        else:
            fill = "#cccccc"
        out.append(
            f'<rect x="{_px(x0)}" y="{_px(y)}" width="{_px(max(x1 - x0, 0.5))}" '
            f'height="{_px(bar_h)}" fill="{fill}"/>'
        )
        out.append(
            f'<text x="{_px(rect.x)}" y="{_px(y + bar_h / 2 + 4)}" font-size="10" '
            f'{_FONT}>{_esc(f"{s.variable} = {_fmt_value(s.value)}")}</text>'
        )
        contrib = f"{s.contribution:+.4g}"
        out.append(
            f'<text x="{_px(x1 + 4)}" y="{_px(y + bar_h / 2 + 4)}" font-size="10" '
            f'fill="#555555" {_FONT}>{_esc(contrib)}</text>'
        )
        v += s.contribution
    # reference bar: population average to the final prediction
    y = plot.y + (n_rows - 0.5) * slot_h - bar_h / 2
    x0 = xscale(min(result.baseline, result.final_prediction))
    x1 = xscale(max(result.baseline, result.final_prediction))
    out.append(
        f'<rect x="{_px(x0)}" y="{_px(y)}" width="{_px(max(x1 - x0, 0.5))}" '
        f'height="{_px(bar_h)}" fill="{REF_COLOR}"/>'
    )
    out.append(
        f'<text x="{_px(rect.x)}" y="{_px(y + bar_h / 2 + 4)}" font-size="10" '
        f'{_FONT}>prediction = {_esc(_fmt_value(result.final_prediction))}</text>'
    )
    _axes(out, plot, xscale, _Scale(0, 1, plot.y2, plot.y),
          nice_ticks(xscale.lo, xscale.hi), [])
    _axis_titles(out, plot, x_title="prediction")


def _breakdown_chart(out, rect, results):
    panel_h = rect.h / len(results)
    for i, r in enumerate(results):
        panel = _Rect(rect.x, rect.y + i * panel_h, rect.w, panel_h - 6)
        _breakdown_panel(out, panel, r)


# ---------------------------------------------------------------------------
# Entry points

_LINE_KINDS = {"pdp", "ale", "cp"}


def render(results, *, width: int = 760, height: int = 480,
           title: str | None = None, log_y: bool = False) -> ChartDocument:
    """Draw one chart overlaying all results (which must share a kind)."""
    results = list(results)
    if not results:
        raise UsageError("render needs at least one result")
    kinds = {r.kind for r in results}
    if len(kinds) != 1:
        raise UsageError(f"cannot overlay mixed result kinds: {sorted(kinds)}")
    kind = kinds.pop()
    labels = [r.label for r in results]
    if len(set(labels)) != len(labels):
        raise UsageError(f"duplicate labels in chart: {labels}")

    canvas_h = height * len(results) if kind == "breakdown" else height
    margin_top = 40 if title else 16
    rect = _Rect(60, margin_top, width - 80, canvas_h - margin_top - 36)

    out: list[str] = []
    if title:
        out.append(
            f'<text x="{_px(width / 2)}" y="24" text-anchor="middle" '
            f'font-size="15" {_FONT}>{_esc(title)}</text>'
        )
    if kind in _LINE_KINDS:
        _line_chart(out, rect, results, labels)
    elif kind == "performance":
        _performance_chart(out, rect, results, labels, log_y)
    elif kind == "importance":
        _importance_chart(out, rect, results, labels)
    elif kind == "factor_merge":
        _factor_merge_chart(out, rect, results, labels)
    elif kind == "breakdown":
        _breakdown_chart(out, rect, results)
    else:
        raise UsageError(f"cannot render result kind {kind!r}")

    if len(labels) > 1 and kind != "breakdown":
        _legend(out, rect, labels, [_label_colors(labels)[l] for l in labels])

    digest = hashlib.sha256(export_json_many(results).encode("utf-8")).hexdigest()
    body = "\n".join(out)
    text = (
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{canvas_h}" '
        f'viewBox="0 0 {width} {canvas_h}">\n'
        f"<!-- source-digest:sha256:{digest} -->\n"
        f'<rect x="0" y="0" width="{width}" height="{canvas_h}" '
        f'fill="#ffffff"/>\n'
        f"{body}\n</svg>\n"
    )
    return ChartDocument(text=text, width=width, height=canvas_h, digest=digest)


def _plain(obj):
    """Coerce result objects into JSON-serializable builtin types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj]
    return obj


def export_json(result) -> str:
    """Canonical JSON for one result: sorted keys, shortest round-trip
    numbers, UTF-8, trailing newline."""
    if not hasattr(result, "to_json_obj"):
        raise UsageError(f"cannot export {type(result).__name__} as JSON")
    obj = _plain(result.to_json_obj())
    return json.dumps(obj, sort_keys=True, ensure_ascii=False,
                      separators=(",", ":")) + "\n"


def export_json_many(results) -> str:
    """Canonical JSON array of result objects (one element per model)."""
    objs = [_plain(r.to_json_obj()) for r in results]
    return json.dumps(objs, sort_keys=True, ensure_ascii=False,
                      separators=(",", ":")) + "\n"
