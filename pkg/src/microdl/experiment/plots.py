"""Deterministic standalone SVG charts built from a :class:`ResultsTable`.

``grouped-bars``: one panel per dataset, one ``<g class="bar-group">`` per
method holding one bar per metric (mean, with a std whisker).
``alpha-curve``: one panel per dataset, one ``<polyline class="curve">`` per
metric with a vertex per swept alpha.
"""

from xml.sax.saxutils import escape

from ..exceptions import ConfigError, DataError
from .runner import METRICS

COLORS = {"accuracy": "#1f77b4", "jaccard": "#ff7f0e", "fm": "#2ca02c", "rand": "#d62728"}
PANEL_W, PANEL_H = 420, 260
MARGIN = 40


def _n(x):
    return f"{x:.2f}"


def _panel_frame(out, x0, title):
    out.append(f'<g class="panel" transform="translate({_n(x0)},0)">')
    out.append(f'<text x="{_n(PANEL_W / 2)}" y="20" text-anchor="middle" '
               f'font-size="13">{escape(title)}</text>')
    base = PANEL_H - MARGIN
    out.append(f'<line x1="{MARGIN}" y1="{base}" x2="{PANEL_W - 10}" y2="{base}" stroke="#000"/>')
    out.append(f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{base}" stroke="#000"/>')
    for tick in (0.0, 0.5, 1.0):
        y = _y(tick)
        out.append(f'<text x="{MARGIN - 4}" y="{_n(y + 4)}" text-anchor="end" '
                   f'font-size="10">{tick:.1f}</text>')


def _y(value):
    value = min(max(value, 0.0), 1.0)
    return PANEL_H - MARGIN - value * (PANEL_H - 2 * MARGIN)


def _legend(out, y):
    for i, m in enumerate(METRICS):
        x = MARGIN + 90 * i
        out.append(f'<rect x="{x}" y="{y}" width="10" height="10" fill="{COLORS[m]}"/>')
        out.append(f'<text x="{x + 14}" y="{y + 9}" font-size="10">{m}</text>')


def _document(panels, body):
    width = max(panels, 1) * PANEL_W
    height = PANEL_H + 24
    head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif">')
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _value(x):
    return 0.0 if x != x else x


def grouped_bars(summary):
    rows = [r for r in summary if r["kind"] == "main"]
    if not rows:
        raise DataError("grouped-bars: table has no main-comparison rows")
    datasets = list(dict.fromkeys(r["dataset"] for r in rows))
    body = []
    for p, name in enumerate(datasets):
        _panel_frame(body, p * PANEL_W, name)
        methods = [r for r in rows if r["dataset"] == name]
        slot = (PANEL_W - MARGIN - 20) / len(methods)
        bar_w = slot * 0.8 / len(METRICS)
        for g, row in enumerate(methods):
            gx = MARGIN + 10 + g * slot
            body.append(f'<g class="bar-group" data-method="{escape(row["algorithm"])}">')
            for b, m in enumerate(METRICS):
                mean, std = _value(row[f"{m}_mean"]), _value(row[f"{m}_std"])
                x, top = gx + b * bar_w, _y(mean)
                body.append(f'<rect class="bar" x="{_n(x)}" y="{_n(top)}" width="{_n(bar_w)}" '
                            f'height="{_n(_y(0) - top)}" fill="{COLORS[m]}"/>')
                cx = x + bar_w / 2
                body.append(f'<line x1="{_n(cx)}" y1="{_n(_y(mean - std))}" x2="{_n(cx)}" '
                            f'y2="{_n(_y(mean + std))}" stroke="#333"/>')
            body.append(f'<text x="{_n(gx + slot * 0.4)}" y="{PANEL_H - MARGIN + 14}" '
                        f'text-anchor="middle" font-size="10">{escape(row["algorithm"])}</text>')
            body.append("</g>")
        _legend(body, PANEL_H)
        body.append("</g>")
    return _document(len(datasets), body)


def alpha_curve(summary):
    rows = [r for r in summary if r["kind"] == "sweep"]
    if not rows:
        raise DataError("alpha-curve: table has no alpha-sweep rows")
    datasets = list(dict.fromkeys(r["dataset"] for r in rows))
    body = []
    for p, name in enumerate(datasets):
        _panel_frame(body, p * PANEL_W, name)
        pts = sorted((r for r in rows if r["dataset"] == name), key=lambda r: r["alpha"])
        span = PANEL_W - MARGIN - 30

        def x_of(a):
            return MARGIN + 10 + a * span

        for m in METRICS:
            coords = " ".join(f"{_n(x_of(r['alpha']))},{_n(_y(_value(r[f'{m}_mean'])))}"
                              for r in pts)
            body.append(f'<polyline class="curve" data-metric="{m}" points="{coords}" '
                        f'fill="none" stroke="{COLORS[m]}" stroke-width="1.5"/>')
        for r in pts:
            body.append(f'<text x="{_n(x_of(r["alpha"]))}" y="{PANEL_H - MARGIN + 14}" '
                        f'text-anchor="middle" font-size="10">{r["alpha"]:g}</text>')
        _legend(body, PANEL_H)
        body.append("</g>")
    return _document(len(datasets), body)


def render_plots(table, kind, path):
    if not table.records and not table.summary:
        raise DataError("cannot plot an empty results table")
    if kind == "grouped-bars":
        text = grouped_bars(table.summary)
    elif kind == "alpha-curve":
        text = alpha_curve(table.summary)
    else:
        raise ConfigError(f"plot kind must be grouped-bars or alpha-curve, got {kind!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
