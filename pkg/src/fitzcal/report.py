"""Rendering and serialization of calibration results.

Tables follow the Subset | metric@tau_g | metric@tau_F | Delta(%) layout,
one block per metric. Curve plots are static SVG 1.1 at a fixed 960x640
viewBox. The machine-readable run document and the operating-point
document are JSON with a schema_version field; both round-trip losslessly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .calibration import EvaluationRow, OperatingPointSet
from .data_model import GroupLabel
from .errors import DataError
from .metrics import METRIC_DISPLAY, MetricCurve, grid_index, threshold_grid

SCHEMA_VERSION = 1
TOOL_VERSION = "0.1.0"

ABSENT = "—"  # em dash cell for absent values


@dataclass(frozen=True)
class RunReport:
    metadata: dict
    operating_points: dict[str, OperatingPointSet]
    rows: dict[str, list[EvaluationRow]]
    curves: dict[str, dict[str, list[float]]] = field(default_factory=dict)
    # curves: metric -> subset ("Overall" or group token) -> 990 values


def manifest_checksum(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _fmt_metric(value) -> str:
    return ABSENT if value is None else f"{value:.3f}"


def _fmt_delta(value) -> str:
    return ABSENT if value is None else f"{value:+.2f}"


def render_table(report: RunReport, format: str = "text") -> str:
    """Render Table-3-style blocks for every metric in the report."""
    if not report.rows:
        raise DataError("report has no evaluation rows", category="report")
    if format == "csv":
        lines = ["metric,subset,metric_at_global,metric_at_group,delta_pct"]
        for metric, rows in report.rows.items():
            for row in rows:
                cells = [METRIC_DISPLAY[metric], row.subset,
                         "" if row.metric_at_global is None else f"{row.metric_at_global:.3f}",
                         "" if row.metric_at_group is None else f"{row.metric_at_group:.3f}",
                         "" if row.delta_pct is None else f"{row.delta_pct:+.2f}"]
                lines.append(",".join(cells))
        return "\n".join(lines) + "\n"
    if format != "text":
        raise ValueError(f"unknown table format {format!r}")

    lines = []
    for metric, rows in report.rows.items():
        name = METRIC_DISPLAY[metric]
        lines.append(f"Metric: {name} (mode={report.metadata.get('mode', 'macro')})")
        header = f"{'Subset':<10} {name + '@tau_g':>12} {name + '@tau_F':>12} {'Delta(%)':>10}"
        lines.append(header)
        lines.append("-" * len(header))
        for row in rows:
            subset = row.subset if row.subset == "Overall" else f"Fitz {row.subset}"
            lines.append(f"{subset:<10} {_fmt_metric(row.metric_at_global):>12} "
                         f"{_fmt_metric(row.metric_at_group):>12} {_fmt_delta(row.delta_pct):>10}")
        lines.append("")
    return "\n".join(lines)


_GROUP_COLORS = {
    "I": "#f4c2a1", "II": "#e8b48a", "III": "#d29e6f",
    "IV": "#a9764c", "V": "#7a4f2d", "VI": "#4a2c17",
}

_PLOT_X0, _PLOT_Y0, _PLOT_W, _PLOT_H = 80, 40, 820, 540


def _px(tau: float) -> float:
    return _PLOT_X0 + tau * _PLOT_W


def _py(value: float) -> float:
    return _PLOT_Y0 + (1.0 - value) * _PLOT_H


def render_curves(curves: dict[str, MetricCurve], ops: OperatingPointSet, out) -> None:
    """Write one SVG: a polyline per subset curve plus a vertical marker at
    each subset's operating point. ``curves`` maps "Overall" and group
    tokens to aggregate curves for one metric."""
    if not curves:
        raise DataError("no curves to render", category="report")
    grid = threshold_grid()
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        'viewBox="0 0 960 640" width="960" height="640">',
        '<rect x="0" y="0" width="960" height="640" fill="white"/>',
        f'<rect x="{_PLOT_X0}" y="{_PLOT_Y0}" width="{_PLOT_W}" height="{_PLOT_H}" '
        'fill="none" stroke="#333" stroke-width="1"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(f'<text x="{_px(frac):.1f}" y="{_PLOT_Y0 + _PLOT_H + 24}" '
                     f'font-size="14" text-anchor="middle">{frac:g}</text>')
        parts.append(f'<text x="{_PLOT_X0 - 12}" y="{_py(frac) + 5:.1f}" '
                     f'font-size="14" text-anchor="end">{frac:g}</text>')
    parts.append(f'<text x="{_px(0.5):.1f}" y="632" font-size="15" '
                 'text-anchor="middle">threshold</text>')
    parts.append(f'<text x="20" y="{_py(0.5):.1f}" font-size="15" '
                 f'text-anchor="middle" transform="rotate(-90 20 {_py(0.5):.1f})">'
                 f'{METRIC_DISPLAY[ops.metric]}</text>')

    legend_y = _PLOT_Y0 + 10
    for subset, curve in curves.items():
        if subset == "Overall":
            color, width = "#000000", "2.5"
            tau = ops.tau_all
        else:
            color = _GROUP_COLORS.get(subset, "#888888")
            width = "1.5"
            tau = ops.tau_by_group[GroupLabel.from_token(subset)]
        values = curve.values if isinstance(curve, MetricCurve) else np.asarray(curve)
        points = " ".join(f"{_px(t):.2f},{_py(v):.2f}" for t, v in zip(grid, values))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="{width}" '
                     f'points="{points}"/>')
        y_at = float(values[grid_index(tau)])
        parts.append(f'<line class="optimum" x1="{_px(tau):.2f}" y1="{_py(0.0):.2f}" '
                     f'x2="{_px(tau):.2f}" y2="{_py(y_at):.2f}" '
                     f'stroke="{color}" stroke-width="1" stroke-dasharray="4 3"/>')
        parts.append(f'<text x="{_PLOT_X0 + _PLOT_W - 120}" y="{legend_y}" font-size="13" '
                     f'fill="{color}">{subset} (tau={tau:.3f})</text>')
        legend_y += 18
    parts.append("</svg>")
    Path(out).write_text("\n".join(parts) + "\n", encoding="utf-8")


def ops_to_dict(ops: OperatingPointSet) -> dict:
    return {
        "metric": ops.metric,
        "tau_all": round(ops.tau_all, 3),
        "tau_by_group": {g.token: round(t, 3) for g, t in sorted(ops.tau_by_group.items())},
        "fallback_groups": sorted(g.token for g in ops.fallback_groups),
    }


def ops_from_dict(doc: dict) -> OperatingPointSet:
    for key in ("metric", "tau_all", "tau_by_group"):
        if key not in doc:
            raise DataError(f"operating-point document missing field {key!r}",
                            category="schema")
    return OperatingPointSet(
        doc["metric"], float(doc["tau_all"]),
        {GroupLabel.from_token(k): float(v) for k, v in doc["tau_by_group"].items()},
        frozenset(GroupLabel.from_token(t) for t in doc.get("fallback_groups", [])))


def write_ops_document(ops_by_metric: dict[str, OperatingPointSet], checksum: str,
                       mode: str, out) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": TOOL_VERSION,
        "tuning_manifest_checksum": checksum,
        "mode": mode,
        "operating_points": {m: ops_to_dict(ops) for m, ops in sorted(ops_by_metric.items())},
    }
    Path(out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_ops_document(path) -> tuple[dict[str, OperatingPointSet], dict]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if "operating_points" not in doc:
        raise DataError("operating-point document missing field 'operating_points'",
                        category="schema")
    ops = {m: ops_from_dict(d) for m, d in doc["operating_points"].items()}
    return ops, doc


def _row_to_dict(row: EvaluationRow) -> dict:
    return {"subset": row.subset, "metric_at_global": row.metric_at_global,
            "metric_at_group": row.metric_at_group, "delta_pct": row.delta_pct}


def _row_from_dict(d: dict) -> EvaluationRow:
    return EvaluationRow(d["subset"], d["metric_at_global"],
                         d.get("metric_at_group"), d.get("delta_pct"))


def write_run_document(report: RunReport, out) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "metadata": report.metadata,
        "operating_points": {m: ops_to_dict(ops)
                             for m, ops in sorted(report.operating_points.items())},
        "rows": {m: [_row_to_dict(r) for r in rows]
                 for m, rows in sorted(report.rows.items())},
        "curves": report.curves,
    }
    Path(out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_run_document(path) -> RunReport:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    for key in ("metadata", "operating_points", "rows"):
        if key not in doc:
            raise DataError(f"run document missing field {key!r}", category="schema")
    return RunReport(
        metadata=doc["metadata"],
        operating_points={m: ops_from_dict(d) for m, d in doc["operating_points"].items()},
        rows={m: [_row_from_dict(r) for r in rows] for m, rows in doc["rows"].items()},
        curves=doc.get("curves", {}),
    )
