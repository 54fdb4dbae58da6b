"""Report emission: long-format CSV, JSON summary, and native SVG plots.

The CSV schema is fixed: algorithm, predictor_set, fold, metric, value.
Fold is a fold number, "mean" for cross-fold averages, or "pooled" for
quantities accumulated over all folds. Values are shortest round-trip
float representations, so re-rendering never changes a byte.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re

import numpy as np

from precipmerge.errors import ParseError
from precipmerge.evaluate import EvaluationReport, RankTable

_CSV_HEADER = ("algorithm", "predictor_set", "fold", "metric", "value")
_MODE_SUFFIX = {"same-set": "same_set", "set1": "vs_set1"}


def _fmt(v: float) -> str:
    return repr(float(v))


def report_rows(report: EvaluationReport, reference_mode: str = "both") -> list:
    rows = []
    for fold, n in sorted(report.fold_sizes.items()):
        rows.append(("all", "all", str(fold), "n_test_samples", str(int(n))))
    for cell in report.cells:
        rows.append(
            (cell.algorithm, cell.predictor_set, str(cell.test_fold), "med_se", _fmt(cell.med_se))
        )
    want = {"both": set(_MODE_SUFFIX), "same-set": {"same-set"}, "set1": {"set1"}}[reference_mode]
    for mode, rel in report.relative_cells:
        if mode not in want:
            continue
        sfx = _MODE_SUFFIX[mode]
        rows.append(
            (rel.algorithm, rel.predictor_set, str(rel.test_fold), f"raw_relative_{sfx}", _fmt(rel.raw_relative))
        )
        rows.append(
            (rel.algorithm, rel.predictor_set, str(rel.test_fold), f"improvement_{sfx}", _fmt(rel.improvement))
        )
    for rec in report.mean_relative:
        if rec["reference_mode"] not in want:
            continue
        sfx = _MODE_SUFFIX[rec["reference_mode"]]
        rows.append(
            (rec["algorithm"], rec["predictor_set"], "mean", f"raw_relative_{sfx}", _fmt(rec["mean_raw_relative"]))
        )
        rows.append(
            (rec["algorithm"], rec["predictor_set"], "mean", f"improvement_{sfx}", _fmt(rec["mean_improvement"]))
        )
    for tag, table in sorted(report.rank4.items()):
        for i, alg in enumerate(table.contenders):
            rows.append((alg, tag, "mean", "mean_rank_within_set", _fmt(table.mean_rank[i])))
            for p in range(len(table.contenders)):
                rows.append(
                    (alg, tag, "pooled", f"rank{p + 1}_pct_within_set", _fmt(table.freq_percent[i, p]))
                )
    if report.rank12 is not None:
        table = report.rank12
        for i, contender in enumerate(table.contenders):
            alg, _, tag = contender.partition(":")
            rows.append((alg, tag, "mean", "mean_rank_collective", _fmt(table.mean_rank[i])))
            for p in range(len(table.contenders)):
                rows.append(
                    (alg, tag, "pooled", f"rank{p + 1}_pct_collective", _fmt(table.freq_percent[i, p]))
                )
    return rows


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def report_csv_text(report: EvaluationReport, reference_mode: str = "both") -> str:
    return _csv_text(_CSV_HEADER, report_rows(report, reference_mode))


def write_report_csv(report: EvaluationReport, path, reference_mode: str = "both") -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        fh.write(report_csv_text(report, reference_mode))


def _rank_table_dict(table: RankTable) -> dict:
    return {
        "contenders": list(table.contenders),
        "mean_rank": {c: float(table.mean_rank[i]) for i, c in enumerate(table.contenders)},
        "rank_percent": {
            c: [float(v) for v in table.freq_percent[i]] for i, c in enumerate(table.contenders)
        },
        "n_cases": table.n_cases,
    }


def report_summary(report: EvaluationReport, reference_mode: str = "both") -> dict:
    want = {"both": set(_MODE_SUFFIX), "same-set": {"same-set"}, "set1": {"set1"}}[reference_mode]
    med = {}
    for cell in report.cells:
        med.setdefault(cell.predictor_set, {}).setdefault(cell.algorithm, {})[
            str(cell.test_fold)
        ] = cell.med_se
    relative = {}
    for rec in report.mean_relative:
        if rec["reference_mode"] not in want:
            continue
        relative.setdefault(rec["reference_mode"], {}).setdefault(rec["predictor_set"], {})[
            rec["algorithm"]
        ] = {
            "reference": rec["reference"],
            "mean_raw_relative": rec["mean_raw_relative"],
            "mean_improvement": rec["mean_improvement"],
        }
    out = {
        "seed": report.seed,
        "split_unit": report.split_unit,
        "algorithms": list(report.algorithms),
        "predictor_sets": list(report.predictor_sets),
        "fold_sizes": {str(k): int(v) for k, v in report.fold_sizes.items()},
        "median_squared_error": med,
        "relative": relative,
        "rank_within_set": {tag: _rank_table_dict(t) for tag, t in report.rank4.items()},
        "rank_collective": _rank_table_dict(report.rank12) if report.rank12 else None,
    }
    return out


def report_json_text(report: EvaluationReport, reference_mode: str = "both") -> str:
    return json.dumps(report_summary(report, reference_mode), indent=2, sort_keys=True) + "\n"


def write_report_json(report: EvaluationReport, path, reference_mode: str = "both") -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(report_json_text(report, reference_mode))


def read_report_csv(path) -> list:
    """Rows of a previously written report, values kept as strings."""
    with open(path, "r", newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise ParseError("report is empty", path=path) from None
        if header != _CSV_HEADER:
            missing = [c for c in _CSV_HEADER if c not in header]
            bad = missing[0] if missing else header[0]
            raise ParseError(f"report schema mismatch: column {bad!r}", path=path)
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(_CSV_HEADER):
                raise ParseError(
                    f"expected {len(_CSV_HEADER)} fields, got {len(row)}",
                    path=path,
                    line_no=line_no,
                )
            rows.append(tuple(row))
    return rows


# ---------------------------------------------------------------- SVG ----

_CELL_W = 78
_CELL_H = 26
_FONT = "font-family=\"monospace\" font-size=\"11\""


def _esc(text: str) -> str:
    return (
        str(text)
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _cell_color(value: float, vmin: float, vmax: float) -> str:
    if math.isnan(value):
        return "#dddddd"
    t = 0.5 if vmax <= vmin else (value - vmin) / (vmax - vmin)
    t = min(1.0, max(0.0, t))
    r = int(round(255 + (70 - 255) * t))
    g = int(round(255 + (130 - 255) * t))
    b = int(round(255 + (180 - 255) * t))
    return f"#{r:02x}{g:02x}{b:02x}"


def svg_heatmap(cell_texts, values, row_labels, col_labels, title: str) -> str:
    """Grid heatmap; ``cell_texts`` strings are rendered verbatim, colors
    come from the numeric ``values`` (NaN cells are gray)."""
    values = np.asarray(values, dtype=np.float64)
    n_rows, n_cols = values.shape
    left = 12 + 7 * max([len(str(r)) for r in row_labels] + [4])
    top = 52
    width = left + _CELL_W * n_cols + 16
    height = top + _CELL_H * n_rows + 14
    finite = values[np.isfinite(values)]
    vmin = float(finite.min()) if finite.size else 0.0
    vmax = float(finite.max()) if finite.size else 1.0
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="10" y="20" {_FONT} font-weight="bold">{_esc(title)}</text>',
    ]
    for c, label in enumerate(col_labels):
        x = left + c * _CELL_W + _CELL_W // 2
        out.append(
            f'<text x="{x}" y="{top - 8}" {_FONT} text-anchor="middle">{_esc(label)}</text>'
        )
    for r, label in enumerate(row_labels):
        y = top + r * _CELL_H + _CELL_H // 2 + 4
        out.append(f'<text x="{left - 8}" y="{y}" {_FONT} text-anchor="end">{_esc(label)}</text>')
        for c in range(n_cols):
            x = left + c * _CELL_W
            y0 = top + r * _CELL_H
            color = _cell_color(values[r, c], vmin, vmax)
            out.append(
                f'<rect x="{x}" y="{y0}" width="{_CELL_W}" height="{_CELL_H}" '
                f'fill="{color}" stroke="#888" stroke-width="0.5"/>'
            )
            tx = x + _CELL_W // 2
            ty = y0 + _CELL_H // 2 + 4
            out.append(
                f'<text x="{tx}" y="{ty}" {_FONT} text-anchor="middle">'
                f"{_esc(cell_texts[r][c])}</text>"
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def svg_barplot(labels, values, title: str, value_texts=None) -> str:
    values = [float(v) for v in values]
    if value_texts is None:
        value_texts = [repr(v) for v in values]
    left = 12 + 7 * max([len(str(v)) for v in labels] + [4])
    bar_h = 18
    gap = 6
    top = 40
    plot_w = 360
    width = left + plot_w + 150
    height = top + len(values) * (bar_h + gap) + 12
    vmax = max([abs(v) for v in values] + [1e-12])
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="10" y="20" {_FONT} font-weight="bold">{_esc(title)}</text>',
    ]
    for i, (label, v) in enumerate(zip(labels, values)):
        y = top + i * (bar_h + gap)
        w = int(round(plot_w * abs(v) / vmax))
        out.append(
            f'<text x="{left - 8}" y="{y + bar_h - 5}" {_FONT} text-anchor="end">{_esc(label)}</text>'
        )
        out.append(
            f'<rect x="{left}" y="{y}" width="{w}" height="{bar_h}" fill="#4682b4"/>'
        )
        out.append(
            f'<text x="{left + w + 6}" y="{y + bar_h - 5}" {_FONT}>{_esc(value_texts[i])}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


_RANK_PCT = re.compile(r"^rank(\d+)_pct_(within_set|collective)$")


def _float_or_fail(value: str, metric: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ParseError(f"non-numeric value {value!r} for metric {metric!r}") from None


def _heatmap_from_entries(entries, row_key, col_key, metric: str, title: str) -> str:
    """Entries are (algorithm, predictor_set, value_text) triples; the
    value strings go into the cells verbatim and only feed colors after a
    float parse. Row and column order is first appearance."""
    row_labels, col_labels = [], []
    for e in entries:
        r, c = row_key(e), col_key(e)
        if r not in row_labels:
            row_labels.append(r)
        if c not in col_labels:
            col_labels.append(c)
    texts = [["" for _ in col_labels] for _ in row_labels]
    values = np.full((len(row_labels), len(col_labels)), np.nan)
    for e in entries:
        i = row_labels.index(row_key(e))
        j = col_labels.index(col_key(e))
        texts[i][j] = e[2]
        values[i, j] = _float_or_fail(e[2], metric)
    return svg_heatmap(texts, values, row_labels, col_labels, title)


def build_figures(rows) -> dict:
    """SVG figures keyed by file name, built from report rows (in-memory
    or re-read from disk; either way the cell labels are the exact CSV
    value strings)."""
    figures = {}
    mean_imp = {"same_set": [], "vs_set1": []}
    within = {}
    collective = []
    for alg, pset, fold, metric, value in rows:
        if fold == "mean" and metric.startswith("improvement_"):
            sfx = metric[len("improvement_"):]
            if sfx in mean_imp:
                mean_imp[sfx].append((alg, pset, value))
            continue
        m = _RANK_PCT.match(metric)
        if m is None or fold != "pooled":
            continue
        place = int(m.group(1))
        if m.group(2) == "within_set":
            within.setdefault(pset, []).append((alg, place, value, metric))
        else:
            collective.append((f"{alg}:{pset}", place, value, metric))
    titles = {
        "same_set": "Mean improvement (%) over the linear baseline, same predictor set",
        "vs_set1": "Mean improvement (%) over the linear baseline with set1",
    }
    for sfx, entries in mean_imp.items():
        if entries:
            figures[f"improvement_{sfx}.svg"] = _heatmap_from_entries(
                entries,
                row_key=lambda e: e[0],
                col_key=lambda e: e[1],
                metric=f"improvement_{sfx}",
                title=titles[sfx],
            )

    def rank_heatmap(entries, title):
        labels, places = [], []
        for label, place, _, _ in entries:
            if label not in labels:
                labels.append(label)
            if place not in places:
                places.append(place)
        places.sort()
        texts = [["" for _ in places] for _ in labels]
        values = np.full((len(labels), len(places)), np.nan)
        for label, place, value, metric in entries:
            i = labels.index(label)
            j = places.index(place)
            texts[i][j] = value
            values[i, j] = _float_or_fail(value, metric)
        return svg_heatmap(texts, values, labels, [str(p) for p in places], title)

    for pset in sorted(within):
        figures[f"rank_freq_{pset}.svg"] = rank_heatmap(
            within[pset], f"Rank frequencies (%) within {pset}"
        )
    if collective:
        figures["rank_freq_collective.svg"] = rank_heatmap(
            collective, "Rank frequencies (%) across all predictor sets"
        )
    return figures


def spearman_csv_text(corr) -> str:
    rows = []
    for i, label in enumerate(corr.labels):
        row = [label]
        for j in range(len(corr.labels)):
            v = corr.values[i, j]
            row.append("NA" if math.isnan(v) else repr(float(v)))
        rows.append(row)
    return _csv_text(["variable", *corr.labels], rows)


def write_spearman_csv(corr, path) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        fh.write(spearman_csv_text(corr))


def importance_order(fractions) -> list:
    """Indices by decreasing gain fraction; ties keep canonical order."""
    return sorted(range(len(fractions)), key=lambda i: (-fractions[i], i))


def importance_csv_text(names, fractions, degenerate: bool) -> str:
    rows = [
        [str(rank), names[i], repr(float(fractions[i])), "true" if degenerate else "false"]
        for rank, i in enumerate(importance_order(fractions), start=1)
    ]
    return _csv_text(["rank", "predictor", "gain_fraction", "degenerate"], rows)


def write_importance_csv(names, fractions, path, degenerate: bool) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        fh.write(importance_csv_text(names, fractions, degenerate))
