"""Command line interface.

Subcommands:
    synth    write a synthetic benchmark dataset (gauges, inventory, two
             grid-series files, a ready-to-run config, and a manifest)
    run      assemble samples and run the cross-validated comparison,
             emitting report.csv, report.json, and the sample cache
    explore  emit the 18-variable rank-correlation matrix and the
             gain-importance ranking from a full-data fit
    report   render figures from a previous run's report.csv

Exit codes: 0 success, 1 usage or configuration error, 2 data error
(unparsable or degenerate inputs), 3 internal error. Every command
validates and computes before writing, so a failing invocation leaves no
partial output behind.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys

from precipmerge import __version__
from precipmerge import synth as synthmod
from precipmerge.config import RunConfig, load_config
from precipmerge.errors import ConfigError, DataError, ParseError, PrecipmergeError
from precipmerge.evaluate import (
    importance_fit_full,
    run_benchmark,
    spearman_matrix,
    table_variable_matrix,
)
from precipmerge.ingest import (
    PREDICTOR_NAMES,
    assemble_samples,
    build_station_records,
    load_sample_table,
    parse_ghcnd_dly,
    parse_ghcnd_stations,
    read_grid_series,
    sample_table_bytes,
)
from precipmerge.learners import gain_importance
from precipmerge.report import (
    build_figures,
    importance_csv_text,
    importance_order,
    read_report_csv,
    report_csv_text,
    report_json_text,
    report_rows,
    spearman_csv_text,
    svg_barplot,
    svg_heatmap,
)
from precipmerge.spatial import GridSpec

_SAMPLE_CACHE = "samples.pmst"


def _read_lines(path):
    try:
        with open(path, "r", encoding="ascii") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


def _load_run_config(args) -> RunConfig:
    if args.config is None:
        raise ConfigError("--config is required for this command")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.cv_seed = args.seed
    if args.out is not None:
        cfg.output_dir = args.out
    return cfg


def _imerg_target(cfg: RunConfig, imerg_raw) -> GridSpec | None:
    if isinstance(cfg.imerg_regrid, GridSpec):
        return cfg.imerg_regrid
    if cfg.imerg_regrid == "native":
        return imerg_raw.spec
    return None  # resample onto the first product's grid


def _assemble_table(cfg: RunConfig):
    """Sample table from file inputs or the in-memory synthetic path."""
    if cfg.inputs is not None:
        daily = parse_ghcnd_dly(_read_lines(cfg.inputs.gauges), path=cfg.inputs.gauges)
        inventory = parse_ghcnd_stations(
            _read_lines(cfg.inputs.stations), path=cfg.inputs.stations
        )
        stations = build_station_records(daily, inventory)
        persiann = read_grid_series(cfg.inputs.product_a, product_tag="PERSIANN")
        imerg = read_grid_series(cfg.inputs.product_b, product_tag="IMERG")
    elif cfg.synth is not None:
        data = synthmod.generate(cfg.synth)
        stations = list(synthmod.to_station_records(data).values())
        persiann = data.product_a
        imerg = data.product_b
    else:
        raise ConfigError("config must provide either inputs or synth")
    if len(stations) < 2:
        raise DataError(f"need at least 2 stations, found {len(stations)}")
    table = assemble_samples(
        stations,
        persiann,
        imerg,
        cfg.window,
        imerg_target=_imerg_target(cfg, imerg),
        day_offset=cfg.day_offset,
    )
    if table.n_samples == 0:
        raise DataError("no samples inside the study window")
    return table


def _emit(out_dir: str, artifacts: dict) -> None:
    """Single writer for all artifacts; callers finish computing first."""
    os.makedirs(out_dir, exist_ok=True)
    for name, payload in sorted(artifacts.items()):
        path = os.path.join(out_dir, name)
        if isinstance(payload, bytes):
            with open(path, "wb") as fh:
                fh.write(payload)
        else:
            with open(path, "w", encoding="ascii", newline="") as fh:
                fh.write(payload)


def cmd_synth(args) -> int:
    if args.config is not None:
        cfg = load_config(args.config)
        spec = cfg.synth if cfg.synth is not None else synthmod.SynthSpec()
        out_dir = args.out if args.out is not None else cfg.output_dir
    else:
        spec = synthmod.SynthSpec()
        out_dir = args.out if args.out is not None else "out"
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    data = synthmod.generate(spec)
    paths = synthmod.write_files(data, out_dir)
    print(f"wrote {len(paths)} files to {out_dir}")
    return 0


def cmd_run(args) -> int:
    cfg = _load_run_config(args)
    table = _assemble_table(cfg)
    report = run_benchmark(
        table,
        seed=cfg.cv_seed,
        split_unit=cfg.split_unit,
        n_folds=cfg.n_folds,
        algorithms=cfg.algorithms,
        set_tags=cfg.predictor_sets,
        forest=cfg.forest,
        gbm=cfg.gbm,
        xgb=cfg.xgb,
        threads=args.threads,
    )
    artifacts = {
        "report.csv": report_csv_text(report, cfg.reference_mode),
        "report.json": report_json_text(report, cfg.reference_mode),
        _SAMPLE_CACHE: sample_table_bytes(table),
    }
    if args.format == "svg":
        artifacts.update(build_figures(report_rows(report, cfg.reference_mode)))
    _emit(cfg.output_dir, artifacts)
    print(f"wrote report for {table.n_samples} samples to {cfg.output_dir}")
    return 0


def cmd_explore(args) -> int:
    cfg = _load_run_config(args)
    cache = os.path.join(cfg.output_dir, _SAMPLE_CACHE)
    table = load_sample_table(cache) if os.path.exists(cache) else _assemble_table(cfg)
    if table.n_samples == 0:
        raise DataError("no samples inside the study window")
    matrix, labels = table_variable_matrix(table)
    corr = spearman_matrix(matrix, labels)
    imp = gain_importance(importance_fit_full(table, cfg.xgb))
    names = PREDICTOR_NAMES

    artifacts = {
        "spearman.csv": spearman_csv_text(corr),
        "importance.csv": importance_csv_text(names, imp.fractions, imp.degenerate),
    }
    if args.format == "json":
        import json

        payload = {
            "spearman": {
                "labels": list(corr.labels),
                "values": [
                    [None if math.isnan(v) else float(v) for v in corr.values[i]]
                    for i in range(len(corr.labels))
                ],
            },
            "importance": {
                "predictors": list(names),
                "gain_fraction": [float(v) for v in imp.fractions],
                "degenerate": bool(imp.degenerate),
            },
        }
        artifacts["explore.json"] = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.format == "svg":
        texts = [
            [
                "" if math.isnan(corr.values[i, j]) else f"{corr.values[i, j]:.2f}"
                for j in range(len(labels))
            ]
            for i in range(len(labels))
        ]
        order = importance_order(imp.fractions)
        artifacts["spearman.svg"] = svg_heatmap(
            texts, corr.values, labels, labels, "Rank correlations, predictand and 17 predictors"
        )
        artifacts["importance.svg"] = svg_barplot(
            [names[i] for i in order],
            [imp.fractions[i] for i in order],
            "Gain importance, full-data fit on all 17 predictors",
            value_texts=[f"{imp.fractions[i]:.4f}" for i in order],
        )
    _emit(cfg.output_dir, artifacts)
    print(f"wrote exploration tables for {table.n_samples} samples to {cfg.output_dir}")
    return 0


def _figure_tables(rows) -> dict:
    """Wide CSV companions to the improvement heatmaps, values verbatim."""
    import csv
    import io

    tables = {}
    by_metric = {}
    for alg, pset, fold, metric, value in rows:
        by_metric.setdefault(metric, []).append((alg, pset, fold, value))
    for sfx in ("same_set", "vs_set1"):
        entries = [e for e in by_metric.get(f"improvement_{sfx}", []) if e[2] == "mean"]
        if not entries:
            continue
        algs, sets = [], []
        for alg, pset, _, _ in entries:
            if alg not in algs:
                algs.append(alg)
            if pset not in sets:
                sets.append(pset)
        cell = {(a, p): v for a, p, _, v in entries}
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["algorithm", *sets])
        for a in algs:
            writer.writerow([a] + [cell.get((a, p), "") for p in sets])
        tables[f"improvement_{sfx}_table.csv"] = buf.getvalue()
    return tables


def cmd_report(args) -> int:
    if args.out is not None:
        out_dir = args.out
    elif args.config is not None:
        out_dir = load_config(args.config).output_dir
    else:
        raise ConfigError("give --out or --config to locate the report directory")
    source = os.path.join(out_dir, "report.csv")
    if not os.path.exists(source):
        raise DataError(f"no report found at {source}; run the benchmark first")
    rows = read_report_csv(source)
    figures = build_figures(rows)
    if not figures:
        raise DataError(f"{source} holds no renderable improvement or ranking rows")
    artifacts = dict(figures)
    if args.format == "csv":
        artifacts.update(_figure_tables(rows))
    _emit(out_dir, artifacts)
    print(f"rendered {len(artifacts)} figure files to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="precipmerge",
        description="Merge gridded precipitation products with gauge data "
        "and benchmark ensemble learners against a linear baseline.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common_flags(p):
        p.add_argument("--config", metavar="PATH", default=None, help="configuration file")
        p.add_argument(
            "--seed", metavar="N", type=int, default=None, help="override the relevant seed"
        )
        p.add_argument("--out", metavar="DIR", default=None, help="override the output directory")

    p = sub.add_parser("synth", help="write a synthetic benchmark dataset")
    common_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="run the cross-validated benchmark")
    common_flags(p)
    p.add_argument("--threads", metavar="N", type=int, default=1, help="forest fitting threads")
    p.add_argument(
        "--format", choices=("csv", "json", "svg"), default="csv", help="svg adds rendered figures"
    )
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("explore", help="correlation matrix and gain importance")
    common_flags(p)
    p.add_argument(
        "--format",
        choices=("csv", "json", "svg"),
        default="csv",
        help="json or svg add those renderings to the CSV tables",
    )
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("report", help="render figures from an existing report")
    p.add_argument("--config", metavar="PATH", default=None, help="configuration file")
    p.add_argument("--out", metavar="DIR", default=None, help="directory holding report.csv")
    p.add_argument(
        "--format", choices=("csv", "json", "svg"), default="svg", help="csv adds wide tables"
    )
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ParseError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PrecipmergeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
