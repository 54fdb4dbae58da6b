"""Command line behavior: exit codes, artifacts, determinism.

Commands are driven through main(argv) in-process. A failing invocation
must leave no partial output, and rendering the same inputs twice must
produce identical bytes.
"""

import csv
import json
import os

import pytest

from precipmerge.cli import main

_CFG = """\
synth:
  stations: 30
  days: 24
  grid_a: [8, 8]
  grid_b: [8, 8]
  seed: 4
imerg_regrid: native
cv:
  seed: 2
output_dir: results
hyperparams:
  forest: {n_trees: 8}
  gbm: {n_trees: 15}
  xgb: {n_rounds: 10}
"""


def _write_cfg(dirpath, text=_CFG):
    path = os.path.join(dirpath, "cfg.yaml")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(text)
    return path


def _read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    """One benchmark run shared by the read-only CLI tests."""
    root = tmp_path_factory.mktemp("cli_run")
    cfg = _write_cfg(root)
    out = os.path.join(root, "results")
    assert main(["run", "--config", cfg, "--out", out]) == 0
    return cfg, out


# ------------------------------------------------------------ exit codes


def test_version_exits_zero(capsys):
    assert main(["--version"]) == 0
    assert "precipmerge" in capsys.readouterr().out


def test_usage_errors_exit_one(capsys):
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    capsys.readouterr()


def test_run_requires_config(capsys):
    assert main(["run"]) == 1
    assert "error:" in capsys.readouterr().err


def test_missing_config_file_exits_one(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.yaml")]) == 1
    assert "cannot read config" in capsys.readouterr().err


def test_unknown_config_key_exits_one(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, "synth: {}\nimerg_regird: native\n")
    assert main(["run", "--config", cfg]) == 1
    assert "unknown key" in capsys.readouterr().err


def test_empty_window_exits_two(tmp_path, capsys):
    cfg = _write_cfg(
        tmp_path,
        _CFG + "window:\n  start: 2020-01-01\n  end: 2020-02-01\n",
    )
    out = os.path.join(tmp_path, "res")
    assert main(["run", "--config", cfg, "--out", out]) == 2
    assert "error:" in capsys.readouterr().err
    assert not os.path.exists(out)


def test_corrupt_input_exits_two_without_output(tmp_path, capsys):
    gauges = tmp_path / "gauges.dly"
    gauges.write_text("this is not a daily-values line\n")
    for name in ("stations.txt", "a.grid", "b.grid"):
        (tmp_path / name).write_text("")
    cfg = _write_cfg(
        tmp_path,
        "inputs:\n"
        "  gauges: gauges.dly\n"
        "  stations: stations.txt\n"
        "  product_a: a.grid\n"
        "  product_b: b.grid\n",
    )
    out = os.path.join(tmp_path, "res")
    assert main(["run", "--config", cfg, "--out", out]) == 2
    err = capsys.readouterr().err
    assert "gauges.dly:1" in err
    assert not os.path.exists(out)


# ----------------------------------------------------------------- synth


def test_synth_writes_deterministic_dataset(tmp_path):
    cfg = _write_cfg(tmp_path)
    d1 = os.path.join(tmp_path, "one")
    d2 = os.path.join(tmp_path, "two")
    d3 = os.path.join(tmp_path, "three")
    assert main(["synth", "--config", cfg, "--out", d1, "--seed", "77"]) == 0
    assert main(["synth", "--config", cfg, "--out", d2, "--seed", "77"]) == 0
    assert main(["synth", "--config", cfg, "--out", d3, "--seed", "78"]) == 0
    names = sorted(os.listdir(d1))
    assert names == [
        "gauges.dly",
        "manifest.json",
        "product_a.grid",
        "product_b.grid",
        "run_config.yaml",
        "stations.txt",
    ]
    for name in names:
        assert _read_bytes(os.path.join(d1, name)) == _read_bytes(os.path.join(d2, name))
    assert _read_bytes(os.path.join(d1, "gauges.dly")) != _read_bytes(
        os.path.join(d3, "gauges.dly")
    )


def test_synth_roundtrip_runs(tmp_path):
    # The emitted run_config.yaml must be directly runnable against the
    # emitted files.
    cfg = _write_cfg(tmp_path)
    data_dir = os.path.join(tmp_path, "data")
    assert main(["synth", "--config", cfg, "--out", data_dir]) == 0
    emitted = os.path.join(data_dir, "run_config.yaml")
    out = os.path.join(tmp_path, "res")
    assert (
        main(["explore", "--config", emitted, "--out", out]) == 0
    )  # explore: no model CV, quick
    assert os.path.exists(os.path.join(out, "spearman.csv"))


# ------------------------------------------------------------------- run


def test_run_artifacts(run_dir, capsys):
    _, out = run_dir
    assert sorted(os.listdir(out)) == ["report.csv", "report.json", "samples.pmst"]
    with open(os.path.join(out, "report.csv"), encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["algorithm", "predictor_set", "fold", "metric", "value"]
    sizes = [int(r[4]) for r in rows if r[3] == "n_test_samples"]
    assert sum(sizes) == 30 * 24
    with open(os.path.join(out, "report.json"), encoding="ascii") as fh:
        summary = json.load(fh)
    assert summary["seed"] == 2
    assert summary["split_unit"] == "station"


def test_run_is_deterministic(run_dir, tmp_path):
    cfg, out = run_dir
    again = os.path.join(tmp_path, "again")
    assert main(["run", "--config", cfg, "--out", again]) == 0
    for name in ("report.csv", "report.json", "samples.pmst"):
        assert _read_bytes(os.path.join(out, name)) == _read_bytes(
            os.path.join(again, name)
        )


def test_run_svg_format_adds_figures(run_dir, tmp_path):
    cfg, _ = run_dir
    out = os.path.join(tmp_path, "svg")
    assert main(["run", "--config", cfg, "--out", out, "--format", "svg"]) == 0
    names = set(os.listdir(out))
    assert {
        "improvement_same_set.svg",
        "improvement_vs_set1.svg",
        "rank_freq_set1.svg",
        "rank_freq_set2.svg",
        "rank_freq_set3.svg",
        "rank_freq_collective.svg",
    } <= names


def test_seed_flag_overrides_cv_seed(run_dir, tmp_path):
    cfg, _ = run_dir
    out = os.path.join(tmp_path, "seeded")
    assert main(["run", "--config", cfg, "--out", out, "--seed", "9"]) == 0
    with open(os.path.join(out, "report.json"), encoding="ascii") as fh:
        assert json.load(fh)["seed"] == 9


def test_linear_only_run_scores_exact_zero(tmp_path):
    cfg = _write_cfg(
        tmp_path,
        _CFG + "algorithms: [linear]\npredictor_sets: [set1]\n",
    )
    out = os.path.join(tmp_path, "res")
    assert main(["run", "--config", cfg, "--out", out]) == 0
    with open(os.path.join(out, "report.csv"), encoding="ascii") as fh:
        rows = list(csv.reader(fh))[1:]
    imp = [r for r in rows if r[3].startswith("improvement_")]
    assert imp and all(r[4] == "0.0" for r in imp)
    assert not any(r[3].startswith("rank") for r in rows)


# --------------------------------------------------------------- explore


def test_explore_from_cache(run_dir, capsys):
    cfg, out = run_dir
    assert main(["explore", "--config", cfg, "--out", out]) == 0
    assert "720 samples" in capsys.readouterr().out
    with open(os.path.join(out, "spearman.csv"), encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
    assert header[:2] == ["variable", "gauge_mm"]
    assert len(header) == 19
    with open(os.path.join(out, "importance.csv"), encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["rank", "predictor", "gain_fraction", "degenerate"]
    assert len(rows) == 18
    assert [r[0] for r in rows[1:]] == [str(i) for i in range(1, 18)]


def test_explore_without_cache_matches(run_dir, tmp_path):
    cfg, out = run_dir
    fresh = os.path.join(tmp_path, "fresh")
    assert main(["explore", "--config", cfg, "--out", fresh]) == 0
    for name in ("spearman.csv", "importance.csv"):
        assert _read_bytes(os.path.join(fresh, name)) == _read_bytes(
            os.path.join(out, name)
        )


def test_explore_formats(run_dir, tmp_path):
    cfg, _ = run_dir
    jdir = os.path.join(tmp_path, "j")
    assert main(["explore", "--config", cfg, "--out", jdir, "--format", "json"]) == 0
    with open(os.path.join(jdir, "explore.json"), encoding="ascii") as fh:
        payload = json.load(fh)
    assert len(payload["spearman"]["labels"]) == 18
    assert len(payload["importance"]["gain_fraction"]) == 17
    sdir = os.path.join(tmp_path, "s")
    assert main(["explore", "--config", cfg, "--out", sdir, "--format", "svg"]) == 0
    assert os.path.exists(os.path.join(sdir, "spearman.svg"))
    assert os.path.exists(os.path.join(sdir, "importance.svg"))


def test_explore_rejects_corrupt_cache(run_dir, tmp_path, capsys):
    cfg, _ = run_dir
    out = os.path.join(tmp_path, "bad")
    os.makedirs(out)
    with open(os.path.join(out, "samples.pmst"), "wb") as fh:
        fh.write(b"not a sample cache")
    assert main(["explore", "--config", cfg, "--out", out]) == 2
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------- report


def test_report_renders_and_rerenders_identically(run_dir):
    cfg, out = run_dir
    assert main(["report", "--out", out]) == 0
    figure = os.path.join(out, "improvement_same_set.svg")
    first = _read_bytes(figure)
    assert main(["report", "--out", out]) == 0
    assert _read_bytes(figure) == first
    assert first.startswith(b"<svg ")


def test_report_csv_format_adds_tables(run_dir):
    _, out = run_dir
    assert main(["report", "--out", out, "--format", "csv"]) == 0
    path = os.path.join(out, "improvement_same_set_table.csv")
    with open(path, encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["algorithm", "set1", "set2", "set3"]
    assert [r[0] for r in rows[1:]] == ["linear", "forest", "gbm", "xgb"]


def test_report_needs_location(capsys):
    assert main(["report"]) == 1
    assert "error:" in capsys.readouterr().err


def test_report_missing_report_exits_two(tmp_path, capsys):
    assert main(["report", "--out", str(tmp_path)]) == 2
    assert "run the benchmark first" in capsys.readouterr().err


def test_report_schema_mismatch_names_column(tmp_path, capsys):
    with open(tmp_path / "report.csv", "w", encoding="ascii") as fh:
        fh.write("algorithm,predictor_set,fold,score,value\na,b,1,c,0.5\n")
    assert main(["report", "--out", str(tmp_path)]) == 2
    assert "'metric'" in capsys.readouterr().err


def test_report_values_pass_through_verbatim(run_dir):
    _, out = run_dir
    with open(os.path.join(out, "report.csv"), encoding="ascii") as fh:
        rows = list(csv.reader(fh))[1:]
    target = next(
        r for r in rows if r[2] == "mean" and r[3] == "improvement_same_set" and r[0] == "gbm"
    )
    assert main(["report", "--out", out]) == 0
    with open(os.path.join(out, "improvement_same_set.svg"), encoding="ascii") as fh:
        svg = fh.read()
    assert f">{target[4]}</text>" in svg
