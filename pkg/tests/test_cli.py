import json
import os

import pytest
import yaml

from robustopt.cli import main
from robustopt.experiments import (ConfigError, ExperimentConfig, RunReport, aggregate_rows, collect_reports,
                                   emit_csv, run_experiment)


def write_config(tmp_path, name="cfg.yaml", **values):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(values))
    return path


def read(path):
    return path.read_bytes()


# configuration

def test_defaults_and_overrides():
    cfg = ExperimentConfig.from_mapping({"kind": "influence"}, {"T": 20})
    assert cfg.params["m"] == 50 and cfg.params["T"] == 20 and cfg.runs == 1


@pytest.mark.parametrize("raw", [
    {"kind": "nope"},
    {"kind": "influence", "bogus": 1},
    {"kind": "influence", "seed": -1},
    {"kind": "influence", "seed": 2**64},
    {"kind": "influence", "p": 1.5},
    {"kind": "influence", "graph": "/no/such/file"},
    {"kind": "synthetic-regret", "T": 0},
    {"kind": "learning"},
    {"kind": "learning", "train_images": "/no/such", "train_labels": "/no/such"},
])
def test_invalid_configs(raw):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping(raw)


def test_hash_ignores_output_dir():
    a = ExperimentConfig.from_mapping({"kind": "coverage", "output_dir": "x"})
    b = ExperimentConfig.from_mapping({"kind": "coverage", "output_dir": "y"})
    c = ExperimentConfig.from_mapping({"kind": "coverage", "seed": 1})
    assert a.hash() == b.hash() != c.hash()


# reports

def test_empty_report_writes_headers_only(tmp_path):
    emit_csv(RunReport({}, "h"), tmp_path)
    assert (tmp_path / "runs.csv").read_text() == "run,method,metric,value\n"
    assert (tmp_path / "weights.csv").read_text() == "run,method,iteration,index,weight\n"


def test_one_run_one_row_per_iteration(tmp_path):
    cfg = ExperimentConfig.from_mapping({"kind": "synthetic-regret", "T": 25, "m": 3, "solutions": 5})
    run_experiment(cfg, tmp_path)
    lines = (tmp_path / "bottleneck.csv").read_text().splitlines()
    assert len(lines) == 1 + 25
    assert len((tmp_path / "weights.csv").read_text().splitlines()) == 1 + 25 * 3


def test_aggregate_ci():
    rows = [(r, "a", "x", v) for r, v in enumerate([1.0, 2.0, 3.0, 4.0])]
    (_, _, n, mean, se, lo, hi), = aggregate_rows(rows)
    assert n == 4 and mean == 2.5
    assert se == pytest.approx((5 / 3) ** 0.5 / 2)
    assert lo == pytest.approx(2.5 - 1.96 * se) and hi == pytest.approx(2.5 + 1.96 * se)


def test_aggregate_recomputable_from_runs(tmp_path):
    cfg = ExperimentConfig.from_mapping({"kind": "synthetic-regret", "runs": 4, "T": 50})
    report = run_experiment(cfg, tmp_path)
    groups = collect_reports(tmp_path)
    rows = [(r, me, mt, v) for (r, me, mt), v in groups[report.config_hash]["rows"].items()]
    assert aggregate_rows(rows) == report.aggregate()


def test_synthetic_regret_bound_row():
    cfg = ExperimentConfig.from_mapping({"kind": "synthetic-regret", "m": 4, "solutions": 16, "T": 1000, "runs": 3})
    report = run_experiment(cfg)
    assert all(report.metric(r, "mwu", "bound_satisfied") for r in range(3))


def test_influence_report_has_four_methods():
    cfg = ExperimentConfig.from_mapping({"kind": "influence", "nodes": 20, "m": 5, "p": 0.1, "T": 10, "runs": 2})
    report = run_experiment(cfg)
    methods = {row[0] for row in report.aggregate() if row[1] == "bottleneck"}
    assert methods == {"robust", "individual", "uniform", "perturbed"}


def test_unwritable_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        emit_csv(RunReport({}, "h"), blocker / "sub")


# determinism across kinds

@pytest.mark.parametrize("raw", [
    {"kind": "synthetic-regret", "runs": 2, "T": 200, "seed": 5},
    {"kind": "coverage", "runs": 1, "T": 20, "steps": 50, "rounding_samples": 20},
    {"kind": "influence", "nodes": 25, "m": 6, "p": 0.08, "T": 15, "runs": 2, "seed": 11},
])
def test_byte_identical_reruns(tmp_path, raw):
    cfg = ExperimentConfig.from_mapping(raw)
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    for name in ("runs.csv", "aggregate.csv", "weights.csv", "bottleneck.csv", "config.json"):
        assert read(tmp_path / "a" / name) == read(tmp_path / "b" / name)


def test_learning_kind_small(tmp_path, mnist_idx):
    images, labels = mnist_idx
    cfg = ExperimentConfig.from_mapping({
        "kind": "learning", "train_images": str(images), "train_labels": str(labels), "sizes": [300, 100, 100],
        "data_seed": 1, "T": 2, "train_steps": 10, "batch_size": 50, "hidden": 8, "corruption_set": "shrink"})
    report = run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    assert read(tmp_path / "a" / "runs.csv") == read(tmp_path / "b" / "runs.csv")
    jensen = [v for _, _, metric, v in report.runs if metric == "jensen_holds"]
    assert jensen and all(jensen)
    methods = {me for _, me, _, _ in report.runs}
    assert methods == {"hybrid", "composite", "uniform", "even_split", "best_individual"}


# command line

def test_cli_run_validate_report(tmp_path, capsys, monkeypatch):
    path = write_config(tmp_path, kind="synthetic-regret", T=50, runs=2, output_dir=str(tmp_path / "cfgdir"))
    assert main(["validate", str(path)]) == 0
    assert main(["run", str(path), "--output", str(tmp_path / "out1")]) == 0
    assert (tmp_path / "out1" / "aggregate.csv").is_file()
    monkeypatch.setenv("ROBUSTOPT_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["run", str(path)]) == 0
    assert read(tmp_path / "env" / "runs.csv") == read(tmp_path / "out1" / "runs.csv")
    monkeypatch.delenv("ROBUSTOPT_OUTPUT_DIR")
    assert main(["run", str(path), "--set", "seed=3"]) == 0
    assert (tmp_path / "cfgdir" / "runs.csv").is_file()
    capsys.readouterr()
    assert main(["report", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    # the seed-3 run has its own hash and is reported separately
    assert out.count("config ") == 2 and "2 directories" in out


def test_cli_exit_codes(tmp_path, capsys):
    bad = write_config(tmp_path, kind="influence", T=-3)
    assert main(["run", str(bad)]) == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "ConfigError" and "T" in err["message"]
    assert main(["validate", str(tmp_path / "missing.yaml")]) == 1
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1
    assert main(["report", str(tmp_path / "empty")]) == 2


def test_cli_runtime_error(tmp_path, capsys):
    graph = tmp_path / "g.txt"
    graph.write_text("0 1\n1 2\n")
    cfg = write_config(tmp_path, kind="influence", graph=str(graph), k=5, T=3, m=2, output_dir=str(tmp_path / "o"))
    assert main(["run", str(cfg)]) == 2
    assert "error" in json.loads(capsys.readouterr().err.strip())


def test_cli_module_entry(tmp_path):
    import subprocess
    import sys

    path = write_config(tmp_path, kind="synthetic-regret", T=10)
    proc = subprocess.run([sys.executable, "-m", "robustopt.cli", "validate", str(path)],
                          capture_output=True, text=True, env={**os.environ})
    assert proc.returncode == 0 and proc.stdout.startswith("ok")
