"""Experiment configuration, orchestration and CSV/JSON reports.

Configuration is one flat YAML mapping.  Keys common to every kind are
``kind``, ``seed``, ``runs`` and ``output_dir``; the remaining keys depend on
the kind (see ``DEFAULTS``).  Run ``r`` draws component ``c`` from
``derive_seed(seed, r, c)``.

Output files (UTF-8, header row, ``repr`` floats, fixed column order):

- ``runs.csv``        run, method, metric, value
- ``aggregate.csv``   method, metric, n, mean, se, ci_low, ci_high  (mean +- 1.96 SE)
- ``weights.csv``     run, method, iteration, index, weight
- ``bottleneck.csv``  run, method, iteration, value
- ``config.json``     resolved configuration plus ``config_hash``
"""

from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .core import ExactFiniteOracle, MwuConfig, TableLosses, minimax_value, regret_bound, run_improper_robust
from .graph import DirectedGraph, load_edge_list
from .influence import (InfluenceInstance, baseline_individual as influence_individual, baseline_perturbed,
                        baseline_uniform_greedy, robust_influence, single_solution_metrics)
from .rng import Stream, derive_seed
from .submodular import CoverageObjective, independent_rounding, robust_coverage_fractional, robust_submodular

OUTPUT_ENV = "ROBUSTOPT_OUTPUT_DIR"
Z95 = 1.96

COMMON = {"kind": None, "seed": 0, "runs": 1, "output_dir": "results"}

DEFAULTS = {
    "synthetic-regret": {"m": 4, "solutions": 16, "T": 1000, "eta": None},
    "coverage": {"items": 10, "elements": 30, "density": 0.2, "m": 5, "k": 3, "T": 100,
                 "steps": 200, "rounding_samples": 100, "eta": None},
    "influence": {"graph": "complete", "nodes": 100, "m": 50, "p": 0.015, "k": 2, "T": 200,
                  "eta": None, "exhaustive": True},
    "learning": {"corruption_set": "pixel", "T": 10, "gamma": 0.5, "learning_rate": 0.5,
                 "train_steps": 200, "batch_size": 100, "hidden": 64,
                 "train_images": None, "train_labels": None, "test_images": None, "test_labels": None,
                 "sizes": [2000, 500, 1000], "data_seed": None},
}

PATH_KEYS = ("train_images", "train_labels", "test_images", "test_labels")

RUN_COLUMNS = ("run", "method", "metric", "value")
AGGREGATE_COLUMNS = ("method", "metric", "n", "mean", "se", "ci_low", "ci_high")
WEIGHT_COLUMNS = ("run", "method", "iteration", "index", "weight")
BOTTLENECK_COLUMNS = ("run", "method", "iteration", "value")


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    runs: int
    output_dir: str
    params: dict

    @classmethod
    def from_mapping(cls, raw: dict, overrides: dict | None = None) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a key-value mapping")
        raw = {**raw, **(overrides or {})}
        kind = raw.get("kind")
        if kind not in DEFAULTS:
            raise ConfigError(f"kind must be one of {sorted(DEFAULTS)}, got {kind!r}")
        allowed = {**COMMON, **DEFAULTS[kind]}
        unknown = sorted(set(raw) - set(allowed))
        if unknown:
            raise ConfigError(f"unknown keys for kind {kind!r}: {unknown}")
        merged = {**allowed, **raw}
        params = {key: merged[key] for key in DEFAULTS[kind]}
        cfg = cls(kind, merged["seed"], merged["runs"], str(merged["output_dir"]), params)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path, overrides: dict | None = None) -> "ExperimentConfig":
        try:
            raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
        return cls.from_mapping(raw if raw is not None else {}, overrides)

    def validate(self):
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an integer in [0, 2**64), got {self.seed!r}")
        if not isinstance(self.runs, int) or self.runs < 1:
            raise ConfigError(f"runs must be a positive integer, got {self.runs!r}")
        p = self.params
        for key in ("m", "T", "k", "solutions", "items", "elements", "steps", "nodes",
                    "train_steps", "batch_size", "hidden", "rounding_samples"):
            if key in p and (not isinstance(p[key], int) or p[key] < 1):
                raise ConfigError(f"{key} must be a positive integer, got {p[key]!r}")
        for key in ("p", "density"):
            if key in p and not (isinstance(p[key], (int, float)) and 0 <= p[key] <= 1):
                raise ConfigError(f"{key} must lie in [0, 1], got {p[key]!r}")
        if p.get("eta") is not None and not (isinstance(p["eta"], (int, float)) and p["eta"] >= 0):
            raise ConfigError(f"eta must be a nonnegative number, got {p['eta']!r}")
        if self.kind == "influence":
            if p["graph"] != "complete" and not Path(p["graph"]).is_file():
                raise ConfigError(f"graph file {p['graph']!r} does not exist")
        if self.kind == "learning":
            from .learning.corruptions import CORRUPTION_SETS

            if p["corruption_set"] not in CORRUPTION_SETS:
                raise ConfigError(f"unknown corruption set {p['corruption_set']!r}")
            if not 0 < p["gamma"] <= 1:
                raise ConfigError("gamma must lie in (0, 1]")
            if p["train_images"] is None or p["train_labels"] is None:
                raise ConfigError("learning runs need train_images and train_labels")
            if (p["test_images"] is None) != (p["test_labels"] is None):
                raise ConfigError("test_images and test_labels go together")
            for key in PATH_KEYS:
                if p[key] is not None and not Path(p[key]).is_file():
                    raise ConfigError(f"{key} file {p[key]!r} does not exist")
            if len(p["sizes"]) != 3 or any(not isinstance(s, int) or s < 1 for s in p["sizes"]):
                raise ConfigError("sizes must be three positive integers")

    def as_dict(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, "runs": self.runs, **copy.deepcopy(self.params)}

    def hash(self) -> str:
        """Digest of everything that affects results (the output directory is excluded)."""
        text = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def parse_override(text: str) -> tuple[str, object]:
    """``key=value`` with the value read as YAML (so numbers, null and lists work)."""
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override {text!r} is not of the form key=value")
    try:
        return key.strip(), yaml.safe_load(value)
    except yaml.YAMLError as exc:
        raise ConfigError(f"override {text!r}: {exc}") from exc


# --------------------------------------------------------------------------
# reports


def aggregate_rows(rows) -> list[tuple]:
    """Mean and normal-approximation 95% interval per (method, metric), in first-seen order."""
    groups: dict[tuple, list] = {}
    for _, method, metric, value in rows:
        groups.setdefault((method, metric), []).append(float(value))
    out = []
    for (method, metric), values in groups.items():
        n = len(values)
        mean = math.fsum(values) / n
        se = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1) / n) if n > 1 else 0.0
        out.append((method, metric, n, mean, se, mean - Z95 * se, mean + Z95 * se))
    return out


@dataclass
class RunReport:
    config: dict
    config_hash: str
    runs: list = field(default_factory=list)         # (run, method, metric, value)
    weights: list = field(default_factory=list)      # (run, method, iteration, index, weight)
    bottlenecks: list = field(default_factory=list)  # (run, method, iteration, value)

    def metric(self, run: int, method: str, metric: str = "bottleneck") -> float:
        for r, me, mt, v in self.runs:
            if (r, me, mt) == (run, method, metric):
                return v
        raise KeyError((run, method, metric))

    def aggregate(self) -> list[tuple]:
        return aggregate_rows(self.runs)

    def add_weights(self, run, method, history):
        for t, w in enumerate(history):
            self.weights.extend((run, method, t, i, float(x)) for i, x in enumerate(w))

    def add_bottlenecks(self, run, method, values):
        self.bottlenecks.extend((run, method, t, float(v)) for t, v in enumerate(values))


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows([_cell(v) for v in row] for row in rows)
    return buf.getvalue()


def emit_csv(report: RunReport, directory) -> dict[str, Path]:
    """Write the report's four tables and the config echo into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = {
        "runs.csv": csv_text(RUN_COLUMNS, report.runs),
        "aggregate.csv": csv_text(AGGREGATE_COLUMNS, report.aggregate()),
        "weights.csv": csv_text(WEIGHT_COLUMNS, report.weights),
        "bottleneck.csv": csv_text(BOTTLENECK_COLUMNS, report.bottlenecks),
        "config.json": json.dumps({**report.config, "config_hash": report.config_hash},
                                  sort_keys=True, indent=2) + "\n",
    }
    paths = {}
    for name, text in files.items():
        path = directory / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        paths[name] = path
    return paths


# --------------------------------------------------------------------------
# experiment kinds


def _synthetic_regret(cfg: ExperimentConfig, report: RunReport):
    p = cfg.params
    m, n, T = p["m"], p["solutions"], p["T"]
    for r in range(cfg.runs):
        table = Stream(derive_seed(cfg.seed, r, 0)).random((n, m))
        losses = TableLosses(table)
        run = run_improper_robust(losses, ExactFiniteOracle(range(n), losses),
                                  MwuConfig(T=T, eta=p["eta"] or None, seed=derive_seed(cfg.seed, r, 1)))
        tau = minimax_value(table)
        if not p["eta"]:
            bound = tau + regret_bound(m, T)
        else:
            scale, additive = regret_bound(m, T, eta=p["eta"])
            bound = scale * tau + additive
        report.runs += [(r, "mwu", "bottleneck", run.bottleneck), (r, "mwu", "tau", tau),
                        (r, "mwu", "bound", bound), (r, "mwu", "bound_satisfied", run.bottleneck <= bound + 1e-9)]
        report.add_weights(r, "mwu", run.weights)
        report.add_bottlenecks(r, "mwu", run.prefix_bottlenecks())


def _coverage(cfg: ExperimentConfig, report: RunReport):
    p = cfg.params
    for r in range(cfg.runs):
        st = Stream(derive_seed(cfg.seed, r, 0))
        covs = [CoverageObjective.random(p["items"], p["elements"], p["density"], st.spawn(i)) for i in range(p["m"])]
        run = robust_submodular(covs, p["k"], p["T"], eta=p["eta"], seed=derive_seed(cfg.seed, r, 1))
        report.runs.append((r, "greedy-mwu", "bottleneck", run.bottleneck))
        report.add_weights(r, "greedy-mwu", run.weights)
        report.add_bottlenecks(r, "greedy-mwu", run.prefix_bottlenecks())

        frac = robust_coverage_fractional(covs, p["k"], p["T"], steps=p["steps"], eta=p["eta"],
                                          seed=derive_seed(cfg.seed, r, 2))
        report.runs.append((r, "fractional", "bottleneck", min(c.relaxation(frac.x) for c in covs)))
        rounded = [independent_rounding(frac, derive_seed(cfg.seed, r, 3, s)) for s in range(p["rounding_samples"])]
        worst = min(np.mean([c.value(S) for S in rounded]) for c in covs)
        report.runs.append((r, "fractional-rounded", "bottleneck", float(worst)))
        report.runs.append((r, "fractional-rounded", "mean_size", float(np.mean([len(S) for S in rounded]))))


def _base_graph(p) -> DirectedGraph:
    return DirectedGraph.complete(p["nodes"]) if p["graph"] == "complete" else load_edge_list(p["graph"])


def _influence(cfg: ExperimentConfig, report: RunReport):
    p = cfg.params
    base = _base_graph(p)
    for r in range(cfg.runs):
        inst = InfluenceInstance.sample(base, p["m"], p["p"], derive_seed(cfg.seed, r, 0))
        n = inst.node_count
        run = robust_influence(inst, p["k"], p["T"], eta=p["eta"], seed=derive_seed(cfg.seed, r, 1))
        individual = max(inst.bottleneck([S]) for S in influence_individual(inst, p["k"]))
        uniform = inst.bottleneck([baseline_uniform_greedy(inst, p["k"])])
        perturbed = inst.bottleneck(baseline_perturbed(inst, p["k"], run, seed=derive_seed(cfg.seed, r, 2)))
        report.runs += [(r, "robust", "bottleneck", n * run.bottleneck),
                        (r, "individual", "bottleneck", individual),
                        (r, "uniform", "bottleneck", uniform),
                        (r, "perturbed", "bottleneck", perturbed)]
        metrics = single_solution_metrics(run, inst, p["k"], exhaustive_limit=10**6 if p["exhaustive"] else 0)
        report.runs.append((r, "robust", "best_single_ratio", metrics.best_single_ratio))
        if metrics.exhaustive_ratio is not None:
            report.runs.append((r, "robust", "exhaustive_ratio", metrics.exhaustive_ratio))
        report.add_weights(r, "robust", run.weights)
        report.add_bottlenecks(r, "robust", n * run.prefix_bottlenecks())


def _learning(cfg: ExperimentConfig, report: RunReport):
    from .learning import (COMPOSITE, HYBRID, CorruptedCopies, CorruptionSet, TrainConfig, baseline_even_split,
                           baseline_individual, baseline_uniform, load_mnist, robust_train)
    from .learning.robust import ensemble_bottleneck_loss, individual_bottleneck_loss

    p = cfg.params
    train, val, test = load_mnist(p["train_images"], p["train_labels"], p["test_images"], p["test_labels"],
                                  sizes=tuple(p["sizes"]), seed=p["data_seed"])
    cset = CorruptionSet.named(p["corruption_set"])
    tc = TrainConfig(p["learning_rate"], p["train_steps"], p["batch_size"], p["hidden"])
    T = p["T"]
    for r in range(cfg.runs):
        seed = derive_seed(cfg.seed, r, 1)
        test_copies = CorruptedCopies(test, cset, derive_seed(cfg.seed, r, 2))
        val_copies = CorruptedCopies(val, cset, derive_seed(cfg.seed, r, 3))

        def record(method, solutions):
            ind = individual_bottleneck_loss(solutions, test_copies)
            ens = ensemble_bottleneck_loss(solutions, test_copies)
            report.runs += [(r, method, "individual_bottleneck", ind), (r, method, "ensemble_bottleneck", ens),
                            (r, method, "jensen_holds", ens <= ind + 1e-12)]
            return ind

        for method in (HYBRID, COMPOSITE):
            run = robust_train(train, val_copies, cset, T, tc, method, gamma=p["gamma"], seed=seed)
            record(method, run.solutions)
            drift = run.result.weight_drift()
            if drift.size:
                report.runs.append((r, method, "early_drift", float(drift[:max(1, drift.size // 2)].mean())))
            report.add_weights(r, method, run.weights)
            test_table = np.array([test_copies.losses(x) for x in run.solutions])
            report.add_bottlenecks(r, method, np.cumsum(test_table, axis=0).max(axis=1) / np.arange(1, T + 1))
        record("uniform", baseline_uniform(train, cset, T, tc, seed=seed))
        record("even_split", baseline_even_split(train, cset, T, tc, seed=seed))
        best = min(individual_bottleneck_loss(baseline_individual(i, train, cset, T, tc, seed=seed), test_copies)
                   for i in range(cset.m))
        report.runs.append((r, "best_individual", "individual_bottleneck", best))


RUNNERS = {"synthetic-regret": _synthetic_regret, "coverage": _coverage,
           "influence": _influence, "learning": _learning}


def run_experiment(cfg: ExperimentConfig, output_dir=None) -> RunReport:
    """Execute every run of ``cfg`` and write the CSV files when ``output_dir`` is given."""
    report = RunReport(cfg.as_dict(), cfg.hash())
    RUNNERS[cfg.kind](cfg, report)
    if output_dir is not None:
        emit_csv(report, output_dir)
    return report


def resolve_output_dir(cfg: ExperimentConfig, explicit=None) -> Path:
    """Explicit flag, then the environment variable, then the config's ``output_dir``."""
    return Path(explicit or os.environ.get(OUTPUT_ENV) or cfg.output_dir)


# --------------------------------------------------------------------------
# collecting reports


def collect_reports(root) -> dict[str, dict]:
    """Per-run rows under ``root`` grouped by config hash; duplicate runs of one config are kept once."""
    groups: dict[str, dict] = {}
    for cfg_path in sorted(Path(root).rglob("config.json")):
        runs_path = cfg_path.with_name("runs.csv")
        if not runs_path.is_file():
            continue
        meta = json.loads(cfg_path.read_text(encoding="utf-8"))
        h = meta.get("config_hash")
        group = groups.setdefault(h, {"kind": meta.get("kind"), "dirs": [], "rows": {}})
        group["dirs"].append(str(cfg_path.parent))
        with open(runs_path, encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                key = (int(row["run"]), row["method"], row["metric"])
                group["rows"].setdefault(key, float(row["value"]))
    return groups
