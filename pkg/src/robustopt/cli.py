"""Command line: ``robustopt run|validate|report``.

Exit codes: 0 success, 1 configuration error, 2 runtime error.  Errors are
printed to stderr as one JSON object with ``error`` and ``message`` keys.
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import (OUTPUT_ENV, ConfigError, ExperimentConfig, aggregate_rows, collect_reports,
                          parse_override, resolve_output_dir, run_experiment)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _fail(code: int, exc: BaseException) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
    return code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="robustopt", description="Robust optimization experiments.")
    sub = parser.add_subparsers(dest="verb", required=True)

    for verb, helptext in (("run", "execute an experiment and write CSV reports"),
                           ("validate", "check a configuration without running it")):
        p = sub.add_parser(verb, help=helptext)
        p.add_argument("config", help="YAML configuration file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a configuration key (value parsed as YAML)")
        if verb == "run":
            p.add_argument("--output", help=f"output directory (else ${OUTPUT_ENV}, else the config's output_dir)")

    p = sub.add_parser("report", help="aggregate runs.csv files below a directory, grouped by config hash")
    p.add_argument("directory")
    return parser


def _load(args) -> ExperimentConfig:
    overrides = dict(parse_override(text) for text in args.overrides)
    return ExperimentConfig.load(args.config, overrides)


def cmd_run(args) -> int:
    try:
        cfg = _load(args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc)
    out = resolve_output_dir(cfg, args.output)
    try:
        report = run_experiment(cfg, out)
    except Exception as exc:  # any module error becomes a structured runtime failure
        return _fail(EXIT_RUNTIME, exc)
    print(f"wrote {out} (config {report.config_hash}, {cfg.runs} run(s))")
    for method, metric, n, mean, _, lo, hi in report.aggregate():
        print(f"{method:>20} {metric:<22} n={n:<3} mean={mean:.6g}  95% CI [{lo:.6g}, {hi:.6g}]")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        cfg = _load(args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc)
    print(f"ok: {cfg.kind} (config {cfg.hash()})")
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        groups = collect_reports(args.directory)
    except (OSError, ValueError, KeyError) as exc:
        return _fail(EXIT_RUNTIME, exc)
    if not groups:
        return _fail(EXIT_RUNTIME, FileNotFoundError(f"no reports under {args.directory}"))
    for h, group in groups.items():
        print(f"config {h} ({group['kind']}), {len(group['dirs'])} director{'y' if len(group['dirs']) == 1 else 'ies'}")
        rows = [(run, method, metric, value) for (run, method, metric), value in group["rows"].items()]
        for method, metric, n, mean, _, lo, hi in aggregate_rows(rows):
            print(f"{method:>20} {metric:<22} n={n:<3} mean={mean:.6g}  95% CI [{lo:.6g}, {hi:.6g}]")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return {"run": cmd_run, "validate": cmd_validate, "report": cmd_report}[args.verb](args)


if __name__ == "__main__":
    sys.exit(main())
