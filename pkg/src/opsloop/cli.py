"""Command-line harness: scenario suites, ablations, and parameter sweeps.

Exit codes: 0 clean, 1 run errors (failed scenario files or engine faults),
2 configuration errors. Reports are written as a JSON document plus an
aligned text table; wall-clock measurements live under a 'measured' key so
the deterministic surface of two identical invocations compares byte-equal.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

from .corpus import load_scenario_dir, packaged_scenario_dir
from .engine import EngineConfig, ScenarioRun, ablation_configs
from .errors import ConfigError, OpsError, ScenarioLoadError
from .metrics import (
    MetricsReport,
    RunRecord,
    aggregate,
    evaluate_run,
    render_table,
    report_to_json,
)
from .simenv import ScenarioSpec

logger = logging.getLogger(__name__)

SWEEP_GRIDS = {
    "window_size": (256, 512, 768, 1024, 1536),
    "lambda": (0.2, 0.35, 0.5, 0.65, 0.8),
    "retention": (24 * 3600.0, 72 * 3600.0, 120 * 3600.0),
}


def _run_one(payload: dict) -> dict:
    """Worker entry: run one scenario x seed and evaluate it."""
    spec = ScenarioSpec.from_json(payload["spec"])
    config = EngineConfig(**payload["config"])
    run = ScenarioRun(spec, config, payload["seed"])
    trace = run.run()
    record = evaluate_run(trace, spec)
    return {
        "record": record,
        "scenario_id": spec.scenario_id,
        "seed": payload["seed"],
    }


def run_suite(
    specs: list[ScenarioSpec],
    config: EngineConfig,
    workers: int = 1,
) -> tuple[list[RunRecord], list[str]]:
    """Every scenario x configured seed; deterministic result ordering."""
    payloads = [
        {"spec": spec.to_json(), "config": asdict(config), "seed": seed}
        for spec in specs
        for seed in config.seeds
    ]
    errors: list[str] = []
    outputs: list[dict] = []
    if workers <= 1:
        for payload in payloads:
            try:
                outputs.append(_run_one(payload))
            except OpsError as exc:
                errors.append(
                    f"{payload['spec']['scenario_id']} seed {payload['seed']}: {exc}"
                )
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_one, p) for p in payloads]
            for payload, future in zip(payloads, futures):
                try:
                    outputs.append(future.result())
                except OpsError as exc:
                    errors.append(
                        f"{payload['spec']['scenario_id']} seed {payload['seed']}: {exc}"
                    )
    outputs.sort(key=lambda o: (o["scenario_id"], o["seed"]))
    return [o["record"] for o in outputs], errors


def _load_scenarios(path: str | None) -> tuple[list[ScenarioSpec], list[str]]:
    directory = Path(path) if path else packaged_scenario_dir()
    if not directory.is_dir():
        raise ConfigError(f"scenario directory {directory} does not exist")
    specs: list[ScenarioSpec] = []
    skipped: list[str] = []
    for file in sorted(directory.glob("*.json")):
        try:
            specs.append(ScenarioSpec.from_file(file))
        except ScenarioLoadError as exc:
            skipped.append(f"{file.name}: {exc}")
    if not specs:
        raise ConfigError(f"no loadable scenarios in {directory}")
    return specs, skipped


def _write_report(
    out_path: Path,
    reports: dict[str, MetricsReport],
    config: EngineConfig,
    extra: dict | None = None,
) -> None:
    doc = {
        "config": asdict(config),
        "results": {
            name: report_to_json(rep) for name, rep in reports.items()
        },
    }
    if extra:
        doc.update(extra)
    tmp = out_path.with_suffix(out_path.suffix + ".tmp")
    tmp.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    tmp.replace(out_path)
    table_path = out_path.with_suffix(".txt")
    table_path.write_text(render_table(reports) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opsloop",
        description="Run simulated incident-remediation suites and report metrics.",
    )
    parser.add_argument("--scenarios", help="directory of scenario JSON files "
                        "(default: bundled corpus)")
    parser.add_argument("--seeds", help="comma-separated seed list, e.g. 1,2,3")
    parser.add_argument("--config", help="engine config JSON file")
    parser.add_argument("--out", default="report.json", help="report output path")
    parser.add_argument("--workers", type=int, default=1,
                        help="parallel scenario workers")
    parser.add_argument("--ablate", action="store_true",
                        help="run the five-configuration comparison")
    parser.add_argument("--sweep", choices=sorted(SWEEP_GRIDS),
                        help="sweep one parameter over its grid")
    parser.add_argument("--values", help="override sweep values, comma-separated")
    parser.add_argument("--summarizer", choices=("extractive", "remote"),
                        help="summarizer backend override")
    parser.add_argument("--step-budget", type=int, dest="step_budget",
                        help="max engine cycles per scenario")
    parser.add_argument("--scaling", action="store_true",
                        help="also run at high concurrency to compute SI")
    parser.add_argument("--scaling-level", type=int, default=20,
                        help="concurrency level for the SI numerator")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _build_config(args) -> EngineConfig:
    config = EngineConfig.from_file(args.config) if args.config else EngineConfig()
    overrides = {}
    if args.seeds:
        overrides["seeds"] = tuple(int(s) for s in args.seeds.split(","))
    if args.summarizer:
        overrides["summarizer"] = args.summarizer
    if args.step_budget is not None:
        overrides["step_budget"] = args.step_budget
    if overrides:
        config = replace(config, **overrides)
    config.validate()
    return config


def _sweep_value_config(param: str, value: float, base: EngineConfig) -> EngineConfig:
    if param == "window_size":
        return replace(base, window_size=int(value))
    if param == "lambda":
        return replace(base, balance=float(value))
    if param == "retention":
        return replace(base, raw_ttl=float(value))
    raise ConfigError(f"unknown sweep parameter {param!r}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = _build_config(args)
        specs, skipped = _load_scenarios(args.scenarios)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    out_path = Path(args.out)
    if out_path.parent != Path() and not out_path.parent.is_dir():
        print(f"output directory {out_path.parent} does not exist", file=sys.stderr)
        return 2

    for line in skipped:
        print(f"skipped scenario: {line}", file=sys.stderr)

    all_errors: list[str] = []
    reports: dict[str, MetricsReport] = {}
    try:
        if args.ablate:
            for name, cfg in ablation_configs(config).items():
                records, errors = run_suite(specs, cfg, workers=args.workers)
                all_errors.extend(f"[{name}] {e}" for e in errors)
                if records:
                    reports[name] = aggregate(records)
        elif args.sweep:
            values = (
                tuple(float(v) for v in args.values.split(","))
                if args.values
                else SWEEP_GRIDS[args.sweep]
            )
            for value in values:
                cfg = _sweep_value_config(args.sweep, value, config)
                records, errors = run_suite(specs, cfg, workers=args.workers)
                all_errors.extend(f"[{args.sweep}={value}] {e}" for e in errors)
                if records:
                    reports[f"{args.sweep}={value:g}"] = aggregate(records)
        else:
            records, errors = run_suite(specs, config, workers=args.workers)
            all_errors.extend(errors)
            profile = None
            if args.scaling and records:
                high_cfg = replace(config, concurrency_level=args.scaling_level)
                high_records, high_errors = run_suite(
                    specs, high_cfg, workers=args.workers
                )
                all_errors.extend(f"[scaling] {e}" for e in high_errors)
                profile = {1: records, args.scaling_level: high_records}
            if records:
                reports["default"] = aggregate(
                    records, concurrency_profile=profile,
                    si_level=args.scaling_level,
                )
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OpsError as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return 1

    if not reports:
        print("no runs completed", file=sys.stderr)
        return 1

    try:
        _write_report(out_path, reports, config)
    except OSError as exc:
        print(f"cannot write report: {exc}", file=sys.stderr)
        return 1

    print(render_table(reports))
    for line in all_errors:
        print(f"run error: {line}", file=sys.stderr)
    if all_errors or skipped:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
