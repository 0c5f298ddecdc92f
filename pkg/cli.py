"""Command-line entry point: run, bench-time, tune, inspect and sweep."""
import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional

import pandas as pd

from config.settings import DEFAULT_RHO, LOG_LEVEL, RUNS_DIR
from models.errors import ConfigError, OppFLError
from models.scenario import (
    KIND_MOBILITY,
    RunConfig,
    hyper_to_fragment,
    load_config,
    scenario_hash,
    scenario_to_dict,
)
from services.csv_service import (
    generate_csv_bytes,
    generate_filename,
    metrics_to_dataframe,
    read_metrics,
    sessions_to_jsonl,
    summarize_metrics,
)
from services.linktime_service import timing_table
from services.mobility_service import write_encounters_csv, write_trajectories_csv
from services.sim_service import run_overlap_sweep, run_scenario
from services.tune_service import tune

logger = logging.getLogger("oppfl")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _configure_logging(verbosity: int) -> None:
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = getattr(logging, LOG_LEVEL.upper(), logging.WARNING)
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _overrides(args) -> List[str]:
    overrides = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    if getattr(args, "strategy", None):
        overrides.append(f"strategy={args.strategy}")
    return overrides


def _run_config(args) -> RunConfig:
    scenario = load_config(args.config, _overrides(args))
    out = Path(args.out) if args.out else Path(RUNS_DIR) / scenario.name
    if args.workers < 1:
        raise ConfigError("--workers must be at least 1", field="workers")
    return RunConfig(scenario=scenario, out_dir=out, workers=args.workers, verbosity=args.verbose)


def cmd_run(args) -> int:
    config = _run_config(args)
    scenario = config.scenario
    started = time.perf_counter()
    metrics = run_scenario(scenario, workers=config.workers)
    elapsed = time.perf_counter() - started

    config.out_dir.mkdir(parents=True, exist_ok=True)
    metrics_file = generate_filename(f"{scenario.name}_{scenario.strategy}")
    (config.out_dir / metrics_file).write_bytes(generate_csv_bytes(metrics_to_dataframe(metrics.rows)))
    (config.out_dir / "sessions.jsonl").write_bytes(sessions_to_jsonl(metrics.sessions))
    if scenario.kind == KIND_MOBILITY:
        write_encounters_csv(metrics.encounters, config.out_dir / "encounters.csv")
        if scenario.mobility.dump_trajectories:
            write_trajectories_csv(metrics.trajectories, config.out_dir / "trajectories.csv")

    manifest = {
        "scenario_hash": scenario_hash(scenario),
        "seed": scenario.seed,
        "strategy": scenario.strategy,
        "kind": scenario.kind,
        "config": scenario_to_dict(scenario),
        "wall_clock_s": round(elapsed, 3),
        "workers": config.workers,
        "metrics_file": metrics_file,
        "rows": len(metrics.rows),
        "sessions": len(metrics.sessions),
        "notes": metrics.notes,
    }
    (config.out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    print(f"Wrote {len(metrics.rows)} rows to {config.out_dir / metrics_file}")
    return EXIT_OK


def cmd_bench_time(args) -> int:
    rows = timing_table(rho=args.rho, derived=args.derived)
    table = pd.DataFrame([{
        "scenario": row.name,
        "t_send_s": row.t_send,
        "t_train_s": row.t_train,
        "t_agg_s": row.t_agg,
        "rho": row.rho,
        "t_enc_s": round(row.t_enc, 2),
        **({"t_send_derived_s": round(row.derived_t_send, 4)} if args.derived else {}),
    } for row in rows])
    print(table.to_string(index=False))
    return EXIT_OK


def cmd_tune(args) -> int:
    config = _run_config(args)
    result = tune(config.scenario, workers=config.workers)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    fragment = hyper_to_fragment(result.best)
    (config.out_dir / "tune.json").write_text(json.dumps(fragment, indent=2), encoding="utf-8")

    ranking = pd.DataFrame([{**point, "goal_accuracy": score} for point, score in result.ranking])
    print(ranking.to_string(index=False))
    print(f"Best: {json.dumps(fragment['hyper'])} -> {config.out_dir / 'tune.json'}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    df = read_metrics(args.metrics)
    print(summarize_metrics(df).to_string(index=False))
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _run_config(args)
    rows = run_overlap_sweep(config.scenario)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame(rows, columns=["offset", "repeat", "rounds_needed", "base_accuracy", "final_accuracy"])
    df.to_csv(config.out_dir / "sweep.csv", index=False)
    print(df.groupby("offset")["rounds_needed"].mean().to_string())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oppfl",
        description="Opportunistic federated learning simulator.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_flags(p, with_strategy: bool = True):
        p.add_argument("--config", required=True, help="Scenario JSON file")
        p.add_argument("--seed", type=int, help="Root seed override")
        if with_strategy:
            p.add_argument("--strategy", help="Strategy override")
        p.add_argument("--out", help="Output directory (default runs/<scenario-name>)")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="Config override, repeatable")
        p.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)

    run = sub.add_parser("run", help="Run a controlled or mobility scenario")
    scenario_flags(run)
    run.set_defaults(handler=cmd_run)

    bench = sub.add_parser("bench-time", help="Print required encounter durations")
    bench.add_argument("--rho", type=int, default=DEFAULT_RHO)
    bench.add_argument("--derived", action="store_true", help="Also show datarate-derived t_send")
    bench.set_defaults(handler=cmd_bench_time)

    tune_parser = sub.add_parser("tune", help="Grid-search learner hyperparameters")
    scenario_flags(tune_parser, with_strategy=False)
    tune_parser.set_defaults(handler=cmd_tune)

    inspect = sub.add_parser("inspect", help="Summarize a metrics CSV per strategy")
    inspect.add_argument("metrics", help="Path to a metrics CSV")
    inspect.set_defaults(handler=cmd_inspect)

    sweep = sub.add_parser("sweep", help="Rounds needed versus partner label offset")
    scenario_flags(sweep, with_strategy=False)
    sweep.set_defaults(handler=cmd_sweep)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(getattr(args, "verbose", 0))
    if args.command == "bench-time" and args.rho < 1:
        print("error: --rho must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.handler(args)
    except ConfigError as err:
        for message in err.errors:
            print(f"config error: {message}", file=sys.stderr)
        if err.line:
            print(f"  near line {err.line}", file=sys.stderr)
        return EXIT_CONFIG
    except (OppFLError, OSError) as err:
        logger.error("Run failed: %s", err)
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
