"""Command-line entry point: ``centered-bandit {simulate,replay,gen-log,diagnostics}``.

Errors are reported as one JSON line on stderr, ``{"error": <type>, "message": <text>}``,
with a nonzero exit code.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .experiment import (
    ConfigError,
    ExperimentConfig,
    read_width_trace,
    run_experiment,
    write_outputs,
)
from .replay import LogParseError, generate_log, read_log, replay, write_log
from .theory import sumz_diagnostic


def cmd_simulate(args) -> dict:
    config = ExperimentConfig.load(args.config)
    if args.workers:
        config.workers = args.workers
    result = run_experiment(config)
    out = write_outputs(result, args.out or config.output_path)
    return {"out": str(out), **result.summary()["final_cumulative_regret"]}


def cmd_replay(args) -> dict:
    config = ExperimentConfig.load(args.config)
    per_log = []
    for log_path in args.log:
        log = read_log(log_path)
        runs = []
        for seed in range(config.trials):
            policy = config.make_policy()
            rng = np.random.default_rng(np.random.SeedSequence(config.master_seed, spawn_key=(seed,)))
            res = replay(log, policy, rng)
            runs.append(
                {
                    "seed": seed,
                    "value_estimate": None if res.degenerate else res.value_estimate,
                    "accepted_count": res.accepted_count,
                    "total_count": res.total_count,
                    "weight_sum": res.weight_sum,
                }
            )
        valid = [r for r in runs if r["value_estimate"] is not None]
        accepted = sum(r["accepted_count"] for r in valid)
        mean = (
            sum(r["value_estimate"] * r["accepted_count"] for r in valid) / accepted
            if accepted
            else None
        )
        per_log.append({"log": str(log_path), "value_estimate": mean, "accepted_count": accepted, "runs": runs})

    valid_logs = [p for p in per_log if p["value_estimate"] is not None]
    total = sum(p["accepted_count"] for p in valid_logs)
    overall = sum(p["value_estimate"] * p["accepted_count"] for p in valid_logs) / total if total else None
    report = {"algorithm": config.algorithm, "value_estimate": overall, "accepted_count": total, "logs": per_log}
    out = Path(args.out or config.output_path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "replay.json", "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write results to {out}: {exc.strerror}") from None
    return {"out": str(out), "value_estimate": overall, "accepted_count": total}


def cmd_gen_log(args) -> dict:
    config = ExperimentConfig.load(args.config)
    env = config.environment.build()
    rng = np.random.default_rng(np.random.SeedSequence(config.master_seed))
    records = generate_log(env, args.pi, args.horizon, rng)
    path = Path(args.out)
    try:
        if path.parent:
            path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            write_log(records, fh, env.context_dim)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write log {path}: {exc.strerror}") from None
    return {"out": str(path), "records": len(records)}


def cmd_diagnostics(args) -> dict:
    runs = read_width_trace(args.trace)
    reports = {}
    for trial, (d, pairs) in sorted(runs.items()):
        reports[str(trial)] = sumz_diagnostic(pairs, d).as_dict()
    return {
        "trace": str(args.trace),
        "all_satisfied": all(r["satisfied"] for r in reports.values()),
        "trials": reports,
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="centered-bandit",
        description="Action-centered Thompson sampling experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run seeded regret trials")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (default: config output_path)")
    p.add_argument("--workers", type=int, help="parallel trial workers")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="offline replay evaluation of logged data")
    p.add_argument("--log", required=True, nargs="+", help="one CSV log per user")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("gen-log", help="generate a synthetic log")
    p.add_argument("--config", required=True)
    p.add_argument("--pi", type=float, default=0.6, help="probability of sending a nonzero action")
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_log)

    p = sub.add_parser("diagnostics", help="sum-of-widths check on a widths.csv trace")
    p.add_argument("--trace", required=True)
    p.set_defaults(func=cmd_diagnostics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.func(args)
    except (ConfigError, LogParseError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(json.dumps(report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
