"""Command-line entry point.

``atlas-lab <subcommand> --config <path> [--seed N] [--workers N] [--out DIR]``

Subcommands mirror the experiment kinds plus ``doubling-check`` and
``validate-config``.  Exit codes: 0 success, 2 configuration error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import EXPERIMENT_KINDS, ConfigError, parse_config
from .experiments import ExperimentFailure, run, truncation_doubling_check


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atlas-lab",
        description="Monte Carlo laboratory for truncated Atlas and rank-based diffusions",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*EXPERIMENT_KINDS, "doubling-check", "validate-config"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config file (INI)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--workers", type=int, default=1, help="worker processes for ensembles")
        p.add_argument("--out", default=None, help="override the output directory")
        if name == "doubling-check":
            p.add_argument(
                "--monitored-k",
                type=int,
                default=None,
                help="gaps compared between the m and 2m runs (default: analysis k)",
            )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.out is not None:
            cfg = replace(cfg, output_dir=args.out)
        if args.command in EXPERIMENT_KINDS and cfg.kind != args.command:
            raise ConfigError(
                f"subcommand {args.command!r} does not match config kind {cfg.kind!r}"
            )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate-config":
        print(f"config OK: kind={cfg.kind} seed={cfg.seed} truncation={cfg.truncation}")
        return 0

    try:
        if args.command == "doubling-check":
            report = truncation_doubling_check(cfg, args.monitored_k, workers=args.workers)
            out = Path(cfg.output_dir or f"runs/{cfg.kind}")
            out.mkdir(parents=True, exist_ok=True)
            report_path = out / "doubling_report.json"
            report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
            status = "FLAGGED" if report["flagged"] else "ok"
            if report["below_heuristic"]:
                status += " (truncation below heuristic minimum)"
            print(
                f"doubling check {status}: max discrepancy "
                f"{report['max_discrepancy']:.3e} vs threshold {report['threshold']:.3e}; "
                f"report at {report_path}"
            )
            return 0
        result = run(cfg, workers=args.workers)
        print(f"{cfg.kind} run complete: {result.output_dir}")
        return 0
    except ExperimentFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
