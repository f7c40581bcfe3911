"""``zeno-drive`` command line entry point.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 oracle-check failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from zeno_drive.errors import ConfigError, CutoffTooSmallError, InvalidParameterError, ProtocolCannotConvergeError
from zeno_drive.experiments import (
    ExperimentConfig,
    cmd_fig1,
    cmd_fig2,
    cmd_fig3,
    cmd_fig4,
    cmd_oracle_check,
    cmd_sweep,
    resolve_seed,
)

log = logging.getLogger("zeno_drive")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_ORACLE = 0, 1, 2, 3
FIGURES = {"fig1": cmd_fig1, "fig2": cmd_fig2, "fig3": cmd_fig3, "fig4": cmd_fig4}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zeno-drive",
        description="Drive a mechanical resonator into a coherent state by repeated qubit measurements.",
    )
    parser.add_argument("command", choices=[*FIGURES, "sweep", "oracle-check"])
    parser.add_argument("--config", type=Path, help="JSON config file (defaults apply when omitted)")
    parser.add_argument("--out", type=Path, help="output directory (default: config 'output' or '.')")
    parser.add_argument("--seed", type=int, help="PRNG seed; falls back to $ZENO_DRIVE_SEED")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    parser.add_argument("--no-timestamp", action="store_true", help="omit the timestamp header line")
    parser.add_argument("--emit-gnuplot", action="store_true", help="write a gnuplot script next to each CSV")
    parser.add_argument("--mutate-lambda", action="store_true", help=argparse.SUPPRESS)
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _load(args) -> ExperimentConfig:
    raw = {}
    if args.config is not None:
        try:
            raw = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("<root>: config must be a JSON object")
    config = ExperimentConfig.from_dict(raw)
    seed = resolve_seed(args.seed, raw)
    if not 0 <= seed < 2**64:
        raise ConfigError(f"seed: must be an unsigned 64-bit integer, got {seed}")
    return replace(config, seed=seed)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        config = _load(args)
        out_dir = args.out or Path(config.output or ".")
        write = dict(timestamp=not args.no_timestamp, gnuplot=args.emit_gnuplot)

        if args.command == "oracle-check":
            report = cmd_oracle_check(config, mutate=args.mutate_lambda)
            print(report.format())
            return EXIT_OK if report.passed else EXIT_ORACLE

        if args.command == "sweep":
            tables = cmd_sweep(config, jobs=max(1, args.jobs))
        else:
            tables = (FIGURES[args.command](config),)
        for table in tables:
            path = table.write(out_dir, **write)
            print(path)
        return EXIT_OK
    except (ConfigError, InvalidParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CutoffTooSmallError, ProtocolCannotConvergeError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
