"""Command-line interface.

    eprqkd simulate     --config F [--seed N] [--rounds N] [--out F] [--csv F] [--workers N]
    eprqkd epr-check    --config F [--seed N]
    eprqkd attack-sweep --config F [--param NAME] [--grid A:B:STEP] [--out F]
    eprqkd bell         --state pair-coherent|cat [--r0 X | --alpha0 X --beta0 X --kt X]
                        [--truncation N] [--loss-eta X] [--out F]

Exit codes: 0 success, 2 when a simulate run raises the eavesdropping
alarm, 1 on any error (a machine-readable error object goes to stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .config import BellSpec, ConfigError, ScenarioConfig, SweepGrid, parse_config
from .report import to_json
from .scenarios import run_scenario


def _load_config(path: str) -> ScenarioConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def _parse_grid(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError("--grid expects START:STOP:STEP")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError as exc:
        raise ConfigError(f"--grid values must be numbers: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eprqkd",
        description="Continuous-variable EPR cryptography simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the protocol and detection tests")
    sim.add_argument("--config", required=True)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--rounds", type=int)
    sim.add_argument("--out", help="write the JSON report here")
    sim.add_argument("--csv", help="write the per-round public transcript here")
    sim.add_argument("--workers", type=int)

    epr = sub.add_parser("epr-check", help="analytic and estimated EPR metrics")
    epr.add_argument("--config", required=True)
    epr.add_argument("--seed", type=int)

    sweep = sub.add_parser("attack-sweep", help="signature table over a parameter grid")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--param", choices=SweepGrid.SWEEPABLE)
    sweep.add_argument("--grid", help="START:STOP:STEP")
    sweep.add_argument("--out", help="write the CSV table here")

    bell = sub.add_parser("bell", help="Bell-CH ratio for a non-Gaussian state")
    bell.add_argument("--state", choices=("pair-coherent", "cat"), required=True)
    bell.add_argument("--r0", type=float)
    bell.add_argument("--alpha0", type=float)
    bell.add_argument("--beta0", type=float)
    bell.add_argument("--kt", type=float)
    bell.add_argument("--truncation", type=int)
    bell.add_argument("--loss-eta", type=float, dest="loss_eta")
    bell.add_argument("--shifted", action="store_true")
    bell.add_argument("--out", help="write the JSON report here")

    return parser


def _scenario_from_args(args: argparse.Namespace) -> ScenarioConfig:
    if args.command == "bell":
        kwargs = {"state": args.state}
        for name in ("r0", "alpha0", "beta0", "truncation", "loss_eta"):
            value = getattr(args, name)
            if value is not None:
                kwargs[name] = value
        if args.kt is not None:
            kwargs["kappa_t"] = args.kt
        if args.shifted:
            kwargs["shifted"] = True
        return ScenarioConfig(kind="bell", bell=BellSpec(**kwargs), report_path=args.out)

    config = _load_config(args.config)
    if config.kind != args.command:
        raise ConfigError(
            f"config declares scenario {config.kind!r} but the {args.command} command was invoked"
        )
    updates: dict = {}
    proto = config.protocol
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
        proto = replace(proto, seed=args.seed)
    if getattr(args, "rounds", None) is not None:
        proto = replace(proto, rounds=args.rounds)
    if proto is not config.protocol:
        updates["protocol"] = proto
    if getattr(args, "workers", None) is not None:
        updates["workers"] = args.workers
    if getattr(args, "out", None) is not None:
        updates["report_path"] = args.out
    if args.command == "simulate" and args.csv is not None:
        updates["csv_path"] = args.csv
    if args.command == "attack-sweep":
        if args.out is not None:
            updates["csv_path"] = args.out
            updates.pop("report_path", None)
        grid = config.sweep
        if args.param or args.grid:
            start, stop, step = (
                _parse_grid(args.grid)
                if args.grid
                else (grid.start, grid.stop, grid.step)
            )
            grid = SweepGrid(
                param=args.param or grid.param,
                start=start,
                stop=stop,
                step=step,
                repeats=grid.repeats if grid else 20,
                rounds=grid.rounds if grid else None,
            )
            updates["sweep"] = grid
    return replace(config, **updates) if updates else config


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _scenario_from_args(args)
        report = run_scenario(config)
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports all failures
        error = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        print(json.dumps(error), file=sys.stderr)
        return 1
    print(to_json({"scenario": report.scenario, "payload": report.payload}))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
