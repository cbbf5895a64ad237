"""
Command-line entry point.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical or I/O
failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, amm, ev, experiments, report
from .config import ExperimentConfig, config_from_dict, parse_config
from .errors import ConfigError, NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> Parser:
    parser = Parser(prog="lvrsim", description="LVR retention and extractable-value experiments.")
    parser.add_argument("--version", action="version", version=f"lvrsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    def experiment(name: str, help_text: str):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="JSON config file (omitted keys take defaults)")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
        return p

    experiment("retention", "protected vs unprotected vs HODL")
    p = experiment("readd-sweep", "retention across vault re-add fractions")
    p.add_argument("--pcts", type=float_list, default=[0.01, 0.05, 0.125])
    p = experiment("blocktime-sweep", "arbitrage profit per day against block time")
    p.add_argument("--gaps", type=int_list, default=[1, 2, 5, 10, 20, 50])
    p = experiment("delay-sweep", "time value of a pending order against inclusion delay")
    p.add_argument("--deltas", type=int_list, default=[0, 10, 50, 250])

    p = sub.add_parser("goldmine", help="value of an option on discrete outcomes")
    p.add_argument("--probs", type=float_list, required=True)
    p.add_argument("--values", type=float_list, required=True)
    p.add_argument("--strike", type=float, required=True)

    p = experiment("time-value", "intrinsic/time split of pool arbitrage value")
    p.add_argument("--horizons", type=int_list, default=[0, 100])
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--price", type=float, help="external price (defaults to the pool price)")
    return parser


def load_config(args, experiment: str) -> ExperimentConfig:
    try:
        config = parse_config(args.config, experiment) if args.config else config_from_dict({}, experiment)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {args.config}") from None
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed", "must be >= 0")
        config = replace(config, seed=args.seed)
    return config


def require_out(args) -> Path:
    if args.out is None:
        raise UsageError(f"lvrsim {args.command}: error: --out is required")
    return args.out


def cmd_retention(args) -> int:
    config = load_config(args, "retention")
    out = require_out(args)
    started = report.now()
    rep = experiments.run_retention_experiment(config, args.workers)
    report.emit_report(rep, out, started)
    print(f"mean_ratio={rep.mean_ratio:.6f} ± {rep.std_error:.2g}")
    return EXIT_OK


def cmd_readd_sweep(args) -> int:
    config = load_config(args, "readd-sweep")
    out = require_out(args)
    started = report.now()
    sweep = experiments.run_readd_sweep(config, args.pcts, args.workers)
    report.emit_readd_sweep(sweep, out, started)
    for pct, mean, se in sweep.rows():
        print(f"pct={pct:g} mean_ratio={mean:.6f} ± {se:.2g}")
    return EXIT_OK


def cmd_blocktime_sweep(args) -> int:
    config = load_config(args, "blocktime-sweep")
    out = require_out(args)
    started = report.now()
    sweep = experiments.run_blocktime_sweep(config, args.gaps, args.workers)
    report.emit_blocktime_sweep(sweep, out, started)
    for gap, seconds, profit, se in sweep.rows():
        print(f"gap={gap} block_time_s={seconds:g} profit_per_day={profit:.6g} ± {se:.2g}")
    print(f"slope={sweep.slope:.4f} ± {sweep.slope_std_error:.2g}")
    return EXIT_OK


def cmd_delay_sweep(args) -> int:
    config = load_config(args, "delay-sweep")
    out = require_out(args)
    started = report.now()
    sweep = experiments.run_delay_sweep(config, args.deltas)
    report.emit_delay_sweep(sweep, out, started)
    for delta, tv, se, _, _ in sweep.rows():
        print(f"delta={delta} time_ev={tv:.6g} ± {se:.2g}")
    return EXIT_OK


def cmd_goldmine(args) -> int:
    if len(args.probs) != len(args.values):
        raise ConfigError("probs", "--probs and --values need the same length")
    outcomes = [ev.DiscreteOutcome(p, v) for p, v in zip(args.probs, args.values)]
    try:
        value = ev.discrete_option_value(outcomes, args.strike)
    except ValueError as exc:
        raise ConfigError("probs", str(exc)) from None
    print(format(value, ".17g"))
    return EXIT_OK


def cmd_time_value(args) -> int:
    config = load_config(args, "retention")
    if args.samples < 2:
        raise ConfigError("samples", "must be >= 2")
    if any(h < 0 for h in args.horizons):
        raise ConfigError("horizons", "must be non-negative")
    pool = amm.new_pool(config.initial_reserve_a, config.initial_reserve_b, config.fee)
    price = config.initial_price if args.price is None else args.price
    if not (price > 0 and math.isfinite(price)):
        raise ConfigError("price", "must be a positive finite number")
    rows = []
    for h in args.horizons:
        est = ev.pool_time_ev(pool, config.gbm, h, args.samples, config.seed, price)
        rows.append((h, est.intrinsic, est.time_value, est.total, est.std_error))
        print(f"horizon={h} intrinsic={est.intrinsic:.6g} time_value={est.time_value:.6g} ± {est.std_error:.2g}")
    if args.out is not None:
        writer = report.ReportWriter(args.out, config.to_dict())
        header = ("horizon_blocks", "intrinsic", "time_value", "total", "std_error")
        writer.write("time_value.csv", report.csv_text(header, rows))
        writer.finish({"samples": args.samples, "external_price": price})
    return EXIT_OK


COMMANDS = {
    "retention": cmd_retention,
    "readd-sweep": cmd_readd_sweep,
    "blocktime-sweep": cmd_blocktime_sweep,
    "delay-sweep": cmd_delay_sweep,
    "goldmine": cmd_goldmine,
    "time-value": cmd_time_value,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "workers", 1) < 1:
            raise ConfigError("workers", "must be >= 1")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
