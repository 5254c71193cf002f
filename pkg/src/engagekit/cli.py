"""Command-line harness: replay, simulate, bench, print-config.

Exit codes: 0 success, 1 data error (unreadable trace/config/catalog), 2
usage error (bad flags or invalid scenario parameters).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional

from .bench import run_bench
from .config import EngineConfig, apply_overrides, dump_config, load_config
from .content import catalog_or_builtin
from .errors import ConfigError, EngagekitError
from .metrics import render_table, write_metrics_record
from .session import read_timeline, replay
from .trace import (
    FocusedReader,
    Mixed,
    Runner,
    Scanner,
    Walker,
    generate_trace,
    parse_trace,
    validate_scenario,
    write_trace,
)

SCENARIO_NAMES = ("focused-reader", "scanner", "walker", "runner", "mixed")


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="YAML config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override a config value (repeatable)",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="engagekit",
        description="Replay, simulate, and benchmark the engagement inference loop.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_replay = sub.add_parser("replay", help="replay a trace file through the full loop")
    p_replay.add_argument("trace", help="trace file (line-delimited JSON)")
    p_replay.add_argument("--out-dir", default="replay-out", help="output directory")
    p_replay.add_argument("--catalog", help="exhibit catalog file (defaults to built-in)")
    p_replay.add_argument("--cache", help="content cache persistence file")
    p_replay.add_argument(
        "--no-figures", action="store_true", help="skip rendering figures"
    )
    _add_config_args(p_replay)

    p_sim = sub.add_parser("simulate", help="generate a deterministic scenario trace")
    p_sim.add_argument("scenario", choices=SCENARIO_NAMES)
    p_sim.add_argument("--duration", type=float, default=60.0, help="seconds")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True, help="trace file to write")
    p_sim.add_argument("--rate", type=float, default=90.0, help="frames per second")
    p_sim.add_argument("--exhibit", default="copper-brazier", help="focused-reader target")
    p_sim.add_argument("--targets", help="comma-separated scanner targets")
    p_sim.add_argument("--glance", type=float, default=0.4, help="scanner glance seconds")
    p_sim.add_argument("--velocity", type=float, help="walker/runner velocity (m/s)")
    p_sim.add_argument(
        "--segments",
        help="mixed segments, e.g. 'focused-reader:20,runner:10,scanner:15'",
    )

    p_bench = sub.add_parser("bench", help="measure per-tick inference latency")
    p_bench.add_argument("--duration", type=float, default=60.0, help="workload seconds")
    p_bench.add_argument("--seed", type=int, default=1234)
    _add_config_args(p_bench)

    p_print = sub.add_parser("print-config", help="print the effective configuration")
    _add_config_args(p_print)

    return parser


def _load_effective_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> EngineConfig:
    # File problems are data errors (exit 1); bad --set values are usage (exit 2).
    config = load_config(getattr(args, "config", None))
    try:
        return apply_overrides(config, getattr(args, "overrides", []))
    except ConfigError as exc:
        parser.error(str(exc))
        raise AssertionError("unreachable")


def _scenario_from_args(args: argparse.Namespace, parser: argparse.ArgumentParser):
    try:
        if args.scenario == "focused-reader":
            scenario = FocusedReader(exhibit_id=args.exhibit)
        elif args.scenario == "scanner":
            scenario = (
                Scanner(targets=tuple(t for t in args.targets.split(",") if t), glance_s=args.glance)
                if args.targets
                else Scanner(glance_s=args.glance)
            )
        elif args.scenario == "walker":
            scenario = Walker(velocity=args.velocity if args.velocity is not None else 1.5)
        elif args.scenario == "runner":
            scenario = Runner(velocity=args.velocity if args.velocity is not None else 2.5)
        else:
            if not args.segments:
                parser.error("mixed scenario requires --segments")
            segments = []
            for part in args.segments.split(","):
                name, _, seconds = part.partition(":")
                name = name.strip()
                if name == "focused-reader":
                    sub = FocusedReader(exhibit_id=args.exhibit)
                elif name == "scanner":
                    sub = Scanner(glance_s=args.glance)
                elif name == "walker":
                    sub = Walker(velocity=args.velocity if args.velocity is not None else 1.5)
                elif name == "runner":
                    sub = Runner(velocity=args.velocity if args.velocity is not None else 2.5)
                else:
                    raise ConfigError(f"unknown segment scenario {name!r}")
                segments.append((sub, float(seconds)))
            scenario = Mixed(segments=tuple(segments))
        validate_scenario(scenario)
    except (ConfigError, ValueError) as exc:
        parser.error(str(exc))
        raise AssertionError("unreachable")
    return scenario


def _cmd_replay(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    config = _load_effective_config(args, parser)
    if args.cache:
        config = apply_overrides(config, [f"content.cache_path={args.cache}"])
    trace = parse_trace(args.trace)
    catalog = catalog_or_builtin(args.catalog)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    timeline_path = out_dir / "timeline.jsonl"
    metrics_path = out_dir / "metrics.jsonl"
    table_path = out_dir / "metrics.txt"

    with open(timeline_path, "w", encoding="utf-8") as timeline_file:
        result = replay(trace, config, catalog=catalog, timeline_sink=timeline_file)

    write_metrics_record(result.metrics, metrics_path, config.fingerprint())
    table = render_table(result.metrics)
    table_path.write_text(table, encoding="utf-8")
    sys.stdout.write(table)

    if not args.no_figures:
        from . import plots  # matplotlib import deferred off the fast paths

        rows = read_timeline(timeline_path)
        plots.render_timeline_figure(rows, out_dir / "engagement_timeline.png")
        plots.render_distribution_figure(result.metrics, out_dir / "state_distribution.png")

    print(f"wrote {out_dir}/: timeline.jsonl metrics.jsonl metrics.txt"
          + ("" if args.no_figures else " + figures"))
    return 0


def _cmd_simulate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    scenario = _scenario_from_args(args, parser)
    if args.duration <= 0:
        parser.error(f"duration must be > 0, got {args.duration!r}")
    if args.rate <= 0:
        parser.error(f"rate must be > 0, got {args.rate!r}")
    header, frames = generate_trace(scenario, args.duration, args.seed, rate=args.rate)
    write_trace(args.out, header, frames)
    print(f"wrote {args.out}: {len(frames)} frames at {args.rate:g} Hz")
    return 0


def _cmd_bench(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    config = _load_effective_config(args, parser)
    if args.duration <= 0:
        parser.error(f"duration must be > 0, got {args.duration!r}")
    report = run_bench(config, args.duration, args.seed)
    sys.stdout.write(report.format())
    return 0


def _cmd_print_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    config = _load_effective_config(args, parser)
    sys.stdout.write(dump_config(config))
    return 0


_COMMANDS = {
    "replay": _cmd_replay,
    "simulate": _cmd_simulate,
    "bench": _cmd_bench,
    "print-config": _cmd_print_config,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args, parser)
    except EngagekitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
