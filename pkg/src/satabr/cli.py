"""``simulate`` command line entry point.

Exit status: 0 on success, 1 for configuration errors, 2 for runtime errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import PRESETS, ConfigError, ScenarioConfig, apply_overrides, get_preset, load_config
from .report import emit_report, summary_text
from .scenario import run_scenario

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

TRACE_NAMES = ("queue", "acr", "cwnd", "erica")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # usage errors count as config errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="simulate", description="TCP over ATM ABR/UBR satellite buffer-requirement simulator")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", help=f"one of: {', '.join(PRESETS)}")
    src.add_argument("--config", help="flat 'key = value' scenario file")
    p.add_argument("--n", type=int, help="number of TCP sources")
    p.add_argument("--feedback-delay", type=float, metavar="MS", help="feedback delay in ms (before scaling)")
    p.add_argument("--scheme", choices=["erica", "erica+"])
    p.add_argument("--service", choices=["abr", "ubr"])
    p.add_argument("--vbr", choices=["on", "off"])
    p.add_argument("--duration", type=float, metavar="RTTS", help="simulated length in round trips")
    p.add_argument("--scale", type=float, help="divide RTT, feedback delay and TCP window by this factor")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--trace", default="queue", help="comma list from: queue,acr,cwnd,erica")
    p.add_argument("--figures", action="store_true", help="also render PNG figures next to the CSV files")
    p.add_argument("--list-presets", action="store_true")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def resolve_config(args: argparse.Namespace) -> ScenarioConfig:
    if args.preset:
        cfg = get_preset(args.preset)
    elif args.config:
        cfg = load_config(args.config)
    else:
        cfg = ScenarioConfig()
    overrides: dict[str, str] = {}
    for flag, key in (
        ("n", "n_sources"),
        ("feedback_delay", "feedback_delay_ms"),
        ("scheme", "scheme"),
        ("service", "service"),
        ("vbr", "vbr"),
        ("duration", "duration_rtts"),
        ("scale", "scale"),
    ):
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = str(value)
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key] = value
    return apply_overrides(cfg, overrides)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    if args.list_presets:
        for name, cfg in PRESETS.items():
            print(f"{name}: n={cfg.n_sources} service={cfg.service.value} scheme={cfg.scheme} "
                  f"fd={cfg.feedback_delay_ms}ms vbr={'on' if cfg.vbr else 'off'}")
        return EXIT_OK
    traces = {t.strip() for t in args.trace.split(",") if t.strip()}
    unknown = traces - set(TRACE_NAMES)
    try:
        if unknown:
            raise ConfigError(f"unknown trace(s): {', '.join(sorted(unknown))}")
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"simulate: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_scenario(cfg, traces)
        emit_report(report, args.out, traces, figures=args.figures)
    except OSError as exc:
        print(f"simulate: cannot write output: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001
        print(f"simulate: runtime error: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME
    if not args.quiet:
        sys.stdout.write(summary_text(report))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
