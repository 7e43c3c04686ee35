"""Command-line entry point.

Exit codes: 0 success, 1 validation error, 2 partial failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, PipelineConfig, load_config
from .ingest import IngestError
from .pipeline import Run, cmd_ccf, cmd_indicators, cmd_irf, cmd_pipeline, cmd_table1, write_manifest, write_synthetic_fixture

EXIT_OK, EXIT_VALIDATION, EXIT_PARTIAL, EXIT_IO = 0, 1, 2, 3


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="config file (section.key = value lines)")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--countries", help="comma-separated country codes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="surveydisagree", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("indicators", "table1", "irf", "pipeline"):
        _common(sub.add_parser(name))
    ccf = sub.add_parser("ccf")
    _common(ccf)
    ccf.add_argument("--max-lag", type=int, help="largest lead/lag K (default from config)")
    sim = sub.add_parser("simulate", help="write a seeded synthetic fixture and config")
    _common(sim)
    sim.add_argument("--months", type=int, default=152)
    sim.add_argument("--draws", type=int, default=1000)
    pc = sub.add_parser("print-config", help="print the resolved configuration")
    _common(pc)
    return parser


def resolve_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    return cfg.with_overrides(
        **{
            "run.seed": None if args.seed is None else str(args.seed),
            "run.jobs": None if args.jobs is None else str(args.jobs),
            "run.out": None if args.out is None else str(args.out.resolve()),
            "run.countries": args.countries,
        }
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "simulate":
            out = args.out or Path("fixture")
            countries = tuple(c for c in (args.countries or "AA,BB,CC").split(",") if c)
            path = write_synthetic_fixture(out, args.seed or 0, countries, args.months, args.draws)
            print(path)
            return EXIT_OK
        cfg = resolve_config(args)
        if args.command == "print-config":
            sys.stdout.write(cfg.to_text())
            return EXIT_OK
        run = Run(cfg, Path(cfg.run.out))
        run.load()
        if args.command == "pipeline":
            return cmd_pipeline(run)
        if args.command == "indicators":
            cmd_indicators(run)
        elif args.command == "table1":
            cmd_table1(run)
        elif args.command == "ccf":
            cmd_ccf(run, args.max_lag)
        elif args.command == "irf":
            cmd_irf(run)
        return write_manifest(run, args.command)
    except (ConfigError, IngestError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
