"""Command line entry point: ``isofluid <scenario> --config <path> [--out <dir>]``.

Exit status: 0 every verdict passed, 1 a verdict failed, 2 configuration
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .config import SCENARIOS, parse_config
from .errors import IsofluidError, ParseError, ValidationError
from .scenarios import run_scenario

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isofluid", description=__doc__.splitlines()[0])
    p.add_argument("scenario", help="one of: " + ", ".join(SCENARIOS))
    p.add_argument("--config", required=True, help="TOML scenario file")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, args.scenario)
    except (ParseError, ValidationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        cfg = cfg.with_output_dir(args.out)
    try:
        summary = run_scenario(cfg)
    except IsofluidError as exc:
        print(f"{cfg.scenario}: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for v in summary.rows:
        print(f"{v.passed:5s} {v.name} = {v.value:.6g} {v.tolerance} [{v.invariant}]")
    return EXIT_OK if summary.passed else EXIT_VERDICT


if __name__ == "__main__":
    sys.exit(main())
