from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from latticemaps.config import EngineSettings, parse_run_config, read_config_document
from latticemaps.errors import ConfigError
from latticemaps.runner import EXIT_CONFIG, SUITES, run

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--samples", type=int, help="random samples per check (default: LATTICEMAPS_SAMPLES)")
    common.add_argument("--out", type=Path, help="report path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), help="report format")
    common.add_argument("--steps", type=int, help="number of map steps")
    common.add_argument("--verbose", action="store_true", help="log at DEBUG level")

    parser = argparse.ArgumentParser(
        prog="latticemaps",
        description="Exact checks, orbits and invariants of open boundary reductions of quad equations.",
    )
    verbs = parser.add_subparsers(dest="command", required=True)
    verify = verbs.add_parser("verify", parents=[common], help="run the consistency suites over the registry")
    verify.add_argument("--only", choices=SUITES, help="run a single suite")
    verify.add_argument("--workers", type=int, help="worker processes (default: LATTICEMAPS_WORKERS or CPU count)")
    verbs.add_parser("orbit", parents=[common], help="iterate a strip map from the configured seed")
    verbs.add_parser("invariants", parents=[common], help="extract trace invariants and their drift")

    gallery = verbs.add_parser("gallery", help="closed-form maps")
    gallery_verbs = gallery.add_subparsers(dest="gallery_action", required=True)
    gallery_verbs.add_parser("list", parents=[common], help="list gallery ids")
    check = gallery_verbs.add_parser(
        "check", parents=[common], help="cross-check a closed form against the strip engine"
    )
    check.add_argument("gallery_id")
    return parser


def configure_logging(settings: EngineSettings, verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, settings.log_level.upper(), logging.WARNING)
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)


def _document(args: argparse.Namespace) -> Dict[str, Any]:
    document: Dict[str, Any] = read_config_document(args.config) if args.config else {}
    document["command"] = args.command
    overrides = {
        "samples": args.samples,
        "out": str(args.out) if args.out else None,
        "format": args.format,
        "steps": args.steps,
        "only": getattr(args, "only", None),
        "workers": getattr(args, "workers", None),
    }
    document.update({key: value for key, value in overrides.items() if value is not None})
    if args.command == "gallery":
        document["gallery_id"] = args.gallery_id if args.gallery_action == "check" else None
    return document


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = EngineSettings.from_env()
    configure_logging(settings, args.verbose)
    try:
        config = parse_run_config(_document(args), settings)
        return run(config)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
