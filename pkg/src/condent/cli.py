"""Command line entry point: ``condent run <config>`` and ``condent validate <config>``.

Exit status is 0 on success, 1 on a runtime error and 2 on a validation error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from condent.config import ConfigError, build_config, validate_file
from condent.experiments import run

log = logging.getLogger("condent")

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="condent", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the experiment described by a config file")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, help="override the master seed")
    p_run.add_argument("--output-dir", help="override the output directory")
    p_run.add_argument("--bits", action="store_true", help="report entropies in bits")
    p_val = sub.add_parser("validate", help="list every violated constraint in a config file")
    p_val.add_argument("config")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")

    if args.command == "validate":
        try:
            violations = validate_file(args.config)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        for v in violations:
            print(v)
        return EXIT_INVALID if violations else EXIT_OK

    try:
        cfg, violations = build_config(
            args.config,
            seed=args.seed,
            output_dir=args.output_dir,
            units="bits" if args.bits else None,
        )
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if violations:
        for v in violations:
            print(f"invalid config: {v}", file=sys.stderr)
        return EXIT_INVALID
    try:
        manifest = run(cfg)
    except Exception as exc:  # surfaced as exit status 1
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    log.info("%s: wrote %d outputs to %s", cfg.experiment, len(manifest["outputs"]), cfg.output_dir)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
