"""Command line entry point: ``sdnn run | verify | section``."""

from __future__ import annotations

import argparse
import sys

from .exceptions import ConfigInvalid


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sdnn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment sweep")
    run.add_argument("--config", required=True, help="JSON experiment config")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--workers", type=int, default=1, help="parallel processes")
    ver = sub.add_parser("verify", help="check the invariant construction")
    ver.add_argument("--config", required=True)
    sec = sub.add_parser("section", help="cross section of a trained model")
    sec.add_argument("--model", required=True, help="exported model JSON")
    sec.add_argument("--spec", required=True, help="JSON section spec")
    sec.add_argument("--out", default=None, help="output CSV (default: next to the model)")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    from . import experiments

    try:
        if args.command == "run":
            if args.workers < 1:
                raise ConfigInvalid("--workers must be at least 1")
            result = experiments.run(args.config, args.out, args.workers)
            failed = sum(not str(r.get("status", "")).startswith("ok") for r in result["rows"])
            print(f"{len(result['rows'])} runs written to {args.out} ({failed} failed)")
            return 0
        if args.command == "verify":
            report = experiments.verify(args.config)
            for line in report.lines():
                print(line)
            return 0 if report.passed else 1
        path = experiments.section(args.model, args.spec, args.out)
        print(f"section written to {path}")
        return 0
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
