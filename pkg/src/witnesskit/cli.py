"""``witnesskit`` command line.

Exit codes: 0 when every solve was conclusive, 2 for configuration errors,
3 when some rows record solver failures (their ids go to stderr and the
manifest).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import logging
import sys
from typing import List, Optional

from .config import EXPERIMENTS, ConfigError, load_file, resolve
from .experiments import run
from .reporting import write_outputs

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

log = logging.getLogger("witnesskit")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # argparse would exit with 2 as well; keep the code explicit
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="witnesskit", description="Noise thresholds for fidelity-based entanglement witnesses.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="YAML or JSON run configuration")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--jobs", type=int, default=None, help="worker processes")
    parser.add_argument("--optimize", action="store_true", default=None,
                        help="run the witness-tuple search (table1)")
    parser.add_argument("--k", type=int, action="append", default=None,
                        help="tuple size; repeat for several")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    started = _dt.datetime.now(_dt.timezone.utc)
    overrides = {"seed": args.seed, "out": args.out, "jobs": args.jobs, "optimize": args.optimize,
                 "k": args.k[0] if args.k and len(args.k) == 1 else args.k}
    try:
        cfg = resolve(args.experiment, load_file(args.config), overrides)
    except ConfigError as exc:
        print(f"witnesskit: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        result = run(cfg)
    except ConfigError as exc:
        print(f"witnesskit: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code = EXIT_SOLVER if result.failed_ids else EXIT_OK
    csv_path, man_path = write_outputs(result, cfg, cfg["out"], started, code)
    print(f"wrote {csv_path} and {man_path}")
    if result.failed_ids:
        print("solver failures: " + ", ".join(result.failed_ids), file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
