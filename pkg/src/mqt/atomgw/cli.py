"""Command-line entry point: ``mqt-atomgw <command> --scenario <file> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import TYPE_CHECKING

from mqt.atomgw.errors import SimulationError, ValidationError
from mqt.atomgw.evaluator import COMMANDS, FORMATS, emit_results, run_scenario
from mqt.atomgw.scenario import Scenario, parse_scenario, parse_sweep

if TYPE_CHECKING:
    from collections.abc import Sequence

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mqt-atomgw", description="Single-baseline atom-interferometric gravitational-wave detector simulator."
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--scenario", type=Path, help="flat key = value scenario file; defaults apply when omitted")
    parser.add_argument("--seed", type=int, help="overrides noise.seed")
    parser.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    parser.add_argument("--format", choices=FORMATS, default="csv", dest="fmt")
    parser.add_argument("--sweep", help="key=start:stop:steps, required by the sweep command")
    parser.add_argument("--jobs", type=int, help="parallel workers for sweeps and Monte Carlo trials")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        scenario = parse_scenario(args.scenario.read_text()) if args.scenario else Scenario()
        scenario = scenario.with_seed(args.seed)
        sweep_spec = parse_sweep(args.sweep) if args.sweep else None
        record = run_scenario(scenario, args.command, sweep_spec, args.jobs)
        paths = emit_results(record, args.out, args.fmt)
    except ValidationError as err:
        logger.error("Invalid input: %s", err)
        return EXIT_VALIDATION
    except (SimulationError, OSError) as err:
        logger.error("Run failed: %s", err)
        return EXIT_RUNTIME
    for name, table in record.tables.items():
        print(f"[{name}]")
        print(table.to_string(index=False))
    print(f"Wrote {', '.join(str(path) for path in paths)}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
