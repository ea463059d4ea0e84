"""CLI helper functions."""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, Tuple, Union

from loguru import logger

from .__version__ import __version__
from .enums import DEFAULT_B, DEFAULT_N, EXPERIMENT_B, Scenario

SIMULATION_SCENARIOS = [s.value for s in Scenario if s is not Scenario.SMALL_EXAMPLE]


def _output_option() -> argparse.ArgumentParser:
    """Parent parser holding the shared output option."""
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument(
        "-o",
        "--output",
        "--out",
        dest="output",
        type=str,
        help="Output file path (optional, defaults to stdout)",
    )
    return parent


def base_cli() -> argparse.ArgumentParser:
    """Create parser object for CLI."""
    parser = argparse.ArgumentParser(
        description="Entanglement-aware propensity scores for network-evolution treatments",
        add_help=True,
        prog="pyentangle",
    )

    parser.add_argument(
        "--verbose",
        "-v",
        action="count",
        default=0,
        help="Run with additional verbosity (can be used multiple times: -v, -vv, -vvv)",
    )

    parser.add_argument("--log-file", type=str, help="Path to log file (optional)")

    parser.add_argument(
        "--version", "-V", action="version", version=f"pyentangle version: {__version__}"
    )

    output = _output_option()
    commands = parser.add_subparsers(dest="command", required=True)

    example = commands.add_parser(
        "example-small", parents=[output], help="Five-unit worked example report (JSON)"
    )
    example.add_argument(
        "--b", type=int, default=DEFAULT_B, help=f"Monte-Carlo draws (default: {DEFAULT_B})"
    )
    example.add_argument("--seed", type=int, default=0, help="Master seed")

    simulate = commands.add_parser(
        "simulate", parents=[output], help="RMSE simulation study (CSV)"
    )
    simulate.add_argument("--scenario", required=True, choices=SIMULATION_SCENARIOS)
    simulate.add_argument("--sims", type=int, help="Replicates per sigma (default: 500)")
    simulate.add_argument(
        "--full", action="store_true", help="Use 5000 replicates per sigma"
    )
    simulate.add_argument("--n", type=int, default=DEFAULT_N, help="Number of units")
    simulate.add_argument(
        "--sigma", type=str, help="Comma-separated sigma grid (default: scenario grid)"
    )
    simulate.add_argument(
        "--b", type=int, default=EXPERIMENT_B, help="Draws for fitted-model propensities"
    )
    simulate.add_argument(
        "--k", type=int, help="Number of subclasses (default: scenario value)"
    )
    simulate.add_argument("--seed", type=int, default=0, help="Master seed")
    simulate.add_argument(
        "--workers", type=int, default=1, help="Worker processes (default: 1)"
    )

    similarity = commands.add_parser(
        "similarity", parents=[output], help="Model similarity report (JSON)"
    )
    similarity.add_argument(
        "--config", required=True, type=str, help="Key-value similarity settings"
    )
    similarity.add_argument("--seed", type=int, help="Override the configured seed")

    propensity = commands.add_parser(
        "propensity", parents=[output], help="Propensity table of a network model (CSV)"
    )
    propensity.add_argument("--model", required=True, type=str, help="Model spec file")
    propensity.add_argument("--graph", required=True, type=str, help="G- edge list")
    propensity.add_argument(
        "--treatment",
        type=str,
        default="new_degree",
        help="Treatment tag: new_degree, at_least_one, more_than:<k>, neighborhood_grew",
    )
    propensity.add_argument("--b", type=int, default=DEFAULT_B, help="Monte-Carlo draws")
    propensity.add_argument("--seed", type=int, default=0, help="Master seed")
    propensity.add_argument("--l-max", type=int, help="Largest tabulated level")
    propensity.add_argument(
        "--exact", action="store_true", help="Exact Poisson-binomial table, no sampling"
    )
    propensity.add_argument(
        "--workers", type=int, default=1, help="Worker processes (default: 1)"
    )

    return parser


def parse_sigma_grid(text: str) -> Tuple[float, ...]:
    """Parse a comma-separated list of positive sigma values."""
    try:
        grid = tuple(float(value) for value in text.split(",") if value.strip())
    except ValueError:
        raise ValueError(f"Invalid sigma grid '{text}'")
    if not grid:
        raise ValueError("Sigma grid is empty")
    return grid


def handle_output(result: Union[str, Dict[str, Any]], args: argparse.Namespace) -> None:
    """Write a CSV string or a JSON report to ``args.output`` or stdout.

    Args:
        result: CSV text or JSON-ready dictionary
        args: CLI arguments namespace
    """
    text = result if isinstance(result, str) else json.dumps(result, indent=2) + "\n"

    if args.output:
        output_path = Path(args.output)
        try:
            output_path.parent.mkdir(parents=True, exist_ok=True)
            with open(output_path, "w", encoding="utf-8") as f:
                f.write(text)
        except Exception as e:
            logger.error(f"Error writing {output_path}: {e}")
            raise
        logger.info(f"Wrote {output_path}")
    else:
        print(text, end="")


def validate_input_file(file_path: str) -> Path:
    """Validate that input file exists.

    Args:
        file_path: Path to the input file

    Returns:
        Path object for the validated file

    Raises:
        SystemExit: If file doesn't exist
    """
    path = Path(file_path)
    if not path.exists():
        print(f"Error: File '{path}' does not exist.", file=sys.stderr)
        sys.exit(1)
    return path
