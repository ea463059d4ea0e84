"""Command runner functions."""

import argparse
import sys
from dataclasses import replace
from typing import Any, Callable, Dict, Union

from loguru import logger

from .cli_functions import handle_output, parse_sigma_grid, validate_input_file
from .enums import DEFAULT_S, FULL_S, Scenario
from .experiments import ExperimentConfig, run_scenario, run_small_example
from .formats import read_edge_list, read_key_values, read_model_spec
from .propensity import estimate_entangled, exact_degree_propensity
from .similarity import SimilarityConfig, similarity_report
from .treatment import TreatmentDef

Result = Union[str, Dict[str, Any]]


def run_example_small(args: argparse.Namespace) -> Result:
    """Report of the five-unit worked example.

    Args:
        args: CLI arguments namespace with ``b`` and ``seed``

    Returns:
        JSON-ready report
    """
    return run_small_example(B=args.b, seed=args.seed)


def run_simulate(args: argparse.Namespace) -> Result:
    """RMSE table of one simulation scenario.

    Unset options keep the scenario's own sigma grid and class count.

    Args:
        args: CLI arguments namespace

    Returns:
        CSV text with one row per (sigma, estimator)
    """
    sims = args.sims if args.sims is not None else (FULL_S if args.full else DEFAULT_S)
    config = ExperimentConfig(scenario=Scenario(args.scenario)).with_overrides(
        N=args.n,
        S=sims,
        sigma_grid=parse_sigma_grid(args.sigma) if args.sigma else None,
        B=args.b,
        K=args.k,
        seed=args.seed,
    )
    return run_scenario(config, workers=args.workers).to_csv()


def run_similarity(args: argparse.Namespace) -> Result:
    """Similarity report for a key-value settings file.

    Args:
        args: CLI arguments namespace with ``config`` and an optional ``seed``

    Returns:
        JSON-ready report
    """
    config_path = validate_input_file(args.config)
    config = SimilarityConfig.from_mapping(read_key_values(config_path))
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return similarity_report(config)


def run_propensity(args: argparse.Namespace) -> Result:
    """Propensity table of a model spec over an edge list.

    Args:
        args: CLI arguments namespace

    Returns:
        CSV text, one row per unit and one column per level
    """
    spec = read_model_spec(validate_input_file(args.model))
    g_minus = read_edge_list(validate_input_file(args.graph))
    definition = TreatmentDef.from_tag(args.treatment)
    if args.exact:
        table = exact_degree_propensity(spec, g_minus, definition, l_max=args.l_max)
    else:
        table = estimate_entangled(
            spec,
            g_minus,
            definition,
            args.b,
            args.seed,
            l_max=args.l_max,
            workers=args.workers,
        )
    return table.to_csv()


command_list: Dict[str, Callable[[argparse.Namespace], Result]] = {
    "example-small": run_example_small,
    "simulate": run_simulate,
    "similarity": run_similarity,
    "propensity": run_propensity,
}


def run_command(args: argparse.Namespace) -> None:
    """Run the selected sub-command and write its output.

    Args:
        args: CLI arguments namespace
    """
    try:
        logger.info(f"Starting {args.command}")

        result = command_list[args.command](args)

        # Handle output
        handle_output(result, args)

        logger.success(f"Successfully completed {args.command}")

    except Exception as e:
        logger.error(f"Error running {args.command}: {e}")
        sys.exit(1)
