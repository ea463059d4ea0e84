"""Simulation harness: the five-unit worked example and the RMSE studies.

Each replicate draws node effects a_i ~ N(mu, sigma^2), standard-normal
dyadic covariates and one post-treatment graph from the dyadic logistic
model on an empty G-. Outcomes are Y(0) = 25 a_i + eps_i and
Y(1) = Y(0) + 10, so the true ATE is 10.
"""

import json
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from .enums import (
    DEFAULT_B,
    DEFAULT_K,
    DEFAULT_N,
    DEFAULT_S,
    EXPERIMENT_B,
    TRUE_ATE,
    Estimator,
    Scenario,
)
from .exceptions import EstimationImpossibleError, FitError, GlmError
from .glm import add_intercept, fit_poisson
from .graph import Graph
from .netmodel import (
    DyadicLogisticSpec,
    ProductExpSpec,
    fit_node_effect_model,
    sample_posttreatment,
)
from .propensity import (
    brute_force_propensity,
    classical_logistic_propensity,
    classical_poisson_propensity,
    estimate_entangled,
    exact_degree_propensity,
)
from .similarity import exact_similarity
from .streams import SeedLike, as_generator, as_seed_sequence, derive, ordered_map
from .subclass import (
    Subclassification,
    combined_effect,
    level_contrast_effect,
    quantile_subclassify,
    subclassify_pairs,
)
from .treatment import TreatmentDef, apply_treatment

EXCLUDED = (GlmError, EstimationImpossibleError, FitError)


@lru_cache(maxsize=1)
def load_scenarios() -> Dict[str, Dict[str, Any]]:
    """Scenario parameters from the packaged defaults."""
    scenario_file = Path(__file__).parent / "defaults" / "scenarios.json"
    try:
        with open(scenario_file, "r", encoding="utf-8") as f:
            scenarios: Dict[str, Dict[str, Any]] = json.load(f)
            return scenarios
    except FileNotFoundError:
        logger.error(f"Scenario file not found: {scenario_file}")
        raise


def scenario_parameters(scenario: Scenario) -> Dict[str, Any]:
    return load_scenarios()[Scenario(scenario).value]


@dataclass(frozen=True, eq=False)
class Replicate:
    """One simulated data set with its generating model."""

    g_minus: Graph
    g_plus: Graph
    X: np.ndarray
    a: np.ndarray
    Z: np.ndarray
    Y: np.ndarray
    y0: np.ndarray
    y1: np.ndarray
    spec: DyadicLogisticSpec
    treatment: TreatmentDef

    @property
    def true_ate(self) -> float:
        return float(np.mean(self.y1 - self.y0))


def generate_replicate(
    scenario: Scenario, sigma: float, N: int = DEFAULT_N, rng: SeedLike = None
) -> Replicate:
    """Simulate one replicate of a network-evolution scenario.

    Args:
        scenario: One of the three simulation scenarios
        sigma: SD of the node effects and of the outcome noise
        N: Number of units
        rng: Seed or generator

    Returns:
        Graphs, covariates, node effects, treatments and outcomes
    """
    scenario = Scenario(scenario)
    if scenario is Scenario.SMALL_EXAMPLE:
        raise ValueError("The worked example has fixed data; use run_small_example")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    params = scenario_parameters(scenario)
    generator = as_generator(rng)
    directed = bool(params["directed"])

    a = generator.normal(params["a_mean"], sigma, size=N)
    X = generator.standard_normal((N, N))
    if not directed:
        upper = np.triu(X, k=1)
        X = upper + upper.T
    np.fill_diagonal(X, 0.0)

    spec = DyadicLogisticSpec(
        node_effects=a, b=params["b"], dyadic_covariates=X, directed=directed
    )
    g_minus = Graph.empty(N, directed=directed)
    g_plus = sample_posttreatment(spec, g_minus, generator)
    treatment = TreatmentDef.from_tag(params["treatment"])
    Z = apply_treatment(treatment, g_minus, g_plus)

    y0 = params["outcome_slope"] * a + generator.normal(0.0, sigma, size=N)
    y1 = y0 + params["effect"]
    Y = np.where(Z == 1, y1, y0)
    return Replicate(
        g_minus=g_minus,
        g_plus=g_plus,
        X=X,
        a=a,
        Z=Z,
        Y=Y,
        y0=y0,
        y1=y1,
        spec=spec,
        treatment=treatment,
    )


def propensity_scores(
    data: Replicate, estimator: Estimator, B: int = EXPERIMENT_B, rng: SeedLike = None
) -> np.ndarray:
    """P(Z_i = 1) under the chosen propensity model."""
    estimator = Estimator(estimator)
    if estimator is Estimator.TRUE:
        return exact_degree_propensity(data.spec, data.g_minus, data.treatment).column(1)
    if estimator is Estimator.MISSPECIFIED:
        return classical_logistic_propensity(data.Z, data.X)
    fitted = fit_node_effect_model(data.g_plus, data.X, directed=True)
    table = estimate_entangled(fitted, data.g_minus, data.treatment, B, rng)
    return table.column(1)


def estimate_replicate(
    data: Replicate,
    estimator: Estimator,
    B: int = EXPERIMENT_B,
    K: int = DEFAULT_K,
    rng: SeedLike = None,
) -> float:
    """Subclassification ATE estimate of one replicate.

    Raises:
        GlmError: If the misspecified logistic fit fails
        FitError: If the node-effect fit does not converge
        EstimationImpossibleError: If every class is one-armed
    """
    scores = propensity_scores(data, estimator, B, rng)
    return combined_effect(quantile_subclassify(scores, K), data.Z, data.Y).value


def rmse(estimates: Sequence[float], true_ate: float = TRUE_ATE) -> float:
    """Root mean squared deviation of the estimates from ``true_ate``."""
    values = np.asarray(estimates, dtype=float)
    if values.size == 0:
        raise ValueError("RMSE of an empty set of estimates is undefined")
    return float(np.sqrt(np.mean((values - true_ate) ** 2)))


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings of one simulation study."""

    scenario: Scenario
    N: int = DEFAULT_N
    S: int = DEFAULT_S
    sigma_grid: Tuple[float, ...] = ()
    B: int = EXPERIMENT_B
    # 0 takes the scenario's class count
    K: int = 0
    seed: int = 0
    estimators: Tuple[Estimator, ...] = ()

    def __post_init__(self) -> None:
        scenario = Scenario(self.scenario)
        if scenario is Scenario.SMALL_EXAMPLE:
            raise ValueError("The worked example is not a simulation scenario")
        params = scenario_parameters(scenario)
        grid = tuple(float(s) for s in (self.sigma_grid or params["sigma_grid"]))
        estimators = tuple(Estimator(e) for e in (self.estimators or params["estimators"]))
        classes = int(self.K or params.get("classes", DEFAULT_K))
        if self.S < 1:
            raise ValueError("Need at least one replicate (S >= 1)")
        if any(s <= 0 for s in grid):
            raise ValueError("Every sigma must be positive")
        if classes < 1 or classes > self.N:
            raise ValueError(
                f"Need 1 <= K <= N subclasses, got K={classes}, N={self.N}"
            )
        object.__setattr__(self, "scenario", scenario)
        object.__setattr__(self, "sigma_grid", grid)
        object.__setattr__(self, "estimators", estimators)
        object.__setattr__(self, "K", classes)

    @property
    def true_ate(self) -> float:
        return float(scenario_parameters(self.scenario)["effect"])

    def with_overrides(self, **changes: Any) -> "ExperimentConfig":
        """Copy with every non-None keyword replaced."""
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


@dataclass(frozen=True)
class ResultRow:
    sigma: float
    estimator: Estimator
    rmse: float
    excluded: int
    estimates: Tuple[float, ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class ExperimentResult:
    """RMSE per (sigma, estimator) with exclusion counts."""

    scenario: Scenario
    rows: Tuple[ResultRow, ...]

    def get(self, sigma: float, estimator: Estimator) -> ResultRow:
        for row in self.rows:
            if row.sigma == sigma and row.estimator is Estimator(estimator):
                return row
        raise KeyError(f"No result for sigma={sigma}, estimator={estimator}")

    def to_csv(self) -> str:
        lines = ["scenario,sigma,estimator,rmse,excluded"]
        for row in self.rows:
            lines.append(
                f"{self.scenario.value},{row.sigma:g},{row.estimator.value},"
                f"{row.rmse:.6f},{row.excluded}"
            )
        return "\n".join(lines) + "\n"


def _scenario_index(scenario: Scenario) -> int:
    return list(Scenario).index(scenario)


def _run_replicate(task: tuple) -> Dict[str, Optional[float]]:
    """Estimates of every estimator on one replicate; None marks an exclusion."""
    config, sigma_index, rep, seed = task
    key = (_scenario_index(config.scenario), sigma_index, rep)
    data = generate_replicate(
        config.scenario, config.sigma_grid[sigma_index], config.N, derive(seed, *key, 0)
    )
    estimates: Dict[str, Optional[float]] = {}
    for position, estimator in enumerate(config.estimators, 1):
        try:
            estimates[estimator.value] = estimate_replicate(
                data, estimator, config.B, config.K, derive(seed, *key, position)
            )
        except EXCLUDED as e:
            logger.debug(f"Replicate {key} excluded for {estimator.value}: {e}")
            estimates[estimator.value] = None
    return estimates


def run_scenario(
    config: ExperimentConfig, workers: int = 1, keep_estimates: bool = False
) -> ExperimentResult:
    """Replicate a scenario S times per sigma and tabulate RMSE per estimator.

    Replicate (sigma index, r) uses the stream derived from
    (seed, scenario, sigma index, r), so the result does not depend on
    ``workers``.
    """
    seed = as_seed_sequence(config.seed)
    tasks = [
        (config, sigma_index, rep, seed)
        for sigma_index in range(len(config.sigma_grid))
        for rep in range(config.S)
    ]
    logger.info(
        f"Running {config.scenario.value}: {len(config.sigma_grid)} sigma values x "
        f"{config.S} replicates on {workers} worker(s)"
    )
    outcomes = ordered_map(_run_replicate, tasks, workers=workers)

    rows: List[ResultRow] = []
    for sigma_index, sigma in enumerate(config.sigma_grid):
        block = outcomes[sigma_index * config.S : (sigma_index + 1) * config.S]
        for estimator in config.estimators:
            values = [r[estimator.value] for r in block if r[estimator.value] is not None]
            excluded = config.S - len(values)
            if excluded:
                logger.warning(
                    f"sigma={sigma:g}, {estimator.value}: excluded {excluded} of {config.S}"
                )
            error = rmse(values, config.true_ate) if values else float("nan")
            rows.append(
                ResultRow(
                    sigma=sigma,
                    estimator=estimator,
                    rmse=error,
                    excluded=excluded,
                    estimates=tuple(values) if keep_estimates else (),
                )
            )
            logger.debug(f"sigma={sigma:g} {estimator.value}: RMSE {error:.4f}")
    return ExperimentResult(scenario=config.scenario, rows=tuple(rows))


def _one_indexed(sub: Subclassification, k: int) -> List[int]:
    return [int(i) + 1 for i in sub.members(k)]


def run_small_example(B: int = DEFAULT_B, seed: int = 0) -> Dict[str, Any]:
    """Five-unit worked example: exact, Monte-Carlo and Poisson propensities.

    Returns:
        JSON-ready report with both propensity tables, the causal contrasts
        on the fixed similarity sets and on k-means sets, and the exact
        similarity of the two k-means subclassifications
    """
    params = scenario_parameters(Scenario.SMALL_EXAMPLE)
    X = np.asarray(params["covariates"], dtype=float)
    Y = np.asarray(params["outcomes"], dtype=float)
    n, m = X.size, int(params["level"])

    spec = ProductExpSpec(covariates=X, intercept=params["intercept"])
    g_minus = Graph.empty(n)
    g_plus = Graph.from_edges(n, [tuple(e) for e in params["edges"]])
    definition = TreatmentDef.new_degree()
    Z = apply_treatment(definition, g_minus, g_plus)

    true_table = brute_force_propensity(spec, g_minus, definition)
    mc_table = estimate_entangled(spec, g_minus, definition, B, derive(seed, 0))
    poisson_table = classical_poisson_propensity(Z, X)

    fixed_true = Subclassification.from_sets(n, params["similarity_sets"]["true"])
    fixed_mis = Subclassification.from_sets(n, params["similarity_sets"]["misspecified"])
    kmeans_true = subclassify_pairs(true_table, m, K=2, rng=derive(seed, 1))
    kmeans_mis = subclassify_pairs(poisson_table, m, K=2, rng=derive(seed, 2))

    coefficients = fit_poisson(Z, add_intercept(X)).coefficients
    report = {
        "covariates": X.tolist(),
        "treatments": Z.tolist(),
        "outcomes": Y.tolist(),
        "true_table": true_table.values.tolist(),
        "monte_carlo_table": mc_table.values.tolist(),
        "monte_carlo_draws": B,
        "max_monte_carlo_error": float(np.max(np.abs(mc_table.values - true_table.values))),
        "poisson_coefficients": coefficients.tolist(),
        "poisson_table": poisson_table.values.tolist(),
        "expected_level": true_table.expected_level().tolist(),
        "tau_true": level_contrast_effect(fixed_true, Z, Y, m),
        "tau_misspecified": level_contrast_effect(fixed_mis, Z, Y, m),
        "kmeans_sets": {
            "true": [_one_indexed(kmeans_true, k) for k in range(2)],
            "misspecified": [_one_indexed(kmeans_mis, k) for k in range(2)],
        },
        "kmeans_tau_true": level_contrast_effect(kmeans_true, Z, Y, m),
        "kmeans_tau_misspecified": level_contrast_effect(kmeans_mis, Z, Y, m),
        "kmeans_similarity": exact_similarity(kmeans_mis, kmeans_true),
    }
    logger.info(
        f"tau_{m} true model: {report['tau_true']:.2f}, "
        f"misspecified model: {report['tau_misspecified']:.2f}"
    )
    return report
