"""Propensity scores under treatment entanglement.

Three constructions of the multivalued table e(l, X_i):

* ``estimate_entangled`` samples G+ from a network model conditional on G-
  and tabulates empirical treatment frequencies.
* ``exact_degree_propensity`` and ``brute_force_propensity`` compute the same
  table exactly, by Poisson-binomial convolution and by enumeration.

The classical baselines fit marginal GLMs to the observed treatments and
ignore the network.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from loguru import logger
from scipy.stats import poisson

from .enums import MAX_FREE_DYADS, ROW_SUM_TOL
from .exceptions import CapacityError, DimensionMismatchError
from .glm import add_intercept, fit_logistic, fit_poisson
from .graph import Graph
from .netmodel import NetworkModelSpec, aligned_base, sample_new_edges
from .streams import SeedLike, as_seed_sequence, derive_rng, ordered_map
from .treatment import TreatmentDef, new_edge_statistic

# uniforms held in memory per Monte-Carlo block
BLOCK_CELLS = 2**20
ENUMERATION_CHUNK = 2**16


@dataclass(frozen=True, eq=False)
class PropensityTable:
    """Entry (i, l) is e(l, X_i); ``overflow[i]`` is P(Z_i > l_max)."""

    values: np.ndarray
    overflow: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float, copy=True)
        overflow = np.array(self.overflow, dtype=float, copy=True).ravel()
        if values.ndim != 2:
            raise ValueError("Propensity values must be an N x (L+1) matrix")
        if overflow.size != values.shape[0]:
            raise DimensionMismatchError("Overflow must have one entry per unit")
        if np.any(values < -ROW_SUM_TOL) or np.any(values > 1 + ROW_SUM_TOL):
            raise ValueError("Propensity entries must lie in [0, 1]")
        values = np.clip(values, 0.0, 1.0)
        overflow = np.clip(overflow, 0.0, 1.0)
        totals = values.sum(axis=1) + overflow
        if np.any(np.abs(totals - 1.0) > ROW_SUM_TOL):
            worst = float(np.max(np.abs(totals - 1.0)))
            raise ValueError(f"Propensity rows must sum to 1 (off by {worst:.3g})")
        values.flags.writeable = False
        overflow.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "overflow", overflow)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def l_max(self) -> int:
        return int(self.values.shape[1] - 1)

    def column(self, level: int) -> np.ndarray:
        """Propensities e(level, X_i) for every unit."""
        if not 0 <= level <= self.l_max:
            raise IndexError(f"Level {level} outside 0..{self.l_max}")
        return self.values[:, level]

    def pair_points(self, m: int) -> np.ndarray:
        """N x 2 matrix of (e(m-1, X_i), e(m, X_i)) used to subclassify for tau_m."""
        if m < 1:
            raise ValueError("Contrast level m must be at least 1")
        return np.column_stack([self.column(m - 1), self.column(m)])

    def expected_level(self) -> np.ndarray:
        """E(Z_i) over the tabulated levels (overflow mass excluded)."""
        if np.any(self.overflow > 0):
            logger.warning("Expected level ignores mass beyond l_max")
        return self.values @ np.arange(self.l_max + 1)

    def to_csv(self, decimals: Optional[int] = None) -> str:
        """CSV text with header ``unit,l0,l1,...,overflow``."""
        header = ["unit"] + [f"l{level}" for level in range(self.l_max + 1)] + ["overflow"]
        lines = [",".join(header)]
        for unit, (row, extra) in enumerate(zip(self.values, self.overflow)):
            cells = [_format_probability(v, decimals) for v in (*row, extra)]
            lines.append(",".join([str(unit)] + cells))
        return "\n".join(lines) + "\n"


def _format_probability(value: float, decimals: Optional[int]) -> str:
    if decimals is None:
        return repr(float(value))
    return f"{value:.{decimals}f}"


def _truncate(distribution: np.ndarray, l_max: int) -> PropensityTable:
    """Split level pmfs into the first ``l_max + 1`` columns and an overflow."""
    width = l_max + 1
    values = np.zeros((distribution.shape[0], width))
    keep = min(width, distribution.shape[1])
    values[:, :keep] = distribution[:, :keep]
    overflow = distribution[:, width:].sum(axis=1)
    return PropensityTable(values=values, overflow=overflow)


def poisson_binomial_pmf(probabilities: np.ndarray) -> np.ndarray:
    """Row-wise pmf of a sum of independent Bernoulli variables.

    Args:
        probabilities: (..., m) success probabilities

    Returns:
        (..., m + 1) pmf from the convolution recurrence
    """
    probs = np.asarray(probabilities, dtype=float)
    pmf = np.zeros(probs.shape[:-1] + (probs.shape[-1] + 1,))
    pmf[..., 0] = 1.0
    for j in range(probs.shape[-1]):
        p = probs[..., j, None]
        shifted = pmf[..., :-1] * p
        pmf *= 1.0 - p
        pmf[..., 1:] += shifted
    return pmf


def _unit_probabilities(
    spec: NetworkModelSpec, base: Graph, definition: TreatmentDef
) -> np.ndarray:
    """Per-unit Bernoulli probabilities of every arc counted by the treatment."""
    probs = spec.edge_prob_matrix() * (base.adjacency == 0)
    if spec.directed and definition.counts_both_endpoints(True):
        return np.concatenate([probs, probs.T], axis=1)
    return probs


def _default_l_max(definition: TreatmentDef, n: int, l_max: Optional[int]) -> int:
    if l_max is None:
        return definition.max_level(n)
    if l_max < 0:
        raise ValueError("l_max must be non-negative")
    return int(l_max)


def exact_degree_propensity(
    spec: NetworkModelSpec,
    g_minus: Graph,
    definition: TreatmentDef,
    l_max: Optional[int] = None,
) -> PropensityTable:
    """Exact propensity table for independent-edge models.

    Each unit's new degree is Poisson-binomial over the non-edges of G-;
    thresholded treatments are read off its pmf.
    """
    base = aligned_base(spec, g_minus)
    pmf = poisson_binomial_pmf(_unit_probabilities(spec, base, definition))
    distribution = definition.level_distribution(pmf)
    return _truncate(distribution, _default_l_max(definition, spec.n, l_max))


def _free_dyads(base: Graph) -> np.ndarray:
    free = base.adjacency == 0
    np.fill_diagonal(free, False)
    if not base.directed:
        free = np.triu(free, k=1)
    return np.argwhere(free)


def brute_force_propensity(
    spec: NetworkModelSpec,
    g_minus: Graph,
    definition: TreatmentDef,
    l_max: Optional[int] = None,
) -> PropensityTable:
    """Exact propensity table by enumerating every completion of G-.

    Raises:
        CapacityError: If there are more than 24 free dyads
    """
    base = aligned_base(spec, g_minus)
    dyads = _free_dyads(base)
    m, n = len(dyads), spec.n
    if m > MAX_FREE_DYADS:
        raise CapacityError(
            f"{m} free dyads means 2^{m} graphs; enumeration is capped at "
            f"{MAX_FREE_DYADS} dyads"
        )

    p = spec.edge_prob_matrix()[dyads[:, 0], dyads[:, 1]] if m else np.zeros(0)
    incidence = np.zeros((m, n), dtype=np.int64)
    incidence[np.arange(m), dyads[:, 0]] += 1
    if definition.counts_both_endpoints(spec.directed):
        incidence[np.arange(m), dyads[:, 1]] += 1

    width = _default_l_max(definition, n, l_max) + 1
    totals = np.zeros(n * (width + 1))
    offsets = np.arange(n) * (width + 1)
    shifts = np.arange(m)

    for start in range(0, 2**m, ENUMERATION_CHUNK):
        codes = np.arange(start, min(2**m, start + ENUMERATION_CHUNK), dtype=np.int64)
        bits = (codes[:, None] >> shifts) & 1
        weights = np.prod(np.where(bits == 1, p, 1.0 - p), axis=1)
        levels = np.minimum(definition.levels(bits @ incidence), width)
        totals += np.bincount(
            (levels + offsets).ravel(),
            weights=np.repeat(weights, n),
            minlength=totals.size,
        )

    logger.debug(f"Enumerated {2**m} completions of G- over {m} free dyads")
    counts = totals.reshape(n, width + 1)
    return PropensityTable(values=counts[:, :width], overflow=counts[:, width])


def _block_plan(draws: int, n: int) -> Tuple[Tuple[int, int], ...]:
    block = max(1, BLOCK_CELLS // (n * n))
    return tuple(
        (index, min(block, draws - start))
        for index, start in enumerate(range(0, draws, block))
    )


def _count_block(task: tuple) -> np.ndarray:
    """Level counts (n x (width + 1)) for one seeded block of draws."""
    spec, base, definition, size, seed, key, width = task
    rng = derive_rng(seed, key)
    new_edges = sample_new_edges(spec, base, size, rng)
    statistic = new_edge_statistic(
        new_edges, spec.directed, definition.counts_both_endpoints(spec.directed)
    )
    levels = np.minimum(definition.levels(statistic), width)
    offsets = np.arange(spec.n) * (width + 1)
    return np.bincount(
        (levels + offsets).ravel(), minlength=spec.n * (width + 1)
    ).reshape(spec.n, width + 1)


def estimate_entangled(
    spec: NetworkModelSpec,
    g_minus: Graph,
    definition: TreatmentDef,
    B: int,
    rng: SeedLike = None,
    l_max: Optional[int] = None,
    workers: int = 1,
) -> PropensityTable:
    """Monte-Carlo propensities from B draws of G+ given G-.

    Draws are split into fixed-size blocks, block ``k`` sampling from the
    stream derived from (seed, k); the table is identical for any
    ``workers``.

    Args:
        spec: Known or fitted network model
        g_minus: Observed pre-treatment graph
        definition: Treatment definition f_i
        B: Number of sampled post-treatment graphs
        rng: Seed or generator for the master stream
        l_max: Largest tabulated level (defaults to the largest attainable)
        workers: Process count for the draws

    Returns:
        Table of empirical frequencies
    """
    if B < 1:
        raise ValueError("Need at least one draw (B >= 1)")
    base = aligned_base(spec, g_minus)
    seed = as_seed_sequence(rng)
    width = _default_l_max(definition, spec.n, l_max) + 1

    tasks = [
        (spec, base, definition, size, seed, key, width)
        for key, size in _block_plan(B, spec.n)
    ]
    logger.debug(f"Sampling {B} post-treatment graphs in {len(tasks)} block(s)")
    counts = np.zeros((spec.n, width + 1))
    for block_counts in ordered_map(_count_block, tasks, workers=workers):
        counts += block_counts
    counts /= B
    return PropensityTable(values=counts[:, :width], overflow=counts[:, width])


def classical_poisson_propensity(
    Z: np.ndarray, X: np.ndarray, l_max: Optional[int] = None
) -> PropensityTable:
    """Poisson-regression propensities that ignore the network.

    Fits log(lambda_i) = beta_0 + beta^T X_i to the observed treatments and
    tabulates Poisson(lambda_i) probabilities.
    """
    counts = np.asarray(Z)
    n = counts.size
    if n < 3:
        raise ValueError("Poisson baseline needs at least 3 units")
    design = add_intercept(X)
    fit = fit_poisson(counts, design)
    rates = fit.fitted(design)
    logger.debug(f"Poisson baseline coefficients: {np.round(fit.coefficients, 4)}")

    width = (n - 1 if l_max is None else int(l_max)) + 1
    levels = np.arange(width)
    values = poisson.pmf(levels[None, :], rates[:, None])
    overflow = poisson.sf(width - 1, rates)
    return PropensityTable(values=values, overflow=overflow)


def classical_logistic_propensity(Z: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Logistic-regression propensities on the row sums of dyadic covariates.

    Returns:
        Fitted P(Z_i = 1) for every unit
    """
    treated = np.asarray(Z)
    covariates = np.array(X, dtype=float)
    n = treated.size
    if n < 3:
        raise ValueError("Logistic baseline needs at least 3 units")
    if covariates.shape != (n, n):
        raise DimensionMismatchError(f"X must be {n}x{n}, got {covariates.shape}")
    np.fill_diagonal(covariates, 0.0)
    design = add_intercept(covariates.sum(axis=1))
    return fit_logistic(treated, design).fitted(design)
