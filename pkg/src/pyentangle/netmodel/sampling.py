"""Edge probabilities, conditional sampling of G+ and likelihood."""

import numpy as np
from loguru import logger
from scipy.special import xlogy

from ..exceptions import DimensionMismatchError
from ..graph import Graph, check_supergraph
from ..streams import SeedLike, as_generator
from .specs import NetworkModelSpec


def edge_prob(spec: NetworkModelSpec, i: int, j: int) -> float:
    """Probability that dyad (i, j) is an edge under ``spec``.

    Raises:
        ValueError: If ``i == j``
        IndexError: If either unit is out of range
    """
    if i == j:
        raise ValueError("Edge probability is undefined for a self-loop")
    n = spec.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"Dyad ({i}, {j}) out of range for n={n}")
    return float(spec.edge_prob_matrix()[i, j])


def aligned_base(spec: NetworkModelSpec, g_minus: Graph) -> Graph:
    """Return G- in the directedness of ``spec``, validating dimensions."""
    if spec.n != g_minus.n:
        raise DimensionMismatchError(
            f"Model has {spec.n} units but the graph has {g_minus.n}"
        )
    if spec.directed:
        return g_minus.as_directed()
    if g_minus.directed:
        raise DimensionMismatchError("Undirected model cannot extend a directed G-")
    return g_minus


def sample_new_edges(
    spec: NetworkModelSpec, g_minus: Graph, size: int, rng: SeedLike = None
) -> np.ndarray:
    """Draw ``size`` independent sets of new edges conditional on G-.

    Existing edges persist; each non-edge of G- is added independently with
    its edge probability. Undirected models draw each unordered dyad once.

    Returns:
        Boolean array of shape ``(size, n, n)``; symmetric for undirected specs
    """
    base = aligned_base(spec, g_minus)
    generator = as_generator(rng)
    probs = spec.edge_prob_matrix() * (base.adjacency == 0)
    n = spec.n

    uniforms = generator.random((size, n, n))
    new_edges = uniforms < probs
    if not spec.directed:
        upper = np.triu(np.ones((n, n), dtype=bool), k=1)
        new_edges &= upper
        new_edges |= np.swapaxes(new_edges, 1, 2)
    return new_edges


def sample_posttreatment(
    spec: NetworkModelSpec, g_minus: Graph, rng: SeedLike = None
) -> Graph:
    """Sample one G+ conditional on the observed G-.

    Args:
        spec: Edge-probability model
        g_minus: Observed pre-treatment graph
        rng: Seeded random stream

    Returns:
        Supergraph of ``g_minus`` in the directedness of ``spec``
    """
    base = aligned_base(spec, g_minus)
    new_edges = sample_new_edges(spec, base, 1, rng)[0]
    return Graph(base.adjacency | new_edges, directed=spec.directed)


def log_likelihood(spec: NetworkModelSpec, g_plus: Graph, g_minus: Graph) -> float:
    """Bernoulli log-likelihood of G+ over the non-edges of G-.

    Undirected models count each unordered dyad once.

    Raises:
        SupergraphViolationError: If G+ drops an edge of G-
    """
    check_supergraph(g_minus, g_plus)
    base = aligned_base(spec, g_minus)
    plus = g_plus.as_directed() if spec.directed else g_plus

    free = base.adjacency == 0
    np.fill_diagonal(free, False)
    if not spec.directed:
        free = np.triu(free, k=1)

    probs = spec.edge_prob_matrix()[free]
    observed = plus.adjacency[free].astype(float)
    value = float(np.sum(xlogy(observed, probs) + xlogy(1.0 - observed, 1.0 - probs)))
    logger.trace(f"log-likelihood over {int(free.sum())} free dyads: {value:.6f}")
    return value
