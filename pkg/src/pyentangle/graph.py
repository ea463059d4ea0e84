"""Binary network representation for the pre- and post-treatment graphs."""

from dataclasses import dataclass, field
from typing import Iterable, Tuple

import numpy as np

from .exceptions import DimensionMismatchError, SupergraphViolationError


@dataclass(frozen=True, eq=False)
class Graph:
    """Dense binary adjacency over ``n`` units.

    The adjacency is copied, cast to ``int8`` and made read-only on
    construction. Undirected graphs store the full symmetric matrix.
    """

    adjacency: np.ndarray
    directed: bool = False
    n: int = field(init=False)

    def __post_init__(self) -> None:
        adjacency = np.array(self.adjacency, dtype=np.int8, copy=True)
        if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
            raise ValueError(f"Adjacency must be square, got shape {adjacency.shape}")
        if adjacency.shape[0] < 1:
            raise ValueError("Graph needs at least one unit")
        if not np.isin(adjacency, (0, 1)).all():
            raise ValueError("Adjacency must be binary")
        if np.any(np.diag(adjacency)):
            raise ValueError("Self-loops are not allowed")
        if not self.directed and not np.array_equal(adjacency, adjacency.T):
            raise ValueError("Undirected graph requires a symmetric adjacency")
        adjacency.flags.writeable = False
        object.__setattr__(self, "adjacency", adjacency)
        object.__setattr__(self, "n", adjacency.shape[0])

    @classmethod
    def empty(cls, n: int, directed: bool = False) -> "Graph":
        """Graph on ``n`` units with no edges."""
        return cls(np.zeros((n, n), dtype=np.int8), directed=directed)

    @classmethod
    def complete(cls, n: int, directed: bool = False) -> "Graph":
        """Graph on ``n`` units with every edge present."""
        return cls(1 - np.eye(n, dtype=np.int8), directed=directed)

    @classmethod
    def from_edges(
        cls, n: int, edges: Iterable[Tuple[int, int]], directed: bool = False
    ) -> "Graph":
        """Build a graph from 0-indexed ``(i, j)`` pairs.

        Undirected graphs get both orientations of every pair.
        """
        adjacency = np.zeros((n, n), dtype=np.int8)
        for i, j in edges:
            if not (0 <= i < n and 0 <= j < n):
                raise IndexError(f"Edge ({i}, {j}) out of range for n={n}")
            adjacency[i, j] = 1
            if not directed:
                adjacency[j, i] = 1
        return cls(adjacency, directed=directed)

    def edges(self) -> np.ndarray:
        """Edge list as an ``(m, 2)`` array; undirected edges listed once (i < j)."""
        adjacency = self.adjacency if self.directed else np.triu(self.adjacency)
        return np.argwhere(adjacency > 0)

    @property
    def edge_count(self) -> int:
        """Number of arcs (directed) or edges (undirected)."""
        return int(len(self.edges()))

    def as_directed(self) -> "Graph":
        """Directed view holding both orientations of every undirected edge."""
        if self.directed:
            return self
        return Graph(self.adjacency, directed=True)

    def degrees(self) -> np.ndarray:
        """Row sums of the adjacency (out-degrees for directed graphs)."""
        return self.adjacency.sum(axis=1, dtype=np.int64)

    def __repr__(self) -> str:
        kind = "directed" if self.directed else "undirected"
        return f"Graph(n={self.n}, {kind}, edges={self.edge_count})"


def degree(g: Graph, i: int) -> int:
    """Degree d_i(G) = sum_j g_ij (out-degree for directed graphs).

    Args:
        g: Graph
        i: Unit index, 0 <= i < n

    Returns:
        Row sum of unit ``i``
    """
    if not 0 <= i < g.n:
        raise IndexError(f"Unit index {i} out of range for n={g.n}")
    return int(g.adjacency[i].sum())


def check_supergraph(g_minus: Graph, g_plus: Graph) -> None:
    """Raise unless ``g_plus`` keeps every edge of ``g_minus``."""
    if g_minus.n != g_plus.n:
        raise DimensionMismatchError(
            f"Graphs have different sizes: {g_minus.n} and {g_plus.n}"
        )
    if g_minus.directed != g_plus.directed:
        raise DimensionMismatchError("Graphs differ in directedness")
    lost = (g_minus.adjacency == 1) & (g_plus.adjacency == 0)
    if lost.any():
        i, j = np.argwhere(lost)[0]
        raise SupergraphViolationError(
            f"{int(lost.sum())} edge(s) of G- missing from G+, e.g. ({i}, {j})"
        )


def edge_diff(g_minus: Graph, g_plus: Graph) -> Graph:
    """Graph of the edges added between ``g_minus`` and ``g_plus``.

    Args:
        g_minus: Pre-treatment graph
        g_plus: Post-treatment graph, an edge-superset of ``g_minus``

    Returns:
        Graph holding G+ minus G-

    Raises:
        SupergraphViolationError: If an edge of G- is absent from G+
    """
    check_supergraph(g_minus, g_plus)
    return Graph(g_plus.adjacency - g_minus.adjacency, directed=g_plus.directed)
