"""Tests for the graph representation."""

import numpy as np
import pytest

from pyentangle.exceptions import DimensionMismatchError, SupergraphViolationError
from pyentangle.graph import Graph, check_supergraph, degree, edge_diff


class TestGraph:
    """Test cases for Graph construction."""

    def test_from_edges_undirected_is_symmetric(self, example_edges):
        """Undirected graphs store both orientations."""
        g = Graph.from_edges(5, example_edges)
        assert np.array_equal(g.adjacency, g.adjacency.T)
        assert g.edge_count == 5

    def test_directed_keeps_orientation(self):
        """Directed graphs keep only the given arcs."""
        g = Graph.from_edges(3, [(0, 1)], directed=True)
        assert g.adjacency[0, 1] == 1
        assert g.adjacency[1, 0] == 0

    def test_rejects_self_loop(self):
        """Self-loops are rejected."""
        with pytest.raises(ValueError, match="Self-loops"):
            Graph(np.eye(3, dtype=int))

    def test_rejects_asymmetric_undirected(self):
        """An asymmetric matrix cannot be an undirected graph."""
        adjacency = np.zeros((3, 3), dtype=int)
        adjacency[0, 1] = 1
        with pytest.raises(ValueError, match="symmetric"):
            Graph(adjacency)

    def test_rejects_non_binary(self):
        """Entries other than 0 and 1 are rejected."""
        adjacency = np.zeros((3, 3), dtype=int)
        adjacency[0, 1] = adjacency[1, 0] = 2
        with pytest.raises(ValueError, match="binary"):
            Graph(adjacency)

    def test_adjacency_is_read_only(self):
        """The stored adjacency cannot be mutated."""
        g = Graph.empty(3)
        with pytest.raises(ValueError):
            g.adjacency[0, 1] = 1

    def test_as_directed_doubles_arcs(self, example_edges):
        """The directed view holds both orientations of every edge."""
        g = Graph.from_edges(5, example_edges).as_directed()
        assert g.directed
        assert g.edge_count == 10

    def test_complete_graph_degrees(self):
        """Every unit of a complete graph has degree n - 1."""
        assert np.all(Graph.complete(4).degrees() == 3)


class TestDegree:
    """Test cases for degree and supergraph checks."""

    def test_degree_of_example_units(self, example_edges, example_treatments):
        """Degrees of the worked-example graph are (1, 2, 1, 2, 4)."""
        g = Graph.from_edges(5, example_edges)
        assert [degree(g, i) for i in range(5)] == example_treatments.tolist()

    def test_degree_out_of_range(self):
        """An out-of-range unit raises IndexError."""
        with pytest.raises(IndexError):
            degree(Graph.empty(3), 3)

    def test_edge_diff_returns_new_edges(self):
        """edge_diff keeps only the added edges."""
        g_minus = Graph.from_edges(4, [(0, 1)])
        g_plus = Graph.from_edges(4, [(0, 1), (2, 3)])
        diff = edge_diff(g_minus, g_plus)
        assert diff.edge_count == 1
        assert diff.adjacency[2, 3] == 1

    def test_edge_deletion_is_rejected(self):
        """Dropping an edge of G- raises a supergraph violation."""
        g_minus = Graph.from_edges(3, [(0, 1)])
        with pytest.raises(SupergraphViolationError):
            edge_diff(g_minus, Graph.empty(3))

    def test_size_mismatch(self):
        """Graphs on different unit counts are not comparable."""
        with pytest.raises(DimensionMismatchError):
            check_supergraph(Graph.empty(3), Graph.empty(4))

    def test_directedness_mismatch(self):
        """Graphs of different directedness are not comparable."""
        with pytest.raises(DimensionMismatchError):
            check_supergraph(Graph.empty(3), Graph.empty(3, directed=True))
