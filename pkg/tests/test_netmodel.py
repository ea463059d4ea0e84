"""Tests for network models, conditional sampling and the node-effect fit."""

import numpy as np
import pytest
from scipy.special import expit

from pyentangle.enums import ModelKind
from pyentangle.exceptions import (
    DimensionMismatchError,
    FitError,
    SupergraphViolationError,
)
from pyentangle.graph import Graph
from pyentangle.netmodel import (
    DyadicLogisticSpec,
    InnerProductSpec,
    NodeEffectFitSpec,
    ProductExpSpec,
    edge_prob,
    fit_node_effect_model,
    generate_inner_product_spec,
    log_likelihood,
    model_list,
    sample_new_edges,
    sample_posttreatment,
)


class TestSpecs:
    """Test cases for edge-probability specifications."""

    def test_product_exp_edge_prob(self, example_spec):
        """Units 1 and 2 of the worked example connect with expit(6)."""
        assert edge_prob(example_spec, 0, 1) == pytest.approx(expit(6.0))

    def test_edge_prob_is_symmetric_for_undirected(self, example_spec):
        """Undirected models give p_ij = p_ji."""
        probs = example_spec.edge_prob_matrix()
        assert np.allclose(probs, probs.T)
        assert np.all(np.diag(probs) == 0)

    def test_edge_prob_self_loop(self, example_spec):
        """A self-loop has no edge probability."""
        with pytest.raises(ValueError):
            edge_prob(example_spec, 2, 2)

    def test_edge_prob_out_of_range(self, example_spec):
        """Out-of-range units raise IndexError."""
        with pytest.raises(IndexError):
            edge_prob(example_spec, 0, 5)

    def test_dyadic_predictor(self):
        """The dyadic model splits node effects over both endpoints."""
        X = np.array([[0.0, 1.0], [1.0, 0.0]])
        spec = DyadicLogisticSpec(node_effects=[-2.0, -4.0], b=0.5, dyadic_covariates=X)
        assert edge_prob(spec, 0, 1) == pytest.approx(expit(-1.0 - 2.0 + 0.5))

    def test_dyadic_undirected_needs_symmetric_covariates(self):
        """An undirected dyadic model rejects asymmetric X."""
        X = np.array([[0.0, 1.0], [2.0, 0.0]])
        with pytest.raises(ValueError, match="symmetric"):
            DyadicLogisticSpec(node_effects=[0.0, 0.0], b=1.0, dyadic_covariates=X)

    def test_inner_product_generation_is_seeded(self):
        """The same seed draws the same covariates."""
        first = generate_inner_product_spec(10, 3, a=-1.0, b=1.0, rng=5)
        second = generate_inner_product_spec(10, 3, a=-1.0, b=1.0, rng=5)
        assert isinstance(first, InnerProductSpec)
        assert first.covariates.shape == (10, 3)
        assert np.array_equal(first.covariates, second.covariates)

    def test_node_effect_directed_predictor(self):
        """Directed node-effect models use sender effects only."""
        spec = NodeEffectFitSpec(
            intercept=-1.0,
            node_effects=[0.5, -0.5, 0.0],
            d=2.0,
            dyadic_covariates=np.ones((3, 3)),
        )
        assert edge_prob(spec, 0, 1) == pytest.approx(expit(-1.0 + 0.5 + 2.0))
        assert edge_prob(spec, 1, 0) == pytest.approx(expit(-1.0 - 0.5 + 2.0))

    def test_registry_covers_every_model(self):
        """Every model kind has a spec class."""
        assert set(model_list) == set(ModelKind)


class TestSampling:
    """Test cases for conditional sampling of G+."""

    def test_existing_edges_persist(self, rng):
        """Edges of G- are kept in every draw."""
        spec = ProductExpSpec(covariates=np.zeros(4), intercept=-1000.0)
        g_minus = Graph.from_edges(4, [(0, 1), (2, 3)])
        g_plus = sample_posttreatment(spec, g_minus, rng)
        assert np.array_equal(g_plus.adjacency, g_minus.adjacency)

    def test_undirected_draws_are_symmetric(self, rng):
        """Undirected models produce symmetric new-edge sets."""
        spec = ProductExpSpec(covariates=np.zeros(6), intercept=0.0)
        draws = sample_new_edges(spec, Graph.empty(6), 50, rng)
        assert np.array_equal(draws, np.swapaxes(draws, 1, 2))
        assert not draws[:, np.arange(6), np.arange(6)].any()

    def test_edge_frequency_matches_probability(self, rng):
        """New-edge frequencies converge to the edge probabilities."""
        spec = ProductExpSpec(covariates=np.zeros(5), intercept=0.0)
        draws = sample_new_edges(spec, Graph.empty(5), 4000, rng)
        frequency = draws.mean(axis=0)
        off_diagonal = ~np.eye(5, dtype=bool)
        assert np.allclose(frequency[off_diagonal], 0.5, atol=0.04)

    def test_directed_model_extends_undirected_base(self, rng):
        """A directed model keeps both arcs of an undirected G- edge."""
        spec = DyadicLogisticSpec(
            node_effects=np.full(3, -2000.0),
            b=0.0,
            dyadic_covariates=np.zeros((3, 3)),
            directed=True,
        )
        g_plus = sample_posttreatment(spec, Graph.from_edges(3, [(0, 1)]), rng)
        assert g_plus.directed
        assert g_plus.adjacency[0, 1] == 1 and g_plus.adjacency[1, 0] == 1

    def test_undirected_model_rejects_directed_base(self, rng):
        """An undirected model cannot extend a directed G-."""
        spec = ProductExpSpec(covariates=np.zeros(3))
        with pytest.raises(DimensionMismatchError):
            sample_posttreatment(spec, Graph.empty(3, directed=True), rng)

    def test_size_mismatch(self, rng, example_spec):
        """G- must have as many units as the model."""
        with pytest.raises(DimensionMismatchError):
            sample_posttreatment(example_spec, Graph.empty(4), rng)

    def test_sampling_is_reproducible(self, example_spec):
        """Equal seeds give equal graphs."""
        first = sample_posttreatment(example_spec, Graph.empty(5), 11)
        second = sample_posttreatment(example_spec, Graph.empty(5), 11)
        assert np.array_equal(first.adjacency, second.adjacency)


class TestLogLikelihood:
    """Test cases for the Bernoulli log-likelihood."""

    def test_matches_direct_sum(self, example_spec, example_graphs):
        """The likelihood sums each unordered dyad once."""
        g_minus, g_plus = example_graphs
        probs = example_spec.edge_prob_matrix()
        expected = 0.0
        for i in range(5):
            for j in range(i + 1, 5):
                p = probs[i, j]
                expected += np.log(p) if g_plus.adjacency[i, j] else np.log1p(-p)
        assert log_likelihood(example_spec, g_plus, g_minus) == pytest.approx(expected)

    def test_rejects_edge_deletion(self, example_spec, example_graphs):
        """G+ must contain G-."""
        _, g_plus = example_graphs
        with pytest.raises(SupergraphViolationError):
            log_likelihood(example_spec, Graph.empty(5), g_plus)


class TestNodeEffectFit:
    """Test cases for the penalized node-effect fit."""

    @pytest.fixture
    def simulated(self, rng):
        """Directed graph drawn from a known node-effect model."""
        n = 60
        X = rng.standard_normal((n, n))
        np.fill_diagonal(X, 0.0)
        truth = NodeEffectFitSpec(
            intercept=-2.0,
            node_effects=rng.normal(0.0, 0.5, n),
            d=1.0,
            dyadic_covariates=X,
        )
        g_plus = sample_posttreatment(truth, Graph.empty(n, directed=True), rng)
        return truth, g_plus, X

    def test_recovers_dyadic_coefficient(self, simulated):
        """The dyadic coefficient is recovered from one graph."""
        truth, g_plus, X = simulated
        fit = fit_node_effect_model(g_plus, X)
        assert fit.converged
        assert fit.d == pytest.approx(truth.d, abs=0.2)
        assert fit.n == truth.n

    def test_objective_never_decreases(self, simulated):
        """Damped Newton steps never lower the penalized likelihood."""
        _, g_plus, X = simulated
        trace = np.array(fit_node_effect_model(g_plus, X).objective_trace)
        assert np.all(np.diff(trace) >= -1e-9 * np.abs(trace[:-1]).clip(1.0))

    def test_ridge_shrinks_node_effects(self, simulated):
        """A heavier ridge penalty gives smaller node effects."""
        _, g_plus, X = simulated
        light = fit_node_effect_model(g_plus, X, ridge_lambda=0.1)
        heavy = fit_node_effect_model(g_plus, X, ridge_lambda=50.0)
        assert np.linalg.norm(heavy.node_effects) < np.linalg.norm(light.node_effects)

    def test_iteration_cap_raises_fit_error(self, simulated):
        """Running out of iterations raises FitError with the last iterate."""
        _, g_plus, X = simulated
        with pytest.raises(FitError) as excinfo:
            fit_node_effect_model(g_plus, X, max_iter=1)
        assert excinfo.value.last_iterate.shape == (X.shape[0] + 2,)
        assert excinfo.value.iterations == 1

    def test_too_few_units(self):
        """At least three units are needed."""
        with pytest.raises(ValueError):
            fit_node_effect_model(Graph.empty(2, directed=True), np.zeros((2, 2)))

    def test_covariate_shape_mismatch(self):
        """X must be N x N."""
        with pytest.raises(DimensionMismatchError):
            fit_node_effect_model(Graph.empty(4, directed=True), np.zeros((3, 3)))
