"""Pytest configuration and shared fixtures."""

import tempfile

# Make sure the src directory is in the path for imports
import sys
from pathlib import Path

import numpy as np
import pytest

src_path = Path(__file__).parent.parent / "src"
if str(src_path) not in sys.path:
    sys.path.insert(0, str(src_path))

from pyentangle.graph import Graph  # noqa: E402
from pyentangle.netmodel import ProductExpSpec  # noqa: E402


@pytest.fixture
def temp_output_dir():
    """Create a temporary directory for test outputs."""
    with tempfile.TemporaryDirectory() as tmp_dir:
        yield Path(tmp_dir)


@pytest.fixture
def rng():
    """Seeded generator for tests that draw random data."""
    return np.random.default_rng(20240501)


@pytest.fixture
def example_covariates():
    """Unit covariates of the five-unit worked example."""
    return np.array([-5.0, -1.0, 0.0, 3.0, 10.0])


@pytest.fixture
def example_edges():
    """New edges of the worked example, 0-indexed."""
    return [(1, 4), (1, 3), (2, 4), (0, 4), (3, 4)]


@pytest.fixture
def example_treatments():
    """New degrees implied by the worked-example edges."""
    return np.array([1, 2, 1, 2, 4])


@pytest.fixture
def example_outcomes():
    """Observed outcomes of the worked example."""
    return np.array([0.0, 0.0, 1.0, 1.0, 0.0])


@pytest.fixture
def example_spec(example_covariates):
    """Product-exponential model expit(X_i X_j + 1) on the worked example."""
    return ProductExpSpec(covariates=example_covariates, intercept=1.0)


@pytest.fixture
def example_graphs(example_edges):
    """Empty G- and the observed G+ of the worked example."""
    return Graph.empty(5), Graph.from_edges(5, example_edges)


@pytest.fixture
def true_table_rows():
    """Published propensity rows of the worked example (two decimals)."""
    return np.array(
        [
            [0.00, 0.27, 0.73, 0.00, 0.00],
            [0.00, 0.24, 0.67, 0.09, 0.00],
            [0.01, 0.06, 0.23, 0.42, 0.28],
            [0.00, 0.24, 0.68, 0.09, 0.00],
            [0.00, 0.27, 0.73, 0.00, 0.00],
        ]
    )


@pytest.fixture
def poisson_table_rows():
    """Published Poisson-baseline propensity rows of the worked example."""
    return np.array(
        [
            [0.37, 0.37, 0.18, 0.06, 0.02],
            [0.24, 0.34, 0.25, 0.12, 0.04],
            [0.21, 0.33, 0.26, 0.13, 0.05],
            [0.13, 0.26, 0.27, 0.19, 0.10],
            [0.02, 0.08, 0.15, 0.20, 0.20],
        ]
    )
