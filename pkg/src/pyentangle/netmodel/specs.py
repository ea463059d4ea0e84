"""Edge-probability model specifications for the evolution G- -> G+."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import expit

from ..enums import ModelKind
from ..streams import SeedLike, as_generator


class NetworkModelSpec:
    """Common interface of the edge-probability models.

    Subclasses provide ``n``, ``directed`` and ``linear_predictor()``; the
    edge probability of dyad (i, j) is ``expit`` of the predictor.
    """

    kind: ModelKind
    directed: bool

    @property
    def n(self) -> int:  # pragma: no cover - overridden
        raise NotImplementedError

    def linear_predictor(self) -> np.ndarray:  # pragma: no cover - overridden
        raise NotImplementedError

    def edge_prob_matrix(self) -> np.ndarray:
        """Matrix of edge probabilities with a zero diagonal."""
        probs = expit(self.linear_predictor())
        np.fill_diagonal(probs, 0.0)
        return probs


def _frozen_array(values, ndim: int, name: str) -> np.ndarray:
    array = np.array(values, dtype=float, copy=True)
    if array.ndim == 1 and ndim == 2:
        array = array.reshape(-1, 1)
    if array.ndim != ndim:
        raise ValueError(f"{name} must have {ndim} dimension(s), got {array.ndim}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} must be finite")
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class InnerProductSpec(NetworkModelSpec):
    """P(g_ij = 1) = expit(a + b X_i^T X_j) with unit covariates X (N x d)."""

    a: float
    b: float
    covariates: np.ndarray
    tau: float = 1.0
    kind: ModelKind = field(default=ModelKind.INNER_PRODUCT, init=False)
    directed: bool = field(default=False, init=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "covariates", _frozen_array(self.covariates, 2, "covariates")
        )
        if self.covariates.shape[1] < 1:
            raise ValueError("Inner-product model needs d >= 1")
        if self.tau <= 0:
            raise ValueError("tau must be positive")

    @property
    def n(self) -> int:
        return int(self.covariates.shape[0])

    def linear_predictor(self) -> np.ndarray:
        return self.a + self.b * (self.covariates @ self.covariates.T)


@dataclass(frozen=True, eq=False)
class DyadicLogisticSpec(NetworkModelSpec):
    """P(g_ij = 1) = expit(a_i/2 + a_j/2 + b X_ij)."""

    node_effects: np.ndarray
    b: float
    dyadic_covariates: np.ndarray
    directed: bool = False
    kind: ModelKind = field(default=ModelKind.DYADIC_LOGISTIC, init=False)

    def __post_init__(self) -> None:
        effects = _frozen_array(self.node_effects, 1, "node_effects")
        covariates = _frozen_array(self.dyadic_covariates, 2, "dyadic_covariates")
        if covariates.shape != (effects.size, effects.size):
            raise ValueError(
                f"dyadic_covariates must be {effects.size}x{effects.size}, "
                f"got {covariates.shape}"
            )
        off_diagonal = ~np.eye(effects.size, dtype=bool)
        if not self.directed and not np.allclose(
            covariates[off_diagonal], covariates.T[off_diagonal]
        ):
            raise ValueError("Undirected model requires symmetric X_ij")
        object.__setattr__(self, "node_effects", effects)
        object.__setattr__(self, "dyadic_covariates", covariates)

    @property
    def n(self) -> int:
        return int(self.node_effects.size)

    def linear_predictor(self) -> np.ndarray:
        half = self.node_effects / 2.0
        return half[:, None] + half[None, :] + self.b * self.dyadic_covariates


@dataclass(frozen=True, eq=False)
class ProductExpSpec(NetworkModelSpec):
    """P(g_ij = 1) = expit(X_i X_j + intercept) with scalar unit covariates."""

    covariates: np.ndarray
    intercept: float = 1.0
    kind: ModelKind = field(default=ModelKind.PRODUCT_EXP, init=False)
    directed: bool = field(default=False, init=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "covariates", _frozen_array(self.covariates, 1, "covariates")
        )

    @property
    def n(self) -> int:
        return int(self.covariates.size)

    def linear_predictor(self) -> np.ndarray:
        return np.outer(self.covariates, self.covariates) + self.intercept


@dataclass(frozen=True, eq=False)
class NodeEffectFitSpec(NetworkModelSpec):
    """Fitted node-effect logistic model.

    Directed: expit(c + u_i + d X_ij). Undirected: expit(c + u_i + u_j + d X_ij).
    """

    intercept: float
    node_effects: np.ndarray
    d: float
    dyadic_covariates: np.ndarray
    directed: bool = True
    ridge_lambda: float = 0.1
    converged: bool = True
    iterations: int = 0
    gradient_norm: float = 0.0
    objective_trace: tuple = ()
    kind: ModelKind = field(default=ModelKind.NODE_EFFECT, init=False)

    def __post_init__(self) -> None:
        effects = _frozen_array(self.node_effects, 1, "node_effects")
        covariates = _frozen_array(self.dyadic_covariates, 2, "dyadic_covariates")
        if covariates.shape != (effects.size, effects.size):
            raise ValueError("dyadic_covariates must be N x N")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be non-negative")
        object.__setattr__(self, "node_effects", effects)
        object.__setattr__(self, "dyadic_covariates", covariates)

    @property
    def n(self) -> int:
        return int(self.node_effects.size)

    def linear_predictor(self) -> np.ndarray:
        u = self.node_effects
        receiver = 0.0 if self.directed else u[None, :]
        return self.intercept + u[:, None] + receiver + self.d * self.dyadic_covariates


def generate_inner_product_spec(
    n: int,
    d: int,
    a: float,
    b: float,
    tau: float = 1.0,
    rng: SeedLike = None,
    covariates: Optional[np.ndarray] = None,
) -> InnerProductSpec:
    """Draw X_i ~ N(0, tau^2 I_d) and return the inner-product model."""
    if tau <= 0:
        raise ValueError("tau must be positive for generation")
    if covariates is None:
        covariates = as_generator(rng).normal(0.0, tau, size=(n, d))
    return InnerProductSpec(a=a, b=b, covariates=covariates, tau=tau)
