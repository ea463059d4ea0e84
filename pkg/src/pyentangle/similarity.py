"""Agreement between propensity-score models.

Exact subclassification similarity maximizes the agreement of two
subclassifications over label permutations; the approximate similarity is
the absolute mean cosine between the gradients of two propensity models.
"""

from dataclasses import dataclass
from itertools import permutations
from typing import Callable, Dict, Mapping, Optional, Tuple, Union

import numpy as np
from loguru import logger
from numpy.polynomial.hermite import hermgauss
from scipy.optimize import linear_sum_assignment
from scipy.special import expit

from .enums import (
    BOUNDARY_TOL,
    DEFAULT_K,
    GRADIENT_STEP,
    HERMITE_NODES,
    ModelKind,
    SIGMA_STEP,
    SIMILARITY_SAMPLES,
    ZERO_GRADIENT,
)
from .exceptions import (
    CapacityError,
    DimensionMismatchError,
    NumericalBoundaryError,
    UndefinedSimilarityError,
)
from .streams import SeedLike, as_generator
from .subclass import Subclassification, quantile_subclassify

Evaluator = Callable[[np.ndarray], np.ndarray]
Sampler = Callable[[np.random.Generator, int], np.ndarray]

BRUTE_FORCE_MAX_K = 7
SAMPLE_CELLS = 2**20

_NODES, _WEIGHTS = hermgauss(HERMITE_NODES)


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Entry (k, l) counts units in class k under model m and class l under e."""

    counts: np.ndarray

    @classmethod
    def from_subclassifications(
        cls, sub_m: Subclassification, sub_e: Subclassification
    ) -> "ConfusionMatrix":
        if sub_m.n != sub_e.n:
            raise DimensionMismatchError(
                f"Subclassifications cover {sub_m.n} and {sub_e.n} units"
            )
        # unequal class counts are padded to square with empty classes
        size = max(sub_m.K, sub_e.K)
        counts = np.zeros((size, size), dtype=np.int64)
        np.add.at(counts, (sub_m.labels, sub_e.labels), 1)
        return cls(counts=counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def exact_similarity(sub_m: Subclassification, sub_e: Subclassification) -> float:
    """Largest fraction of units placed in matching classes over label permutations."""
    confusion = ConfusionMatrix.from_subclassifications(sub_m, sub_e)
    rows, cols = linear_sum_assignment(confusion.counts, maximize=True)
    return float(confusion.counts[rows, cols].sum() / confusion.total)


def brute_force_similarity(sub_m: Subclassification, sub_e: Subclassification) -> float:
    """Exact similarity by enumerating every permutation (K <= 7)."""
    confusion = ConfusionMatrix.from_subclassifications(sub_m, sub_e)
    size = confusion.counts.shape[0]
    if size > BRUTE_FORCE_MAX_K:
        raise CapacityError(f"Permutation search over K={size} classes is too large")
    orders = np.array(list(permutations(range(size))))
    traces = confusion.counts[np.arange(size), orders].sum(axis=1)
    return float(traces.max() / confusion.total)


@dataclass(frozen=True, eq=False)
class GradientField:
    """Gradients of a propensity model at sampled covariate points.

    Points whose gradient norm is zero are kept but excluded from every
    normalized average.
    """

    sample_points: np.ndarray
    gradients: np.ndarray
    method: str = "analytic"
    step: Optional[float] = None

    def __post_init__(self) -> None:
        points = np.atleast_2d(np.asarray(self.sample_points, dtype=float))
        gradients = np.atleast_2d(np.asarray(self.gradients, dtype=float))
        if points.shape != gradients.shape:
            raise DimensionMismatchError(
                f"Points {points.shape} and gradients {gradients.shape} differ"
            )
        if not (np.all(np.isfinite(points)) and np.all(np.isfinite(gradients))):
            raise ValueError("Gradient field entries must be finite")
        object.__setattr__(self, "sample_points", points)
        object.__setattr__(self, "gradients", gradients)

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.gradients, axis=1)

    @property
    def zero_mask(self) -> np.ndarray:
        return self.norms <= ZERO_GRADIENT

    @property
    def excluded(self) -> int:
        return int(self.zero_mask.sum())

    def normalized_mean(self) -> np.ndarray:
        """Mean of the unit gradients over the non-flat points.

        Raises:
            UndefinedSimilarityError: If every gradient is zero
        """
        keep = ~self.zero_mask
        if not keep.any():
            raise UndefinedSimilarityError("Every sampled gradient is zero")
        if self.excluded:
            logger.debug(f"Excluding {self.excluded} zero-gradient points")
        unit = self.gradients[keep] / self.norms[keep, None]
        return unit.mean(axis=0)


def central_difference(
    evaluator: Evaluator, points: np.ndarray
) -> Tuple[np.ndarray, float]:
    """Central-difference gradients with step 1e-5 * (1 + ||x||) per point."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    steps = GRADIENT_STEP * (1.0 + np.linalg.norm(points, axis=1))
    gradients = np.empty_like(points)
    for k in range(points.shape[1]):
        shift = np.zeros_like(points)
        shift[:, k] = steps
        upper = np.asarray(evaluator(points + shift), dtype=float)
        lower = np.asarray(evaluator(points - shift), dtype=float)
        gradients[:, k] = (upper - lower) / (2.0 * steps)
    return gradients, GRADIENT_STEP


def gradient_field(
    evaluator: Evaluator,
    points: np.ndarray,
    gradient: Optional[Evaluator] = None,
) -> GradientField:
    """Evaluate a model's gradient field, analytically when ``gradient`` is given."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if gradient is not None:
        return GradientField(points, gradient(points), method="analytic")
    gradients, step = central_difference(evaluator, points)
    return GradientField(points, gradients, method="central-difference", step=step)


def approx_similarity(field_m: GradientField, field_e: GradientField) -> float:
    """Absolute sample mean of pointwise gradient cosines.

    Raises:
        DimensionMismatchError: If the fields are not on the same sample
        UndefinedSimilarityError: If no point has two non-zero gradients
    """
    if field_m.sample_points.shape != field_e.sample_points.shape or not np.array_equal(
        field_m.sample_points, field_e.sample_points
    ):
        raise DimensionMismatchError("Gradient fields must share their sample points")
    keep = ~(field_m.zero_mask | field_e.zero_mask)
    excluded = int((~keep).sum())
    if not keep.any():
        raise UndefinedSimilarityError("Every sample point has a zero gradient")
    if excluded:
        logger.debug(f"Excluded {excluded} zero-gradient points from the cosine average")
    inner = np.sum(field_m.gradients[keep] * field_e.gradients[keep], axis=1)
    cosines = inner / (field_m.norms[keep] * field_e.norms[keep])
    return float(abs(cosines.mean()))


def linear_projection_similarity(beta: np.ndarray, nabla_e_bar: np.ndarray) -> float:
    """|beta' nabla| / ||beta|| for a linear-index model against a mean gradient."""
    beta = np.asarray(beta, dtype=float).ravel()
    nabla = np.asarray(nabla_e_bar, dtype=float).ravel()
    if beta.size != nabla.size:
        raise DimensionMismatchError(f"beta has {beta.size} entries, gradient {nabla.size}")
    norm = np.linalg.norm(beta)
    if norm == 0:
        raise ValueError("beta must be non-zero")
    return float(abs(beta @ nabla) / norm)


def expected_normalized_gradient(
    evaluator: Evaluator,
    sampler: Sampler,
    M: int,
    gradient: Optional[Evaluator] = None,
    rng: SeedLike = None,
) -> np.ndarray:
    """Monte-Carlo mean of grad g(X) / ||grad g(X)|| over M covariate draws.

    Args:
        evaluator: Vectorized model, (M, d) -> (M,)
        sampler: Draws an (M, d) covariate sample from a generator
        M: Number of draws
        gradient: Analytic gradient, (M, d) -> (M, d); central differences otherwise
        rng: Seed or generator

    Returns:
        Mean unit-gradient vector of length d
    """
    if M < 1:
        raise ValueError("Need at least one draw (M >= 1)")
    points = sampler(as_generator(rng), M)
    return gradient_field(evaluator, points, gradient).normalized_mean()


def linear_index_model(
    beta: np.ndarray, intercept: float = 0.0
) -> Tuple[Evaluator, Evaluator]:
    """Evaluator and analytic gradient of expit(intercept + x' beta)."""
    beta = np.asarray(beta, dtype=float).ravel()

    def evaluate(points: np.ndarray) -> np.ndarray:
        return expit(intercept + np.atleast_2d(points) @ beta)

    def grad(points: np.ndarray) -> np.ndarray:
        p = evaluate(points)
        return (p * (1.0 - p))[:, None] * beta[None, :]

    return evaluate, grad


def r_function(a, sigma):
    """r(a, sigma) = E expit(a + sigma Z), Z standard normal.

    Gauss-Hermite quadrature on 64 nodes; exactly expit(a) at sigma = 0.
    Broadcasts over array arguments.
    """
    a = np.asarray(a, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0):
        raise ValueError("sigma must be non-negative")
    a_b, sigma_b = np.broadcast_arrays(a, sigma)
    shifted = a_b[..., None] + np.sqrt(2.0) * sigma_b[..., None] * _NODES
    quadrature = expit(shifted) @ _WEIGHTS / np.sqrt(np.pi)
    value = np.where(sigma_b == 0, expit(a_b), quadrature)
    return float(value) if value.ndim == 0 else value


def r_sigma_derivative(a, sigma):
    """Partial derivative of r in sigma, E[expit'(a + sigma Z) Z], by quadrature."""
    a = np.asarray(a, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    a_b, sigma_b = np.broadcast_arrays(a, sigma)
    z = np.sqrt(2.0) * _NODES
    p = expit(a_b[..., None] + sigma_b[..., None] * z)
    value = (p * (1.0 - p) * z) @ _WEIGHTS / np.sqrt(np.pi)
    return float(value) if value.ndim == 0 else value


def r_monotonicity_sign(a: float, sigma: float, step: float = SIGMA_STEP) -> int:
    """Sign of the central-difference derivative of r in sigma."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if a == 0:
        raise ValueError("r is flat in sigma at a = 0")
    lower = max(0.0, sigma - step)
    slope = (r_function(a, sigma + step) - r_function(a, lower)) / (sigma + step - lower)
    return int(np.sign(slope))


def inner_product_propensity(
    a: float, b: float, tau: float, n: int
) -> Tuple[Evaluator, Evaluator]:
    """Expected new degree of a unit with covariate x under the inner-product model.

    With partners' covariates x_j ~ N(0, tau^2 I), the expectation is
    (n - 1) r(a, |b| tau ||x||), a function of ||x|| only.

    Returns:
        Evaluator and analytic gradient over (M, d) covariate points
    """
    scale = abs(b) * tau

    def evaluate(points: np.ndarray) -> np.ndarray:
        radius = np.linalg.norm(np.atleast_2d(points), axis=1)
        return (n - 1) * r_function(a, scale * radius)

    def grad(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        radius = np.linalg.norm(points, axis=1)
        slope = (n - 1) * scale * r_sigma_derivative(a, scale * radius)
        direction = np.divide(
            points, radius[:, None], out=np.zeros_like(points), where=radius[:, None] > 0
        )
        return slope[:, None] * direction

    return evaluate, grad


def dyadic_propensity(
    rows: np.ndarray, own_effect: float, partner_effects: np.ndarray, b: float
) -> np.ndarray:
    """P(at least one new edge) given a unit's dyadic covariate rows X_i.

    Args:
        rows: (M, n) draws of X_i over the unit's n partners
        own_effect: a_i
        partner_effects: a_j for the n partners
        b: Dyadic coefficient
    """
    half = own_effect / 2.0 + np.asarray(partner_effects) / 2.0
    p = expit(half + b * np.atleast_2d(rows))
    return 1.0 - np.prod(1.0 - p, axis=1)


def dyadic_gradient(
    rows: np.ndarray, own_effect: float, partner_effects: np.ndarray, b: float
) -> np.ndarray:
    """Analytic gradient of ``dyadic_propensity`` in X_i: b p_j prod_k (1 - p_k)."""
    half = own_effect / 2.0 + np.asarray(partner_effects) / 2.0
    p = expit(half + b * np.atleast_2d(rows))
    return b * p * np.prod(1.0 - p, axis=1, keepdims=True)


def _off_diagonal_rows(matrix: np.ndarray) -> np.ndarray:
    """(n, n - 1) matrix of each row with its diagonal entry removed."""
    n = matrix.shape[0]
    mask = ~np.eye(n, dtype=bool)
    return matrix[mask].reshape(n, n - 1)


def dyadic_similarity(
    a_effects: np.ndarray,
    b: float,
    sampler: Sampler,
    M: int,
    rng: SeedLike = None,
) -> float:
    """Similarity of the mean-covariate linear model with the dyadic model.

    Averages, over units, the cosine between the all-ones vector and the
    Monte-Carlo mean of expit(a_i/2 + a_j/2 + b X_ij) over the unit's partners.

    Args:
        a_effects: Node effects a_i
        b: Dyadic coefficient
        sampler: Draws a (size, n, n) stack of dyadic covariate matrices
        M: Number of covariate matrices
        rng: Seed or generator
    """
    if M < 1:
        raise ValueError("Need at least one draw (M >= 1)")
    effects = np.asarray(a_effects, dtype=float).ravel()
    n = effects.size
    if n < 2:
        raise ValueError("Dyadic similarity needs at least two units")
    generator = as_generator(rng)
    half = effects[:, None] / 2.0 + effects[None, :] / 2.0

    totals = np.zeros((n, n))
    block = max(1, SAMPLE_CELLS // (n * n))
    for start in range(0, M, block):
        size = min(block, M - start)
        totals += expit(half + b * sampler(generator, size)).sum(axis=0)
    means = _off_diagonal_rows(totals / M)

    cosines = means.sum(axis=1) / (np.sqrt(n - 1) * np.linalg.norm(means, axis=1))
    return float(abs(cosines.mean()))


def iid_dyadic_sampler(n: int, symmetric: bool = False) -> Sampler:
    """Sampler of (size, n, n) standard-normal dyadic covariates, zero diagonal."""

    def sample(rng: np.random.Generator, size: int) -> np.ndarray:
        draws = rng.standard_normal((size, n, n))
        if symmetric:
            upper = np.triu(draws, k=1)
            draws = upper + np.swapaxes(upper, 1, 2)
        draws[:, np.arange(n), np.arange(n)] = 0.0
        return draws

    return sample


def _expit_prime(eta: np.ndarray) -> np.ndarray:
    p = expit(eta)
    return p * (1.0 - p)


def moment_residual(
    beta: np.ndarray,
    e: Union[np.ndarray, Evaluator],
    X: np.ndarray,
    h: Callable[[np.ndarray], np.ndarray] = expit,
    h_prime: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> np.ndarray:
    """Empirical moment equation linking a true propensity e to h(x' beta).

    E[(e(X) / h) (h' / (1 - h)) X] - E[(h' / (1 - h)) X], with h and h'
    evaluated at X' beta.

    Raises:
        NumericalBoundaryError: If h(X' beta) is within 1e-12 of 0 or 1
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    beta = np.asarray(beta, dtype=float).ravel()
    eta = X @ beta
    hv = h(eta)
    if h_prime is None:
        if h is not expit:
            raise ValueError("h_prime is required for a custom link")
        h_prime = _expit_prime
    if np.any(hv <= BOUNDARY_TOL) or np.any(hv >= 1.0 - BOUNDARY_TOL):
        raise NumericalBoundaryError("h(X'beta) reached 0 or 1 on the sample")

    e_values = e(X) if callable(e) else np.asarray(e, dtype=float).ravel()
    if e_values.size != X.shape[0]:
        raise DimensionMismatchError(f"e has {e_values.size} values for {X.shape[0]} rows")
    weight = h_prime(eta) / (1.0 - hv)
    return np.mean(((e_values / hv - 1.0) * weight)[:, None] * X, axis=0)


_MODEL_ALIASES = {"dyadic": ModelKind.DYADIC_LOGISTIC.value}


@dataclass(frozen=True)
class SimilarityConfig:
    """Settings of a similarity report, read from a key-value file."""

    model: ModelKind = ModelKind.INNER_PRODUCT
    n: int = 100
    d: int = 3
    a: float = -1.0
    a_sd: float = 0.0
    b: float = 1.0
    tau: float = 1.0
    beta: Tuple[float, ...] = ()
    samples: int = SIMILARITY_SAMPLES
    classes: int = DEFAULT_K
    resamples: int = 1
    seed: int = 0

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> "SimilarityConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"Unknown similarity settings: {sorted(unknown)}")
        parsed: Dict[str, object] = {}
        for key, raw in values.items():
            if key == "model":
                parsed[key] = ModelKind(_MODEL_ALIASES.get(raw, raw))
            elif key == "beta":
                parsed[key] = tuple(float(v) for v in raw.split(",") if v.strip())
            elif key in ("n", "d", "samples", "classes", "resamples", "seed"):
                parsed[key] = int(raw)
            else:
                parsed[key] = float(raw)
        config = cls(**parsed)
        if config.model not in (ModelKind.INNER_PRODUCT, ModelKind.DYADIC_LOGISTIC):
            raise ValueError(f"No similarity report for model '{config.model.value}'")
        return config


def _inner_product_report(config: SimilarityConfig, rng: np.random.Generator) -> dict:
    beta = np.asarray(config.beta or np.ones(config.d), dtype=float)
    if beta.size != config.d:
        raise DimensionMismatchError(f"beta has {beta.size} entries for d={config.d}")
    true_model, true_grad = inner_product_propensity(
        config.a, config.b, config.tau, config.n
    )
    linear_model, linear_grad = linear_index_model(beta)

    def draw(generator: np.random.Generator, size: int) -> np.ndarray:
        return config.tau * generator.standard_normal((size, config.d))

    exact = []
    for _ in range(config.resamples):
        units = draw(rng, config.n)
        exact.append(
            exact_similarity(
                quantile_subclassify(linear_model(units), config.classes),
                quantile_subclassify(true_model(units), config.classes),
            )
        )

    points = draw(rng, config.samples)
    field_e = gradient_field(true_model, points, true_grad)
    field_m = gradient_field(linear_model, points, linear_grad)
    return {
        "exact": float(np.mean(exact)),
        "approx": approx_similarity(field_m, field_e),
        "projection": linear_projection_similarity(beta, field_e.normalized_mean()),
        "samples": config.samples,
        "excluded_zero_gradients": int((field_m.zero_mask | field_e.zero_mask).sum()),
    }


def _dyadic_report(config: SimilarityConfig, rng: np.random.Generator) -> dict:
    n = config.n
    effects = config.a + config.a_sd * rng.standard_normal(n)
    sampler = iid_dyadic_sampler(n)

    exact = []
    for _ in range(config.resamples):
        X = sampler(rng, 1)[0]
        rows = _off_diagonal_rows(X)
        true_scores = np.array(
            [
                dyadic_propensity(rows[i], effects[i], np.delete(effects, i), config.b)[0]
                for i in range(n)
            ]
        )
        exact.append(
            exact_similarity(
                quantile_subclassify(rows.mean(axis=1), config.classes),
                quantile_subclassify(true_scores, config.classes),
            )
        )

    # per-unit mean unit-gradient projected on the all-ones direction
    projections, excluded = [], 0
    for i in range(n):
        rows = rng.standard_normal((config.samples, n - 1))
        field = GradientField(
            rows,
            dyadic_gradient(rows, effects[i], np.delete(effects, i), config.b),
        )
        excluded += field.excluded
        projections.append(
            linear_projection_similarity(np.ones(n - 1), field.normalized_mean())
        )

    return {
        "exact": float(np.mean(exact)),
        "approx": dyadic_similarity(effects, config.b, sampler, config.samples, rng),
        "projection": float(np.mean(projections)),
        "samples": config.samples,
        "excluded_zero_gradients": excluded,
    }


def similarity_report(config: SimilarityConfig, rng: SeedLike = None) -> dict:
    """Similarities of a linear model against ``config.model``.

    The exact similarity averages the conditional similarity over
    ``config.resamples`` covariate draws of ``config.n`` units.

    Returns:
        ``{exact, approx, projection, samples, excluded_zero_gradients}``
    """
    generator = as_generator(config.seed if rng is None else rng)
    logger.info(
        f"Similarity report for the {config.model.value} model "
        f"(n={config.n}, M={config.samples}, K={config.classes})"
    )
    if config.model is ModelKind.INNER_PRODUCT:
        return _inner_product_report(config, generator)
    return _dyadic_report(config, generator)
