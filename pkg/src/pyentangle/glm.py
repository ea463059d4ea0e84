"""Logistic and Poisson regression by iteratively reweighted least squares."""

from dataclasses import dataclass, field
from typing import Callable, List, Tuple

import numpy as np
import scipy.linalg
from loguru import logger
from scipy.special import expit, xlogy

from .enums import (
    BOUNDARY_TOL,
    CHOLESKY_JITTER,
    GLM_MAX_ITER,
    GLM_TOL,
    SATURATION,
    SEPARATION_NORM,
)
from .exceptions import (
    ConvergenceError,
    DegenerateResponseError,
    DimensionMismatchError,
    RankDeficientError,
    SeparationError,
)


@dataclass(frozen=True, eq=False)
class GlmFit:
    """Result of an IRLS fit; coefficients are intercept first."""

    coefficients: np.ndarray
    converged: bool
    iterations: int
    deviance: float
    family: str
    deviance_trace: Tuple[float, ...] = field(default=())

    def linear_predictor(self, design: np.ndarray) -> np.ndarray:
        """X beta for a design laid out like the fitted one."""
        return np.asarray(design, dtype=float) @ self.coefficients

    def fitted(self, design: np.ndarray) -> np.ndarray:
        """Mean response on the response scale."""
        eta = self.linear_predictor(design)
        if self.family == "poisson":
            return np.exp(eta)
        return expit(eta)


@dataclass(frozen=True)
class _Family:
    name: str
    inverse_link: Callable[[np.ndarray], np.ndarray]
    variance: Callable[[np.ndarray], np.ndarray]
    deviance: Callable[[np.ndarray, np.ndarray], float]
    start: Callable[[np.ndarray], np.ndarray]
    link: Callable[[np.ndarray], np.ndarray]
    # |eta| past which the fitted mean sits on the boundary of its range
    eta_bound: float = np.inf


def _binomial_deviance(y: np.ndarray, mu: np.ndarray) -> float:
    return float(-2.0 * np.sum(xlogy(y, mu) + xlogy(1.0 - y, 1.0 - mu)))


def _poisson_deviance(y: np.ndarray, mu: np.ndarray) -> float:
    return float(2.0 * np.sum(xlogy(y, y) - xlogy(y, mu) - (y - mu)))


BINOMIAL = _Family(
    name="binomial",
    inverse_link=lambda eta: np.clip(expit(eta), SATURATION, 1.0 - SATURATION),
    variance=lambda mu: mu * (1.0 - mu),
    deviance=_binomial_deviance,
    start=lambda y: (y + 0.5) / 2.0,
    link=lambda mu: np.log(mu / (1.0 - mu)),
    eta_bound=float(np.log((1.0 - SATURATION) / SATURATION)),
)

POISSON = _Family(
    name="poisson",
    inverse_link=lambda eta: np.exp(np.minimum(eta, 700.0)),
    variance=lambda mu: mu,
    deviance=_poisson_deviance,
    start=lambda y: y + 0.1,
    link=np.log,
)


def add_intercept(covariates: np.ndarray) -> np.ndarray:
    """Prepend a column of ones to a covariate vector or matrix."""
    covariates = np.asarray(covariates, dtype=float)
    if covariates.ndim == 1:
        covariates = covariates[:, None]
    return np.column_stack([np.ones(covariates.shape[0]), covariates])


def _weighted_solve(design: np.ndarray, weights: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Solve the weighted normal equations by Cholesky, with jitter fallback."""
    gram = design.T @ (weights[:, None] * design)
    rhs = design.T @ (weights * z)
    try:
        factor = scipy.linalg.cho_factor(gram)
    except np.linalg.LinAlgError:
        scale = max(1.0, float(np.mean(np.diag(gram))))
        logger.debug("Weighted normal equations not positive definite; adding jitter")
        factor = scipy.linalg.cho_factor(
            gram + CHOLESKY_JITTER * scale * np.eye(gram.shape[0])
        )
    return scipy.linalg.cho_solve(factor, rhs)


def _validate(responses: np.ndarray, design: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    y = np.asarray(responses, dtype=float).ravel()
    X = np.asarray(design, dtype=float)
    if X.ndim != 2:
        raise ValueError("Design must be a 2-D matrix")
    if X.shape[0] != y.size:
        raise DimensionMismatchError(
            f"Design has {X.shape[0]} rows but there are {y.size} responses"
        )
    if X.shape[1] >= X.shape[0]:
        raise ValueError(f"Need more observations than coefficients, got {X.shape}")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise ValueError("Design and responses must be finite")
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise RankDeficientError(f"Design matrix of shape {X.shape} is rank deficient")
    return y, X


def _irls(
    y: np.ndarray, X: np.ndarray, family: _Family, max_iter: int, tol: float
) -> GlmFit:
    mu = family.start(y)
    eta = family.link(mu)
    beta = _weighted_solve(X, family.variance(mu), eta + (y - mu) / family.variance(mu))
    eta = X @ beta
    mu = family.inverse_link(eta)
    deviance = family.deviance(y, mu)
    trace: List[float] = [deviance]

    for iteration in range(1, max_iter + 1):
        weights = np.maximum(family.variance(mu), BOUNDARY_TOL)
        z = eta + (y - mu) / weights
        proposal = _weighted_solve(X, weights, z)

        # halve toward the previous iterate while the deviance goes up
        new_beta = proposal
        for _ in range(30):
            new_mu = family.inverse_link(X @ new_beta)
            new_deviance = family.deviance(y, new_mu)
            if new_deviance <= deviance + 1e-12 * max(1.0, abs(deviance)):
                break
            new_beta = (new_beta + beta) / 2.0
        else:
            new_mu = family.inverse_link(X @ new_beta)
            new_deviance = family.deviance(y, new_mu)

        new_eta = X @ new_beta
        if np.max(np.abs(new_eta)) > family.eta_bound:
            raise SeparationError(
                f"{family.name} fitted means saturate after {iteration} iterations; "
                "responses look separated"
            )
        if np.linalg.norm(new_beta) > SEPARATION_NORM:
            raise SeparationError(
                f"{family.name} coefficients diverged (norm "
                f"{np.linalg.norm(new_beta):.3g}); responses look separated"
            )

        change = float(np.max(np.abs(new_beta - beta)))
        beta, eta = new_beta, new_eta
        mu, deviance = new_mu, new_deviance
        trace.append(deviance)

        if change < tol:
            logger.trace(f"{family.name} IRLS converged in {iteration} iterations")
            return GlmFit(
                coefficients=beta,
                converged=True,
                iterations=iteration,
                deviance=deviance,
                family=family.name,
                deviance_trace=tuple(trace),
            )

    raise ConvergenceError(
        f"{family.name} IRLS did not converge in {max_iter} iterations"
    )


def fit_logistic(
    responses: np.ndarray,
    design: np.ndarray,
    max_iter: int = GLM_MAX_ITER,
    tol: float = GLM_TOL,
) -> GlmFit:
    """Logistic regression MLE.

    Args:
        responses: Binary N-vector
        design: N x p matrix including an intercept column
        max_iter: Iteration cap
        tol: Convergence threshold on the largest coefficient change

    Returns:
        Fitted coefficients with convergence diagnostics

    Raises:
        DegenerateResponseError: If all responses are equal
        SeparationError: If fitted probabilities saturate or the coefficient
            norm diverges
        RankDeficientError: If the design is rank deficient
    """
    y, X = _validate(responses, design)
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("Logistic responses must be binary")
    if y.min() == y.max():
        raise DegenerateResponseError(
            f"All {y.size} responses equal {int(y[0])}; logistic MLE does not exist"
        )
    return _irls(y, X, BINOMIAL, max_iter, tol)


def fit_poisson(
    counts: np.ndarray,
    design: np.ndarray,
    max_iter: int = GLM_MAX_ITER,
    tol: float = GLM_TOL,
) -> GlmFit:
    """Poisson regression MLE with log link.

    Args:
        counts: Non-negative integer N-vector
        design: N x p matrix including an intercept column
        max_iter: Iteration cap
        tol: Convergence threshold on the largest coefficient change

    Returns:
        Fitted coefficients with convergence diagnostics

    Raises:
        DegenerateResponseError: If all counts are zero
        SeparationError: If the coefficient norm diverges
        RankDeficientError: If the design is rank deficient
    """
    y, X = _validate(counts, design)
    if np.any(y < 0) or not np.all(np.equal(np.mod(y, 1), 0)):
        raise ValueError("Poisson responses must be non-negative integers")
    if not y.any():
        raise DegenerateResponseError("All counts are zero; the intercept diverges")
    return _irls(y, X, POISSON, max_iter, tol)
