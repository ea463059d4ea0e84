"""Subclassification on propensity scores and within-class effect estimates."""

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.stats import rankdata

from .enums import DEFAULT_K, KMEANS_MAX_ITER, KMEANS_RESTARTS
from .exceptions import (
    DimensionMismatchError,
    EstimationImpossibleError,
    OneArmedClassError,
)
from .propensity import PropensityTable
from .streams import SeedLike, as_seed_sequence, derive_rng


@dataclass(frozen=True, eq=False)
class Subclassification:
    """Class labels R_ik for N units over K classes."""

    labels: np.ndarray
    K: int

    def __post_init__(self) -> None:
        labels = np.array(self.labels, dtype=np.int64, copy=True).ravel()
        if self.K < 1:
            raise ValueError("Need at least one class")
        if labels.size and (labels.min() < 0 or labels.max() >= self.K):
            raise ValueError(f"Labels must lie in 0..{self.K - 1}")
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "K", int(self.K))

    @classmethod
    def from_sets(cls, n: int, members: Iterable[int]) -> "Subclassification":
        """Two classes: ``members`` in class 0, every other unit in class 1."""
        labels = np.ones(n, dtype=np.int64)
        index = np.asarray(list(members), dtype=np.int64)
        if index.size and (index.min() < 0 or index.max() >= n):
            raise IndexError(f"Set members must lie in 0..{n - 1}")
        labels[index] = 0
        return cls(labels=labels, K=2)

    @property
    def n(self) -> int:
        return int(self.labels.size)

    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.K)

    def empty_classes(self) -> List[int]:
        return [int(k) for k in np.flatnonzero(self.class_sizes() == 0)]

    def members(self, k: int) -> np.ndarray:
        if not 0 <= k < self.K:
            raise IndexError(f"Class {k} outside 0..{self.K - 1}")
        return np.flatnonzero(self.labels == k)

    def to_csv(self) -> str:
        lines = ["unit,label"] + [f"{i},{label}" for i, label in enumerate(self.labels)]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class EffectEstimate:
    """Size-weighted combination of within-class effects.

    ``per_class`` holds NaN for dropped (one-armed or empty) classes.
    """

    value: float
    per_class: np.ndarray
    class_sizes: np.ndarray
    dropped_classes: List[int] = field(default_factory=list)


def _flag_empty(sub: Subclassification) -> Subclassification:
    empty = sub.empty_classes()
    if empty:
        logger.warning(f"Subclassification has empty classes: {empty}")
    return sub


def quantile_subclassify(scores: np.ndarray, K: int = DEFAULT_K) -> Subclassification:
    """Assign units to K successive quantile bins of their scores.

    Bins are computed on min-ranks, so tied scores always share a bin and the
    labels depend on the scores only through their order.

    Raises:
        ValueError: If K > N, K < 1 or a score is not finite
    """
    values = np.asarray(scores, dtype=float).ravel()
    n = values.size
    if K < 1:
        raise ValueError("Need at least one class")
    if K > n:
        raise ValueError(f"Cannot form {K} classes from {n} units")
    if not np.all(np.isfinite(values)):
        raise ValueError("Scores must be finite")
    ranks = rankdata(values, method="min").astype(np.int64) - 1
    return _flag_empty(Subclassification(labels=ranks * K // n, K=K))


def _kmeans_pp_seed(points: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((K, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    closest = np.sum((points - centers[0]) ** 2, axis=1)
    for k in range(1, K):
        total = closest.sum()
        if total > 0:
            index = rng.choice(n, p=closest / total)
        else:
            index = rng.integers(n)
        centers[k] = points[index]
        closest = np.minimum(closest, np.sum((points - centers[k]) ** 2, axis=1))
    return centers


def _lloyd(
    points: np.ndarray, centers: np.ndarray, max_iter: int
) -> Tuple[np.ndarray, float]:
    labels = np.full(points.shape[0], -1)
    for _ in range(max_iter):
        distances = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(distances, axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for k in range(centers.shape[0]):
            assigned = points[labels == k]
            # an empty cluster keeps its previous centroid
            if assigned.size:
                centers[k] = assigned.mean(axis=0)
    inertia = float(np.sum((points - centers[labels]) ** 2))
    return labels, inertia


def kmeans_subclassify(
    points: np.ndarray,
    K: int = DEFAULT_K,
    rng: SeedLike = None,
    restarts: int = KMEANS_RESTARTS,
    max_iter: int = KMEANS_MAX_ITER,
) -> Subclassification:
    """k-means (k-means++ seeding, Lloyd iterations) with restarts.

    Restart ``r`` draws from the stream derived from (seed, r); the partition
    with the smallest within-cluster sum of squares wins, ties going to the
    earliest restart.

    Args:
        points: N x d matrix, typically (e(m-1, X_i), e(m, X_i))
        K: Number of clusters
        rng: Seed or generator
        restarts: Number of independent initializations
        max_iter: Lloyd iteration cap per restart

    Returns:
        Cluster labels as a subclassification
    """
    data = np.asarray(points, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    n = data.shape[0]
    if K < 1:
        raise ValueError("Need at least one class")
    if K > n:
        raise ValueError(f"Cannot form {K} clusters from {n} points")

    seed = as_seed_sequence(rng)
    best: Optional[Tuple[np.ndarray, float]] = None
    for restart in range(max(1, restarts)):
        stream = derive_rng(seed, restart)
        labels, inertia = _lloyd(data, _kmeans_pp_seed(data, K, stream), max_iter)
        if best is None or inertia < best[1]:
            best = (labels, inertia)

    labels, inertia = best
    logger.debug(f"k-means with K={K}: best within-cluster SS {inertia:.6g}")
    return _flag_empty(Subclassification(labels=labels, K=K))


def subclassify_pairs(
    table: PropensityTable, m: int, K: int = DEFAULT_K, rng: SeedLike = None
) -> Subclassification:
    """Cluster units on their (e(m-1, X_i), e(m, X_i)) propensity pairs."""
    return kmeans_subclassify(table.pair_points(m), K=K, rng=rng)


def _check_lengths(sub: Subclassification, *vectors: np.ndarray) -> None:
    for vector in vectors:
        if vector.size != sub.n:
            raise DimensionMismatchError(
                f"Subclassification covers {sub.n} units, got a vector of {vector.size}"
            )


def within_class_effect(
    k: int, sub: Subclassification, Z: np.ndarray, Y: np.ndarray
) -> float:
    """Difference of treated and control outcome means within class k.

    Raises:
        OneArmedClassError: If class k lacks treated or control units
    """
    treated, outcomes = np.asarray(Z).ravel(), np.asarray(Y, dtype=float).ravel()
    _check_lengths(sub, treated, outcomes)
    members = sub.members(k)
    arm = treated[members] == 1
    if arm.all() or not arm.any():
        raise OneArmedClassError(
            f"Class {k} has {int(arm.sum())} treated and {int((~arm).sum())} control units"
        )
    return float(outcomes[members][arm].mean() - outcomes[members][~arm].mean())


def combined_effect(sub: Subclassification, Z: np.ndarray, Y: np.ndarray) -> EffectEstimate:
    """Size-weighted average of within-class effects.

    One-armed and empty classes are dropped and the weights renormalized over
    the retained units.

    Raises:
        EstimationImpossibleError: If no class has both arms
    """
    sizes = sub.class_sizes()
    per_class = np.full(sub.K, np.nan)
    dropped: List[int] = []
    for k in range(sub.K):
        try:
            per_class[k] = within_class_effect(k, sub, Z, Y)
        except OneArmedClassError:
            dropped.append(k)

    kept = ~np.isnan(per_class)
    if not kept.any():
        raise EstimationImpossibleError("Every class is one-armed")
    if dropped:
        logger.debug(f"Dropped one-armed classes {dropped}")
    value = float(np.sum(sizes[kept] * per_class[kept]) / sizes[kept].sum())
    return EffectEstimate(
        value=value, per_class=per_class, class_sizes=sizes, dropped_classes=dropped
    )


def level_contrast_effect(
    sub: Subclassification, Z: np.ndarray, Y: np.ndarray, m: int
) -> float:
    """Contrast Ave(Y | Z=m) - Ave(Y | Z=m-1), within classes then size-weighted.

    Units with other treatment levels keep their class but do not enter the
    contrast; class weights count the eligible units only.

    Raises:
        EstimationImpossibleError: If no class contains both levels
    """
    levels, outcomes = np.asarray(Z).ravel(), np.asarray(Y, dtype=float).ravel()
    _check_lengths(sub, levels, outcomes)
    total, weight = 0.0, 0
    for k in range(sub.K):
        members = sub.members(k)
        upper = members[levels[members] == m]
        lower = members[levels[members] == m - 1]
        if upper.size == 0 or lower.size == 0:
            continue
        eligible = upper.size + lower.size
        total += eligible * (outcomes[upper].mean() - outcomes[lower].mean())
        weight += eligible
    if weight == 0:
        raise EstimationImpossibleError(f"No class contains both levels {m - 1} and {m}")
    return float(total / weight)
