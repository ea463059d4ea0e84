"""Treatment definitions Z_i = f_i(G-, G+) and entanglement constraints."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .enums import ConstraintKind, TreatmentKind
from .exceptions import DimensionMismatchError
from .graph import Graph, edge_diff


@dataclass(frozen=True)
class TreatmentDef:
    """Degree-based treatment definition.

    ``NEW_DEGREE`` is d_i(G+) - d_i(G-); ``AT_LEAST_ONE`` and ``MORE_THAN``
    threshold it; ``NEIGHBORHOOD_GREW`` flags any new incident edge, in
    either direction for directed graphs.
    """

    kind: TreatmentKind
    threshold: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", TreatmentKind(self.kind))
        if self.kind is TreatmentKind.MORE_THAN and self.threshold < 0:
            raise ValueError("more_than threshold must be non-negative")

    @classmethod
    def new_degree(cls) -> "TreatmentDef":
        return cls(TreatmentKind.NEW_DEGREE)

    @classmethod
    def at_least_one(cls) -> "TreatmentDef":
        return cls(TreatmentKind.AT_LEAST_ONE)

    @classmethod
    def more_than(cls, k: int) -> "TreatmentDef":
        return cls(TreatmentKind.MORE_THAN, int(k))

    @classmethod
    def neighborhood_grew(cls) -> "TreatmentDef":
        return cls(TreatmentKind.NEIGHBORHOOD_GREW)

    @classmethod
    def from_tag(cls, tag: str) -> "TreatmentDef":
        """Parse a config tag such as ``at_least_one`` or ``more_than:10``."""
        name, _, argument = tag.strip().partition(":")
        try:
            kind = TreatmentKind(name.strip())
        except ValueError:
            valid = ", ".join(k.value for k in TreatmentKind)
            raise ValueError(f"Unknown treatment '{tag}' (expected one of: {valid})")
        if kind is TreatmentKind.MORE_THAN:
            if not argument:
                raise ValueError("more_than needs a threshold, e.g. more_than:10")
            return cls.more_than(int(argument))
        if argument:
            raise ValueError(f"Treatment '{name}' takes no argument")
        return cls(kind)

    @property
    def tag(self) -> str:
        if self.kind is TreatmentKind.MORE_THAN:
            return f"{self.kind.value}:{self.threshold}"
        return self.kind.value

    @property
    def is_binary(self) -> bool:
        return self.kind is not TreatmentKind.NEW_DEGREE

    def counts_both_endpoints(self, directed: bool) -> bool:
        """Whether a new arc i->j counts toward j's statistic as well as i's."""
        return not directed or self.kind is TreatmentKind.NEIGHBORHOOD_GREW

    def max_level(self, n: int) -> int:
        """Largest attainable treatment level on ``n`` units."""
        return n - 1 if self.kind is TreatmentKind.NEW_DEGREE else 1

    def levels(self, statistic: np.ndarray) -> np.ndarray:
        """Map new-edge counts to treatment levels."""
        statistic = np.asarray(statistic)
        if self.kind is TreatmentKind.NEW_DEGREE:
            return statistic.astype(np.int64)
        if self.kind is TreatmentKind.MORE_THAN:
            return (statistic > self.threshold).astype(np.int64)
        return (statistic > 0).astype(np.int64)

    def level_distribution(self, pmf: np.ndarray) -> np.ndarray:
        """Collapse per-unit count pmfs (rows) into treatment-level pmfs."""
        pmf = np.atleast_2d(pmf)
        if self.kind is TreatmentKind.NEW_DEGREE:
            return pmf
        cut = self.threshold + 1 if self.kind is TreatmentKind.MORE_THAN else 1
        below = pmf[:, :cut].sum(axis=1)
        above = pmf[:, cut:].sum(axis=1)
        return np.column_stack([below, above])


def new_edge_statistic(
    diff: np.ndarray, directed: bool, both_endpoints: bool
) -> np.ndarray:
    """Per-unit count of new edges from a new-edge indicator array (..., n, n)."""
    diff = np.asarray(diff, dtype=np.int64)
    counts = diff.sum(axis=-1)
    if directed and both_endpoints:
        counts = counts + diff.sum(axis=-2)
    return counts


def apply_treatment(definition: TreatmentDef, g_minus: Graph, g_plus: Graph) -> np.ndarray:
    """Compute Z_i = f_i(G-, G+) for every unit.

    Raises:
        SupergraphViolationError: If G+ drops an edge of G-
    """
    diff = edge_diff(g_minus, g_plus)
    statistic = new_edge_statistic(
        diff.adjacency, diff.directed, definition.counts_both_endpoints(diff.directed)
    )
    return definition.levels(statistic)


@dataclass(frozen=True)
class EntanglementConstraint:
    """Constraint L(Z) = 0 tying the units' treatments together.

    ``DEGREE_DIFF``: Z - (G+ - G-) 1. ``FIXED_TOTAL``: Z^T 1 - n p.
    """

    kind: ConstraintKind
    n: Optional[int] = None
    p: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ConstraintKind(self.kind))
        if self.kind is ConstraintKind.FIXED_TOTAL and (self.n is None or self.p is None):
            raise ValueError("fixed_total constraint needs n and p")

    @classmethod
    def degree_diff(cls) -> "EntanglementConstraint":
        return cls(ConstraintKind.DEGREE_DIFF)

    @classmethod
    def fixed_total(cls, n: int, p: float) -> "EntanglementConstraint":
        return cls(ConstraintKind.FIXED_TOTAL, n=n, p=p)


def constraint_residual(
    constraint: EntanglementConstraint,
    Z: np.ndarray,
    g_minus: Optional[Graph] = None,
    g_plus: Optional[Graph] = None,
) -> np.ndarray:
    """Residual of L(Z); an all-zero residual certifies the constraint."""
    Z = np.asarray(Z, dtype=float).ravel()
    if constraint.kind is ConstraintKind.FIXED_TOTAL:
        if Z.size != constraint.n:
            raise DimensionMismatchError(
                f"Constraint is for {constraint.n} units, Z has {Z.size}"
            )
        return np.array([Z.sum() - constraint.n * constraint.p])

    if g_minus is None or g_plus is None:
        raise ValueError("degree_diff constraint needs both graphs")
    diff = edge_diff(g_minus, g_plus)
    if Z.size != diff.n:
        raise DimensionMismatchError(f"Graphs have {diff.n} units, Z has {Z.size}")
    return Z - diff.adjacency.sum(axis=1)


def is_satisfied(residual: np.ndarray, atol: float = 0.0) -> bool:
    """True when every residual component is zero (within ``atol``)."""
    return bool(np.all(np.abs(residual) <= atol))
