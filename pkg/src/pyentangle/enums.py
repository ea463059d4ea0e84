"""Constants used throughout the pyentangle package."""

from enum import Enum


class TreatmentKind(str, Enum):
    """Treatment definitions Z_i = f_i(G-, G+)."""

    NEW_DEGREE = "new_degree"
    AT_LEAST_ONE = "at_least_one"
    MORE_THAN = "more_than"
    NEIGHBORHOOD_GREW = "neighborhood_grew"


class ConstraintKind(str, Enum):
    """Entanglement constraints L(Z) = 0."""

    DEGREE_DIFF = "degree_diff"
    FIXED_TOTAL = "fixed_total"


class ModelKind(str, Enum):
    """Edge-probability model families."""

    INNER_PRODUCT = "inner_product"
    DYADIC_LOGISTIC = "dyadic_logistic"
    PRODUCT_EXP = "product_exp"
    NODE_EFFECT = "node_effect"


class Scenario(str, Enum):
    """Simulation scenarios."""

    SMALL_EXAMPLE = "small_example"
    SYM_ONE_FRIEND = "sym_one_friend"
    MULTI_FRIEND = "multi_friend"
    ASYM_PROB_ENT = "asym_prob_ent"


class Estimator(str, Enum):
    """Propensity models feeding the subclassification estimator."""

    TRUE = "true"
    MISSPECIFIED = "misspecified"
    RANDOM_EFFECT = "random_effect"


class Tolerance(float, Enum):
    """Numerical tolerances."""

    GLM_STEP = 1e-10
    GLM_SEPARATION_NORM = 1e3
    GLM_SATURATION = 1e-10
    CHOLESKY_JITTER = 1e-12
    NEWTON_GRADIENT = 1e-8
    ROW_SUM = 1e-9
    PROBABILITY_BOUNDARY = 1e-12
    GRADIENT_STEP = 1e-5
    SIGMA_STEP = 1e-4
    ZERO_GRADIENT = 1e-300


class Defaults(int, Enum):
    """Default sizes and iteration caps."""

    GLM_MAX_ITER = 100
    NEWTON_MAX_ITER = 200
    KMEANS_RESTARTS = 20
    KMEANS_MAX_ITER = 300
    CLASSES = 5
    DRAWS = 10_000
    EXPERIMENT_DRAWS = 500
    UNITS = 100
    SIMULATIONS = 500
    FULL_SIMULATIONS = 5000
    HERMITE_NODES = 64
    MAX_FREE_DYADS = 24
    SIMILARITY_SAMPLES = 10_000


GLM_TOL = Tolerance.GLM_STEP.value
SEPARATION_NORM = Tolerance.GLM_SEPARATION_NORM.value
SATURATION = Tolerance.GLM_SATURATION.value
CHOLESKY_JITTER = Tolerance.CHOLESKY_JITTER.value
NEWTON_TOL = Tolerance.NEWTON_GRADIENT.value
ROW_SUM_TOL = Tolerance.ROW_SUM.value
BOUNDARY_TOL = Tolerance.PROBABILITY_BOUNDARY.value
GRADIENT_STEP = Tolerance.GRADIENT_STEP.value
SIGMA_STEP = Tolerance.SIGMA_STEP.value
ZERO_GRADIENT = Tolerance.ZERO_GRADIENT.value

GLM_MAX_ITER = Defaults.GLM_MAX_ITER.value
NEWTON_MAX_ITER = Defaults.NEWTON_MAX_ITER.value
KMEANS_RESTARTS = Defaults.KMEANS_RESTARTS.value
KMEANS_MAX_ITER = Defaults.KMEANS_MAX_ITER.value
DEFAULT_K = Defaults.CLASSES.value
DEFAULT_B = Defaults.DRAWS.value
EXPERIMENT_B = Defaults.EXPERIMENT_DRAWS.value
DEFAULT_N = Defaults.UNITS.value
DEFAULT_S = Defaults.SIMULATIONS.value
FULL_S = Defaults.FULL_SIMULATIONS.value
HERMITE_NODES = Defaults.HERMITE_NODES.value
MAX_FREE_DYADS = Defaults.MAX_FREE_DYADS.value
SIMILARITY_SAMPLES = Defaults.SIMILARITY_SAMPLES.value

DEFAULT_RIDGE = 0.1
TRUE_ATE = 10.0
