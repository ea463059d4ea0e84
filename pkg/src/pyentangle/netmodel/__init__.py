from ..enums import ModelKind
from .fitting import fit_node_effect_model
from .sampling import (
    aligned_base,
    edge_prob,
    log_likelihood,
    sample_new_edges,
    sample_posttreatment,
)
from .specs import (
    DyadicLogisticSpec,
    InnerProductSpec,
    NetworkModelSpec,
    NodeEffectFitSpec,
    ProductExpSpec,
    generate_inner_product_spec,
)

model_list = {
    ModelKind.INNER_PRODUCT: InnerProductSpec,
    ModelKind.DYADIC_LOGISTIC: DyadicLogisticSpec,
    ModelKind.PRODUCT_EXP: ProductExpSpec,
    ModelKind.NODE_EFFECT: NodeEffectFitSpec,
}

__all__ = [
    "DyadicLogisticSpec",
    "InnerProductSpec",
    "NetworkModelSpec",
    "NodeEffectFitSpec",
    "ProductExpSpec",
    "aligned_base",
    "edge_prob",
    "fit_node_effect_model",
    "generate_inner_product_spec",
    "log_likelihood",
    "model_list",
    "sample_new_edges",
    "sample_posttreatment",
]
