"""Minimum Gilbert arborescences in smooth Minkowski spaces."""

from .certify import (
    Certificate,
    StarData,
    balancing_residual,
    certify_embedding,
    collapsing_margins,
    corollary3_check,
)
from .model import (
    Embedding,
    GeneralNetwork,
    Instance,
    Topology,
    derive_flows,
    enumerate_full_topologies,
    general_network_cost,
    network_cost,
)
from .norms import NormSpace, dual_norm, dual_vector, euclidean, norm, p_norm
from .optimize import (
    OptimizeOptions,
    contract_degenerate_edges,
    optimize_embedding,
    solve_mga,
    split_improvement_scan,
)
from .special import (
    degree4_construct,
    degree4_feasible,
    f_alpha,
    lemma5_check,
    melzak_two_source,
    paper_counterexample,
)
from .weights import WeightFunction, affine, check_conditions, constant, power, rounded_affine

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "StarData",
    "balancing_residual",
    "certify_embedding",
    "collapsing_margins",
    "corollary3_check",
    "Embedding",
    "GeneralNetwork",
    "Instance",
    "Topology",
    "derive_flows",
    "enumerate_full_topologies",
    "general_network_cost",
    "network_cost",
    "NormSpace",
    "dual_norm",
    "dual_vector",
    "euclidean",
    "norm",
    "p_norm",
    "OptimizeOptions",
    "contract_degenerate_edges",
    "optimize_embedding",
    "solve_mga",
    "split_improvement_scan",
    "degree4_construct",
    "degree4_feasible",
    "f_alpha",
    "lemma5_check",
    "melzak_two_source",
    "paper_counterexample",
    "WeightFunction",
    "affine",
    "check_conditions",
    "constant",
    "power",
    "rounded_affine",
]
