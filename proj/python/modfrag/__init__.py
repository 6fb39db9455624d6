from ._modfrag import (
    adversarial,
    classify,
    estimate_pof,
    heterogeneity_gap,
    net_flow,
    pof_of_split,
    rebalancing_cost,
    scaling_sweep,
    solve,
    survey,
    two_cluster_csv,
    two_node_gamma,
)

__version__ = "0.1.0"
