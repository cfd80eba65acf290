"""Key-rate models and switch-placement planning for trusted-node QKD backbones."""

__version__ = "0.1.0"

from .backbone import (
    CostModel,
    Implementation,
    NetworkSpec,
    best_configurations,
    cheapest_implementation,
    cluster_split,
    effective_rate,
    enumerate_implementations,
    plan,
    subgroup_rate,
)
from .devices import DetectorCandidate, optimize, sweep_mu
from .model import (
    DetectorParams,
    LinkBudget,
    NoDecoy,
    OneWay,
    PlugPlay,
    TwoDecoy,
    link_stats,
)
from .secrecy import binary_entropy, evaluate_link

__all__ = [
    "CostModel", "DetectorCandidate", "DetectorParams", "Implementation",
    "LinkBudget", "NetworkSpec", "NoDecoy", "OneWay", "PlugPlay", "TwoDecoy",
    "best_configurations", "binary_entropy", "cheapest_implementation",
    "cluster_split", "effective_rate", "enumerate_implementations",
    "evaluate_link", "link_stats", "optimize", "plan", "subgroup_rate",
    "sweep_mu",
]
