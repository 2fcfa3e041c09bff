"""
python-agg-bandit
=================

Neural contextual bandits over arm groups: an estimated arm-group graph,
group-aware GNN scoring, gradient-based UCB exploration and full-batch
retraining, with baselines, environments and a CSV-emitting harness.

Public API
----------
- ArmGroupGraph, KernelConfig       graph estimation from grouped contexts
- ArmContext, EmbeddedArm, embed    group-aware embedding
- NetworkParams, init_params, forward, gradient
- ConfidenceState, ConfidenceMode   gradient design matrix and UCB widths
- ReplayBuffer, TrainConfig, train  full-batch gradient descent
- AggUcbAgent and the baseline agents, POLICIES
- ENVIRONMENTS, build_environment   synthetic, classification and recommendation worlds
- ExperimentConfig, run_experiment, grid_search
"""

from agg_bandit.confidence import ConfidenceMode, ConfidenceState
from agg_bandit.config import AgentConfig, ExperimentConfig, build_config, load_config
from agg_bandit.embedding import ArmContext, EmbeddedArm, embed
from agg_bandit.environments import ENVIRONMENTS, SyntheticEnv, SyntheticEnvConfig, build_environment
from agg_bandit.errors import (
    BanditError,
    CommandError,
    ConfigError,
    DegenerateContextError,
    DivergenceError,
    EmptyGroupError,
    InvalidArgumentError,
    ShapeMismatchError,
)
from agg_bandit.graph_model import ArmGroupGraph, KernelConfig, NormalizedAdjacency, rbf_kernel
from agg_bandit.network import NetworkParams, forward, gradient, init_fc_params, init_params
from agg_bandit.policy import (
    POLICIES,
    AggUcbAgent,
    LinUcbAgent,
    NeuralIndAgent,
    NeuralPoolAgent,
    OracleAgent,
    RoundDecision,
    build_agent,
)
from agg_bandit.runner import RoundLog, grid_search, run_experiment
from agg_bandit.trainer import ReplayBuffer, TrainConfig, TrainResult, train

__all__ = [
    "ENVIRONMENTS",
    "POLICIES",
    "AgentConfig",
    "AggUcbAgent",
    "ArmContext",
    "ArmGroupGraph",
    "BanditError",
    "CommandError",
    "ConfidenceMode",
    "ConfidenceState",
    "ConfigError",
    "DegenerateContextError",
    "DivergenceError",
    "EmbeddedArm",
    "EmptyGroupError",
    "ExperimentConfig",
    "InvalidArgumentError",
    "KernelConfig",
    "LinUcbAgent",
    "NetworkParams",
    "NeuralIndAgent",
    "NeuralPoolAgent",
    "NormalizedAdjacency",
    "OracleAgent",
    "ReplayBuffer",
    "RoundDecision",
    "RoundLog",
    "ShapeMismatchError",
    "SyntheticEnv",
    "SyntheticEnvConfig",
    "TrainConfig",
    "TrainResult",
    "build_agent",
    "build_config",
    "build_environment",
    "embed",
    "forward",
    "gradient",
    "grid_search",
    "init_fc_params",
    "init_params",
    "load_config",
    "rbf_kernel",
    "run_experiment",
    "train",
]
