from agg_bandit.environments.base import ENVIRONMENTS, Environment, EnvRound, build_environment
from agg_bandit.environments.classification import ClassificationEnv, classification_reward
from agg_bandit.environments.preprocessing import (
    KMeansResult,
    SVDResult,
    gmf_context,
    kmeans,
    load_feature_matrix,
    load_item_groups,
    load_ratings,
    truncated_svd,
)
from agg_bandit.environments.recommendation import RecommendationEnv
from agg_bandit.environments.synthetic import SyntheticEnv, SyntheticEnvConfig, clustered_mixing

__all__ = [
    "ENVIRONMENTS",
    "ClassificationEnv",
    "EnvRound",
    "Environment",
    "KMeansResult",
    "RecommendationEnv",
    "SVDResult",
    "SyntheticEnv",
    "SyntheticEnvConfig",
    "build_environment",
    "classification_reward",
    "clustered_mixing",
    "gmf_context",
    "kmeans",
    "load_feature_matrix",
    "load_item_groups",
    "load_ratings",
    "truncated_svd",
]
