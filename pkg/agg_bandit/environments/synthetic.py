"""
Synthetic grouped-reward worlds.

Group ``c`` draws contexts around a unit center and scores them through a
group parameter ``theta_c``. Both are mixing-weighted combinations of base
directions, so rows of ``group_mixing`` that overlap give groups with similar
context distributions and similar reward maps.
"""

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from agg_bandit.embedding import ArmContext
from agg_bandit.environments.base import ENVIRONMENTS, Environment, EnvRound
from agg_bandit.errors import ConfigError, InvalidArgumentError

REWARD_FUNCTIONS = ("linear", "cosine", "quadratic")


def _unit_rows(a: np.ndarray) -> np.ndarray:
    return a / np.linalg.norm(a, axis=-1, keepdims=True)


def clustered_mixing(n_groups: int, n_clusters: int, strength: float = 0.8) -> np.ndarray:
    """Row-stochastic ``(1 - strength) I + strength * uniform-over-own-cluster``."""
    if not 1 <= n_clusters <= n_groups:
        raise InvalidArgumentError(f"n_clusters must lie in [1, {n_groups}], got {n_clusters}.")
    if not 0.0 <= strength <= 1.0:
        raise InvalidArgumentError(f"strength must lie in [0, 1], got {strength}.")
    cluster = np.arange(n_groups) % n_clusters
    same = (cluster[:, None] == cluster[None, :]).astype(float)
    return (1.0 - strength) * np.eye(n_groups) + strength * same / same.sum(axis=1, keepdims=True)


@dataclass
class SyntheticEnvConfig:
    n_groups: int = 10
    d_x: int = 10
    arms_per_round: int | None = None
    group_centers: np.ndarray | None = None
    group_spread: float = 0.3
    reward_fn: str = "cosine"
    group_mixing: np.ndarray | None = None
    base_directions: np.ndarray | None = None
    noise_sigma: float = 0.05
    world_seed: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.n_groups < 1 or self.d_x < 1:
            raise InvalidArgumentError(f"n_groups and d_x must be >= 1, got {self.n_groups}, {self.d_x}.")
        if self.reward_fn not in REWARD_FUNCTIONS:
            raise InvalidArgumentError(f"reward_fn must be one of {REWARD_FUNCTIONS}, got '{self.reward_fn}'.")
        if self.group_spread < 0 or self.noise_sigma < 0:
            raise InvalidArgumentError("group_spread and noise_sigma must be >= 0.")
        self.arms_per_round = self.arms_per_round or self.n_groups
        self._rng = np.random.default_rng(self.world_seed)

        if self.group_mixing is None:
            self.group_mixing = np.eye(self.n_groups)
        self.group_mixing = np.asarray(self.group_mixing, dtype=float)
        if self.group_mixing.shape != (self.n_groups, self.n_groups):
            raise InvalidArgumentError(f"group_mixing must be {self.n_groups}x{self.n_groups}.")
        if np.any(self.group_mixing < 0) or not np.allclose(self.group_mixing.sum(axis=1), 1.0, atol=1e-9):
            raise InvalidArgumentError("group_mixing must be row-stochastic.")

        if self.base_directions is None:
            self.base_directions = _unit_rows(self._rng.standard_normal((self.n_groups, self.d_x)))
        if self.group_centers is None:
            base_centers = _unit_rows(self._rng.standard_normal((self.n_groups, self.d_x)))
            self.group_centers = _unit_rows(self.group_mixing @ base_centers)
        self.group_centers = _unit_rows(np.asarray(self.group_centers, dtype=float))

    @property
    def group_parameters(self) -> np.ndarray:
        return _unit_rows(self.group_mixing @ np.asarray(self.base_directions, dtype=float))


class SyntheticEnv(Environment):
    """One arm per group per round by default; candidate ``i`` belongs to group ``i % N_c``."""

    def __init__(self, config: SyntheticEnvConfig, seed: int) -> None:
        super().__init__(seed)
        self.config = config
        self.n_groups = config.n_groups
        self.d_x = config.d_x
        self.theta = config.group_parameters

    def expected_reward(self, features: np.ndarray, groups: np.ndarray) -> np.ndarray:
        """Noiseless reward ``h(x)`` for contexts in the given groups; always in [0, 1]."""
        inner = np.einsum("bd,bd->b", np.atleast_2d(features), self.theta[np.asarray(groups, dtype=int)])
        match self.config.reward_fn:
            case "linear":
                h = np.abs(inner)
            case "quadratic":
                h = inner**2
            case _:
                h = 0.5 * (1.0 + np.cos(3.0 * np.pi * inner))
        return np.clip(h, 0.0, 1.0)

    def _draw_round(self) -> EnvRound:
        groups = np.arange(self.config.arms_per_round) % self.n_groups
        raw = self.config.group_centers[groups] + self.config.group_spread * self.rng.standard_normal(
            (len(groups), self.d_x)
        )
        features = _unit_rows(raw)
        candidates = [ArmContext(features=x, group=int(c), arm_id=i) for i, (x, c) in enumerate(zip(features, groups))]
        return EnvRound(candidates=candidates, expected=self.expected_reward(features, groups))

    def _noise(self, size: int) -> np.ndarray:
        return self.config.noise_sigma * self.rng.standard_normal(size)


@ENVIRONMENTS.register("synthetic")
def build_synthetic(
    seed: int,
    mixing: str = "identity",
    n_clusters: int = 2,
    mixing_strength: float = 0.8,
    **params: Any,
) -> SyntheticEnv:
    """``mixing`` selects ``identity`` or ``clustered`` group coupling; other keys feed ``SyntheticEnvConfig``."""
    n_groups = int(params.get("n_groups", SyntheticEnvConfig.n_groups))
    match mixing:
        case "identity":
            params.setdefault("group_mixing", np.eye(n_groups))
        case "clustered":
            params.setdefault("group_mixing", clustered_mixing(n_groups, n_clusters, mixing_strength))
        case _:
            raise ConfigError(f"Unknown mixing '{mixing}'. Available: clustered, identity.")
    return SyntheticEnv(SyntheticEnvConfig(**params), seed=seed)
