"""
Bandit agents.

Every agent follows the same two-phase protocol: ``step(candidates)`` scores
the round and returns a ``RoundDecision`` without touching agent state, and
``update(decision, reward)`` absorbs the feedback. A decision is only valid
for the agent generation that produced it.
"""

from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from custom_python_logger import get_logger

from agg_bandit.config import AgentConfig
from agg_bandit.confidence import ConfidenceState
from agg_bandit.embedding import ArmContext
from agg_bandit.environments.base import Environment
from agg_bandit.errors import InvalidArgumentError
from agg_bandit.graph_model import ArmGroupGraph, NormalizedAdjacency
from agg_bandit.network import NetworkParams, gradient_batch, init_fc_params, init_params
from agg_bandit.registry import Registry
from agg_bandit.trainer import ReplayBuffer, train

logger = get_logger(name=__name__)


@dataclass(frozen=True, eq=False)
class RoundDecision:
    """The chosen candidate plus every per-candidate quantity behind the choice."""

    index: int
    candidates: list[ArmContext]
    points: np.ndarray
    widths: np.ndarray
    scores: np.ndarray
    generation: int
    gradients: np.ndarray | None = None

    @property
    def chosen(self) -> ArmContext:
        return self.candidates[self.index]

    @property
    def score(self) -> float:
        return float(self.scores[self.index])

    @property
    def point(self) -> float:
        return float(self.points[self.index])

    @property
    def width(self) -> float:
        return float(self.widths[self.index])

    @property
    def gradient(self) -> np.ndarray | None:
        return None if self.gradients is None else self.gradients[self.index]


class Agent(ABC):
    def __init__(self, n_groups: int, d_x: int, config: AgentConfig, seed: int = 0) -> None:
        self.n_groups = n_groups
        self.d_x = d_x
        self.config = config
        self.seed = seed
        self.generation = 0
        self.last_loss = float("nan")

    @classmethod
    def for_environment(cls, env: Environment, config: AgentConfig, seed: int = 0) -> "Agent":
        return cls(env.n_groups, env.d_x, config, seed)

    @abstractmethod
    def _score(self, candidates: list[ArmContext]) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
        """Point estimates, widths and (optionally) per-candidate gradients."""

    @abstractmethod
    def _absorb(self, decision: RoundDecision, reward: float) -> None: ...

    def step(self, candidates: Sequence[ArmContext]) -> RoundDecision:
        candidates = list(candidates)
        if not candidates:
            raise InvalidArgumentError("A round needs at least one candidate.")
        for ctx in candidates:
            if ctx.dim != self.d_x or ctx.group >= self.n_groups:
                raise InvalidArgumentError(
                    f"Candidate {ctx.arm_id!r} (group {ctx.group}, dim {ctx.dim}) does not fit "
                    f"{self.n_groups} groups of dimension {self.d_x}."
                )
        points, widths, gradients = self._score(candidates)
        scores = points + self.config.gamma * widths
        # argmax keeps the first maximum
        index = int(np.argmax(scores))
        return RoundDecision(
            index=index,
            candidates=candidates,
            points=points,
            widths=widths,
            scores=scores,
            generation=self.generation,
            gradients=gradients,
        )

    def update(self, decision: RoundDecision, reward: float) -> "Agent":
        if decision.generation != self.generation:
            raise InvalidArgumentError(
                f"Decision from generation {decision.generation} applied to agent generation {self.generation}."
            )
        if not 0.0 <= reward <= 1.0:
            raise InvalidArgumentError(f"Rewards must lie in [0, 1], got {reward!r}.")
        self._absorb(decision, float(reward))
        self.generation += 1
        return self

    @staticmethod
    def _stack(candidates: list[ArmContext]) -> tuple[np.ndarray, np.ndarray]:
        return np.stack([c.features for c in candidates]), np.array([c.group for c in candidates], dtype=int)


POLICIES: Registry[type[Agent]] = Registry("algorithm")


class GradientUcbAgent(Agent):
    """Neural scoring with gradient-based widths ``sqrt(g^T Z^-1 g / m)`` and full-batch retraining."""

    def __init__(self, n_groups: int, d_x: int, config: AgentConfig, seed: int = 0) -> None:
        super().__init__(n_groups, d_x, config, seed)
        self.theta_0 = self._init_params()
        self.params = self.theta_0
        self.buffer = ReplayBuffer(d_x)
        self.confidence = ConfidenceState(self.theta_0.n_params, config.lam, config.m, config.mode)
        logger.debug(f"{type(self).__name__}: p={self.theta_0.n_params}, confidence mode {self.confidence.mode}")

    @abstractmethod
    def _init_params(self) -> NetworkParams: ...

    def _adjacency(self) -> NormalizedAdjacency | None:
        return None

    def _ingest(self, decision: RoundDecision) -> None:
        """Hook for agents that learn from every offered context."""

    def _score(self, candidates: list[ArmContext]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        features, groups = self._stack(candidates)
        points, gradients = gradient_batch(self.params, features, groups, self._adjacency())
        return points, self.confidence.widths(gradients), gradients

    def _absorb(self, decision: RoundDecision, reward: float) -> None:
        self._ingest(decision)
        self.buffer.append(decision.chosen, reward)
        start = self.params if self.config.train.warm_start else self.theta_0
        result = train(start, self.buffer, self._adjacency(), self.config.train)
        self.params = result.params
        self.last_loss = result.final_loss
        # gradient taken at selection time, before retraining
        self.confidence.update(decision.gradient)


@POLICIES.register("agg_ucb")
class AggUcbAgent(GradientUcbAgent):
    """Group-aware GNN scoring on the estimated arm-group graph."""

    def __init__(self, n_groups: int, d_x: int, config: AgentConfig, seed: int = 0) -> None:
        self.graph = ArmGroupGraph(n_groups, d_x, config.kernel)
        self._s_power = self.graph.normalized_adjacency_power(config.k_hop)
        super().__init__(n_groups, d_x, config, seed)

    def _init_params(self) -> NetworkParams:
        c = self.config
        return init_params(c.m, c.L, self.d_x, self.n_groups, rng_seed=self.seed, activation=c.activation)

    def _adjacency(self) -> NormalizedAdjacency:
        return self._s_power

    def _ingest(self, decision: RoundDecision) -> None:
        offered = decision.candidates if self.config.ingest == "all" else [decision.chosen]
        self.graph.ingest((ctx.group, ctx.features) for ctx in offered)
        self._s_power = self.graph.normalized_adjacency_power(self.config.k_hop)


@POLICIES.register("neural_pool")
class NeuralPoolAgent(GradientUcbAgent):
    """One FC network over the raw context; group tags are ignored."""

    def _init_params(self) -> NetworkParams:
        c = self.config
        return init_fc_params(c.m, c.L, self.d_x, 1, rng_seed=self.seed, activation=c.activation)


@POLICIES.register("neural_ind")
class NeuralIndAgent(GradientUcbAgent):
    """One FC network over the group-aware embedded row ``X~[c]``."""

    def _init_params(self) -> NetworkParams:
        c = self.config
        return init_fc_params(c.m, c.L, self.d_x, self.n_groups, rng_seed=self.seed, activation=c.activation)


@POLICIES.register("lin_ucb")
class LinUcbAgent(Agent):
    """Disjoint per-group ridge regression with width ``sqrt(x^T A_c^-1 x)``."""

    def __init__(self, n_groups: int, d_x: int, config: AgentConfig, seed: int = 0) -> None:
        super().__init__(n_groups, d_x, config, seed)
        self.a_inv = np.repeat(np.eye(d_x)[None] / config.lam, n_groups, axis=0)
        self.b = np.zeros((n_groups, d_x))

    def _score(self, candidates: list[ArmContext]) -> tuple[np.ndarray, np.ndarray, None]:
        features, groups = self._stack(candidates)
        a_inv = self.a_inv[groups]
        theta = np.einsum("bij,bj->bi", a_inv, self.b[groups])
        points = np.einsum("bi,bi->b", theta, features)
        widths = np.sqrt(np.maximum(np.einsum("bi,bij,bj->b", features, a_inv, features), 0.0))
        return points, widths, None

    def _absorb(self, decision: RoundDecision, reward: float) -> None:
        x, c = decision.chosen.features, decision.chosen.group
        u = self.a_inv[c] @ x
        self.a_inv[c] -= np.outer(u, u) / (1.0 + x @ u)
        self.b[c] += reward * x
        theta = self.a_inv[c] @ self.b[c]
        self.last_loss = 0.5 * float((theta @ x - reward) ** 2)


@POLICIES.register("oracle")
class OracleAgent(Agent):
    """Plays the candidate with the highest noiseless expected reward of the environment's current round."""

    def __init__(
        self, n_groups: int, d_x: int, config: AgentConfig, seed: int = 0, env: Environment | None = None
    ) -> None:
        super().__init__(n_groups, d_x, config, seed)
        self.env = env
        self.last_loss = 0.0

    @classmethod
    def for_environment(cls, env: Environment, config: AgentConfig, seed: int = 0) -> "OracleAgent":
        return cls(env.n_groups, env.d_x, config, seed, env=env)

    def _score(self, candidates: list[ArmContext]) -> tuple[np.ndarray, np.ndarray, None]:
        current = self.env.current if self.env is not None else None
        if current is None or len(current.candidates) != len(candidates):
            raise InvalidArgumentError("The oracle can only score the environment's current round.")
        return np.asarray(current.expected, dtype=float), np.zeros(len(candidates)), None

    def _absorb(self, decision: RoundDecision, reward: float) -> None:
        pass


def build_agent(algo: str, env: Environment, config: AgentConfig, seed: int = 0) -> Agent:
    agent_class = POLICIES.require(algo)
    if algo == "neural_pool" and not env.supports_pooling:
        logger.warning(f"{type(env).__name__} offers one context under every group; a pooled model cannot separate them.")
    return agent_class.for_environment(env, config, seed)

