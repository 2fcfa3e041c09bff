from abc import ABC, abstractmethod
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

import numpy as np

from agg_bandit.embedding import ArmContext
from agg_bandit.errors import ConfigError, InvalidArgumentError
from agg_bandit.registry import Registry


@dataclass(frozen=True, eq=False)
class EnvRound:
    """Candidates offered in one round and their noiseless expected rewards."""

    candidates: list[ArmContext]
    expected: np.ndarray

    @property
    def best_expected(self) -> float:
        return float(np.max(self.expected))


class Environment(ABC):
    """
    A sequential bandit world.

    ``next_round()`` draws the candidates of a round; ``observe(i)`` returns the
    realized reward of candidate ``i`` of that round and ``regret(i)`` its
    pseudo-regret against the noiseless best candidate.
    """

    n_groups: int
    d_x: int
    supports_pooling: bool = True

    def __init__(self, seed: int) -> None:
        self.rng = np.random.default_rng(seed)
        self.current: EnvRound | None = None

    @abstractmethod
    def _draw_round(self) -> EnvRound: ...

    def _noise(self, size: int) -> np.ndarray:
        return np.zeros(size)

    def next_round(self) -> EnvRound:
        self.current = self._draw_round()
        return self.current

    def _current(self, index: int) -> EnvRound:
        if self.current is None:
            raise InvalidArgumentError("No round has been drawn yet.")
        if not 0 <= index < len(self.current.candidates):
            raise InvalidArgumentError(f"Candidate index {index} out of range.")
        return self.current

    def observe(self, index: int) -> float:
        current = self._current(index)
        reward = current.expected[index] + self._noise(1)[0]
        return float(np.clip(reward, 0.0, 1.0))

    def regret(self, index: int) -> float:
        current = self._current(index)
        return current.best_expected - float(current.expected[index])


EnvFactory = Callable[..., Environment]
ENVIRONMENTS: Registry[EnvFactory] = Registry("environment")


def build_environment(name: str, seed: int, params: dict[str, Any]) -> Environment:
    factory = ENVIRONMENTS.require(name)
    try:
        return factory(seed=seed, **params)
    except TypeError as exc:
        raise ConfigError(f"Invalid parameters for environment '{name}': {exc}") from exc
