"""
Full-batch gradient descent on the squared loss over every played arm.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from custom_python_logger import get_logger

from agg_bandit.const import DIVERGENCE_FACTOR
from agg_bandit.embedding import ArmContext
from agg_bandit.errors import DivergenceError, InvalidArgumentError
from agg_bandit.graph_model import NormalizedAdjacency
from agg_bandit.network import NetworkParams, loss_gradient

logger = get_logger(name=__name__)


@dataclass
class ReplayBuffer:
    """Append-only record of (context, group, reward) for every round played."""

    dim: int
    contexts: list[ArmContext] = field(default_factory=list)
    _features: list[np.ndarray] = field(default_factory=list, repr=False)
    _groups: list[int] = field(default_factory=list, repr=False)
    _rewards: list[float] = field(default_factory=list, repr=False)

    def append(self, ctx: ArmContext, reward: float) -> None:
        if not 0.0 <= reward <= 1.0:
            raise InvalidArgumentError(f"Rewards must lie in [0, 1], got {reward!r}.")
        if ctx.dim != self.dim:
            raise InvalidArgumentError(f"Context dimension {ctx.dim} does not match buffer dimension {self.dim}.")
        self.contexts.append(ctx)
        self._features.append(ctx.features)
        self._groups.append(ctx.group)
        self._rewards.append(float(reward))

    def __len__(self) -> int:
        return len(self.contexts)

    @property
    def features(self) -> np.ndarray:
        return np.array(self._features).reshape(len(self), self.dim)

    @property
    def groups(self) -> np.ndarray:
        return np.array(self._groups, dtype=int)

    @property
    def rewards(self) -> np.ndarray:
        return np.array(self._rewards)


@dataclass(frozen=True)
class TrainConfig:
    eta: float = 1e-3
    steps: int = 10
    warm_start: bool = False
    curve_path: Path | None = None

    def __post_init__(self) -> None:
        if not self.eta >= 0 or not np.isfinite(self.eta):
            raise InvalidArgumentError(f"Learning rate must be a finite number >= 0, got {self.eta!r}.")
        if self.steps < 0:
            raise InvalidArgumentError(f"Training steps must be >= 0, got {self.steps}.")


def loss(params: NetworkParams, buffer: ReplayBuffer, s_power: NormalizedAdjacency | None = None) -> float:
    """``1/2 sum (f - r)^2`` over the buffer; 0 for an empty buffer."""
    if not len(buffer):
        return 0.0
    value, _ = loss_gradient(params, buffer.features, buffer.groups, buffer.rewards, s_power)
    return value


@dataclass
class TrainResult:
    params: NetworkParams
    losses: list[float]

    @property
    def final_loss(self) -> float:
        return self.losses[-1]


def train(
    init_params: NetworkParams,
    buffer: ReplayBuffer,
    s_power: NormalizedAdjacency | None,
    cfg: TrainConfig,
) -> TrainResult:
    """
    Run ``cfg.steps`` full-batch steps ``theta <- theta - eta * grad L(theta)`` from *init_params*.

    ``losses[j]`` is the loss at the parameters entering step ``j``; the last
    entry is the loss of the returned parameters.
    """
    if not len(buffer):
        raise InvalidArgumentError("Cannot train on an empty replay buffer.")

    features, groups, rewards = buffer.features, buffer.groups, buffer.rewards
    theta = init_params.flatten()
    params = init_params
    losses: list[float] = []
    initial = None

    for step in range(cfg.steps + 1):
        value, grad = loss_gradient(params, features, groups, rewards, s_power)
        initial = value if initial is None else initial
        if not np.isfinite(value) or value > DIVERGENCE_FACTOR * max(initial, np.finfo(float).tiny):
            raise DivergenceError(step=step, loss=value)
        losses.append(value)
        if step == cfg.steps or cfg.eta == 0:
            break
        theta = theta - cfg.eta * grad
        params = init_params.unflatten(theta)

    if cfg.curve_path is not None:
        _write_curve(cfg.curve_path, losses)
    logger.debug(f"GD: {len(losses) - 1} steps on {len(buffer)} entries, loss {losses[0]:.6g} -> {losses[-1]:.6g}")
    return TrainResult(params=params.copy() if params is init_params else params, losses=losses)


def _write_curve(path: Path, losses: list[float]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", newline="") as fh:
        writer = csv.writer(fh)
        if fh.tell() == 0:
            writer.writerow(["step", "loss"])
        writer.writerows([step, repr(value)] for step, value in enumerate(losses))
