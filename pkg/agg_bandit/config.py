"""
Agent and experiment configuration.

Experiment files are flat JSON objects. Harness keys (``algo``, ``env``, ``T``,
``seed``, ``out``, ``workers``, ``grid``) and agent keys (``gamma``, ``lambda``,
``m``, ``L``, ``k_hop``, ``activation``, ``mode``, ``sigma_k``, ``sigma_s``,
``eta``, ``J``, ``warm_start``, ``ingest``) are read here; every other key is
handed to the environment factory, which rejects what it does not know.
"""

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from agg_bandit.confidence import ConfidenceMode
from agg_bandit.errors import ConfigError
from agg_bandit.graph_model import KernelConfig
from agg_bandit.network import ACTIVATIONS
from agg_bandit.trainer import TrainConfig

AGENT_KEYS = frozenset(
    {"gamma", "lambda", "m", "L", "k_hop", "activation", "mode", "sigma_k", "sigma_s", "eta", "J", "warm_start", "ingest"}
)
HARNESS_KEYS = frozenset({"algo", "env", "T", "seed", "out", "workers", "grid"})
INGEST_MODES = ("all", "chosen")


@dataclass(frozen=True)
class AgentConfig:
    gamma: float = 0.01
    lam: float = 1.0
    m: int = 500
    L: int = 2
    k_hop: int = 1
    kernel: KernelConfig = field(default_factory=KernelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    mode: ConfidenceMode = ConfidenceMode.AUTO
    activation: str = "tanh"
    ingest: str = "all"

    def __post_init__(self) -> None:
        if not self.gamma >= 0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma!r}.")
        if not self.lam > 0:
            raise ConfigError(f"lambda must be > 0, got {self.lam!r}.")
        if self.m < 1 or self.L < 2:
            raise ConfigError(f"Need m >= 1 and L >= 2, got m={self.m}, L={self.L}.")
        if self.k_hop < 0:
            raise ConfigError(f"k_hop must be >= 0, got {self.k_hop}.")
        if self.ingest not in INGEST_MODES:
            raise ConfigError(f"ingest must be one of {INGEST_MODES}, got '{self.ingest}'.")
        try:
            object.__setattr__(self, "mode", ConfidenceMode(self.mode))
        except ValueError as exc:
            raise ConfigError(f"Unknown confidence mode '{self.mode}'.") from exc
        ACTIVATIONS.require(self.activation)

    @classmethod
    def from_flat(cls, values: dict[str, Any]) -> "AgentConfig":
        """Build from flat agent keys (``lambda``, ``sigma_s``, ``J``, ...)."""
        if unknown := set(values) - AGENT_KEYS:
            raise ConfigError(f"Unknown agent keys: {', '.join(sorted(unknown))}.")
        defaults = cls()
        return cls(
            gamma=float(values.get("gamma", defaults.gamma)),
            lam=float(values.get("lambda", defaults.lam)),
            m=int(values.get("m", defaults.m)),
            L=int(values.get("L", defaults.L)),
            k_hop=int(values.get("k_hop", defaults.k_hop)),
            kernel=KernelConfig(
                bandwidth_k=float(values.get("sigma_k", defaults.kernel.bandwidth_k)),
                bandwidth_s=float(values.get("sigma_s", defaults.kernel.bandwidth_s)),
            ),
            train=TrainConfig(
                eta=float(values.get("eta", defaults.train.eta)),
                steps=int(values.get("J", defaults.train.steps)),
                warm_start=bool(values.get("warm_start", defaults.train.warm_start)),
            ),
            mode=values.get("mode", defaults.mode),
            activation=str(values.get("activation", defaults.activation)),
            ingest=str(values.get("ingest", defaults.ingest)),
        )

    def as_flat(self) -> dict[str, Any]:
        return {
            "gamma": self.gamma,
            "lambda": self.lam,
            "m": self.m,
            "L": self.L,
            "k_hop": self.k_hop,
            "activation": self.activation,
            "mode": str(self.mode),
            "sigma_k": self.kernel.bandwidth_k,
            "sigma_s": self.kernel.bandwidth_s,
            "eta": self.train.eta,
            "J": self.train.steps,
            "warm_start": self.train.warm_start,
            "ingest": self.ingest,
        }

    def with_overrides(self, **flat: Any) -> "AgentConfig":
        return AgentConfig.from_flat({**self.as_flat(), **flat})


@dataclass(frozen=True)
class ExperimentConfig:
    algo: str = "agg_ucb"
    env: str = "synthetic"
    env_params: dict[str, Any] = field(default_factory=dict)
    T: int = 1000
    agent: AgentConfig = field(default_factory=AgentConfig)
    seeds: tuple[int, ...] = (0,)
    grid: dict[str, list[Any]] | None = None
    out: Path = Path("results")
    workers: int = 1

    def __post_init__(self) -> None:
        if self.T < 1:
            raise ConfigError(f"T must be >= 1, got {self.T}.")
        if not self.seeds:
            raise ConfigError("At least one seed is required.")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}.")
        for key, values in (self.grid or {}).items():
            if key not in AGENT_KEYS:
                raise ConfigError(f"Grid key '{key}' is not an agent parameter.")
            if not isinstance(values, list | tuple) or not values:
                raise ConfigError(f"Grid values for '{key}' must be a nonempty list.")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "out", Path(self.out))

    @classmethod
    def from_flat(cls, values: dict[str, Any]) -> "ExperimentConfig":
        """Split a flat key-value mapping into harness, agent and environment settings."""
        harness = {k: v for k, v in values.items() if k in HARNESS_KEYS}
        agent = {k: v for k, v in values.items() if k in AGENT_KEYS}
        env_params = {k: v for k, v in values.items() if k not in HARNESS_KEYS | AGENT_KEYS}
        defaults = cls()
        return cls(
            algo=str(harness.get("algo", defaults.algo)),
            env=str(harness.get("env", defaults.env)),
            env_params=env_params,
            T=int(harness.get("T", defaults.T)),
            agent=AgentConfig.from_flat(agent),
            seeds=parse_seeds(harness.get("seed", list(defaults.seeds))),
            grid=harness.get("grid"),
            out=Path(harness.get("out", defaults.out)),
            workers=int(harness.get("workers", defaults.workers)),
        )

    def with_agent(self, **flat: Any) -> "ExperimentConfig":
        return replace(self, agent=self.agent.with_overrides(**flat))


def parse_seeds(value: int | str | list[int] | tuple[int, ...]) -> tuple[int, ...]:
    """``3``, ``"1,2,3"`` or ``[1, 2, 3]``."""
    if isinstance(value, str):
        try:
            return tuple(int(part) for part in value.split(",") if part.strip())
        except ValueError as exc:
            raise ConfigError(f"Seeds must be comma-separated integers, got '{value}'.") from exc
    if isinstance(value, int):
        return (value,)
    return tuple(int(s) for s in value)


def load_config(path: str | Path) -> dict[str, Any]:
    """Read a flat JSON object from *path*."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    try:
        values = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(values, dict):
        raise ConfigError(f"{path} must contain a JSON object.")
    return values


def build_config(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    """File values first, then every override that is not ``None``."""
    values = load_config(path) if path else {}
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return ExperimentConfig.from_flat(values)
