"""
Arm-group graph estimation.

Each arm group is a node; the weight between two groups is a Gaussian-like
function of the squared RKHS distance between the kernel mean embeddings of
their observed contexts. The Gram double sums behind those distances are kept
incrementally, so a new context costs one kernel row against the stored history.
"""

from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np
from custom_python_logger import get_logger
from scipy.spatial.distance import cdist

from agg_bandit.const import CONTEXT_NORM_TOL
from agg_bandit.errors import EmptyGroupError, InvalidArgumentError

logger = get_logger(name=__name__)


@dataclass(frozen=True)
class KernelConfig:
    """RBF length scale ``bandwidth_k`` and edge-weight bandwidth ``bandwidth_s``."""

    bandwidth_k: float = 1.0
    bandwidth_s: float = 1.0

    def __post_init__(self) -> None:
        for name in ("bandwidth_k", "bandwidth_s"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise InvalidArgumentError(f"{name} must be a positive finite number, got {value!r}.")


def rbf_gram(xs: np.ndarray, ys: np.ndarray, bandwidth: float) -> np.ndarray:
    """Kernel matrix ``exp(-|x - y|^2 / (2 bandwidth^2))`` between the rows of *xs* and *ys*."""
    return np.exp(-cdist(np.atleast_2d(xs), np.atleast_2d(ys), "sqeuclidean") / (2.0 * bandwidth**2))


def rbf_kernel(x: np.ndarray, y: np.ndarray, cfg: KernelConfig) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidArgumentError("rbf_kernel received a non-finite input.")
    if x.shape != y.shape:
        raise InvalidArgumentError(f"rbf_kernel shapes differ: {x.shape} vs {y.shape}.")
    return float(np.exp(-np.sum((x - y) ** 2) / (2.0 * cfg.bandwidth_k**2)))


@dataclass
class GroupStats:
    """Contexts observed for one arm group, stored in a growable buffer."""

    dim: int
    count: int = 0
    _buffer: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._buffer = np.empty((8, self.dim))

    @property
    def contexts(self) -> np.ndarray:
        return self._buffer[: self.count]

    def append(self, x: np.ndarray) -> None:
        if self.count == len(self._buffer):
            grown = np.empty((2 * len(self._buffer), self.dim))
            grown[: self.count] = self._buffer[: self.count]
            self._buffer = grown
        self._buffer[self.count] = x
        self.count += 1


@dataclass(frozen=True)
class NormalizedAdjacency:
    """``s_power`` is ``S^hop`` for the symmetrically normalized adjacency ``S``."""

    s: np.ndarray
    s_power: np.ndarray
    hop: int

    @property
    def n_groups(self) -> int:
        return self.s_power.shape[0]

    @classmethod
    def identity(cls, n_groups: int) -> "NormalizedAdjacency":
        eye = np.eye(n_groups)
        return cls(s=eye, s_power=eye, hop=0)


class ArmGroupGraph:
    """
    The evolving arm-group graph.

    Mutated only by ``ingest``; every read is safe between ingests. Groups that
    have not received a context yet keep a provisional distance of 1 to every
    other group so the graph is connected from the first round.
    """

    def __init__(self, n_groups: int, dim: int, kernel: KernelConfig | None = None) -> None:
        if n_groups < 1 or dim < 1:
            raise InvalidArgumentError(f"n_groups and dim must be >= 1, got {n_groups}, {dim}.")
        self.n_groups = n_groups
        self.dim = dim
        self.kernel = kernel or KernelConfig()
        self.stats = [GroupStats(dim) for _ in range(n_groups)]
        self.gram_sums = np.zeros((n_groups, n_groups))
        self._weights = np.full((n_groups, n_groups), self._prior_weight)
        np.fill_diagonal(self._weights, 1.0)
        self._stale = np.zeros(n_groups, dtype=bool)

    @property
    def _prior_weight(self) -> float:
        return float(np.exp(-1.0 / self.kernel.bandwidth_s))

    @property
    def counts(self) -> np.ndarray:
        return np.array([s.count for s in self.stats])

    def _check_group(self, c: int) -> None:
        if not 0 <= c < self.n_groups:
            raise InvalidArgumentError(f"Group index {c} out of range [0, {self.n_groups}).")

    def ingest(self, batch: Iterable[tuple[int, np.ndarray]]) -> "ArmGroupGraph":
        """Add ``(group, context)`` pairs, updating Gram double sums incrementally."""
        for c, x in batch:
            self._check_group(c)
            x = np.asarray(x, dtype=float).reshape(-1)
            if x.shape[0] != self.dim or not np.all(np.isfinite(x)):
                raise InvalidArgumentError(f"Context for group {c} must be a finite {self.dim}-vector.")
            if abs(np.linalg.norm(x) - 1.0) > CONTEXT_NORM_TOL:
                raise InvalidArgumentError(f"Context for group {c} is not unit-norm.")

            for other, stats in enumerate(self.stats):
                if stats.count == 0:
                    continue
                row_sum = float(rbf_gram(x, stats.contexts, self.kernel.bandwidth_k).sum())
                if other == c:
                    # ordered pairs (x, x') and (x', x)
                    self.gram_sums[c, c] += 2.0 * row_sum
                else:
                    self.gram_sums[c, other] += row_sum
                    self.gram_sums[other, c] += row_sum
            self.gram_sums[c, c] += 1.0  # k(x, x)
            self.stats[c].append(x)
            self._stale[c] = True
        return self

    def mmd_sq(self, c: int, c_other: int) -> float:
        """Squared distance between the empirical kernel mean embeddings of two groups."""
        self._check_group(c)
        self._check_group(c_other)
        for g in (c, c_other):
            if self.stats[g].count == 0:
                raise EmptyGroupError(g)
        if c == c_other:
            return 0.0
        n, n_other = self.stats[c].count, self.stats[c_other].count
        value = (
            self.gram_sums[c, c] / n**2
            + self.gram_sums[c_other, c_other] / n_other**2
            - 2.0 * self.gram_sums[c, c_other] / (n * n_other)
        )
        return max(float(value), 0.0)

    def edge_weight(self, c: int, c_other: int) -> float:
        return float(np.exp(-self.mmd_sq(c, c_other) / self.kernel.bandwidth_s))

    def refresh_weights(self, full: bool = False) -> np.ndarray:
        """Recompute weights for pairs touched since the last refresh (all pairs when *full*)."""
        stale = np.ones(self.n_groups, dtype=bool) if full else self._stale
        if not stale.any():
            return self._weights
        nonempty = self.counts > 0
        for c in np.flatnonzero(stale):
            for other in range(self.n_groups):
                if other == c:
                    w = 1.0
                elif nonempty[c] and nonempty[other]:
                    w = self.edge_weight(c, other)
                else:
                    w = self._prior_weight
                self._weights[c, other] = self._weights[other, c] = w
        self._stale[:] = False
        return self._weights

    @property
    def weights(self) -> np.ndarray:
        return self.refresh_weights().copy()

    def normalized_adjacency_power(self, k: int) -> NormalizedAdjacency:
        """``S^k`` with ``S = D^{-1/2} W D^{-1/2}``; self-loops are the unit diagonal of ``W``."""
        if k < 0:
            raise InvalidArgumentError(f"Hop count must be >= 0, got {k}.")
        w = self.refresh_weights()
        inv_sqrt_deg = 1.0 / np.sqrt(w.sum(axis=1))
        s = inv_sqrt_deg[:, None] * w * inv_sqrt_deg[None, :]
        s = 0.5 * (s + s.T)
        s_power = np.eye(self.n_groups)
        for _ in range(k):
            s_power = s_power @ s
        s_power = 0.5 * (s_power + s_power.T)
        return NormalizedAdjacency(s=s, s_power=s_power, hop=k)


def time_aligned_adjacency(aligned: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    """
    Analysis-only adjacency ``A[i, j] = (1 / (t N_c)) sum_tau k(x_{i,tau}, x_{j,tau})``.

    *aligned* has shape ``(t, N_c, d_x)``: one context per group per round. This
    pairs contexts received in the same round rather than comparing full
    histories, and is not used by the bandit itself.
    """
    aligned = np.asarray(aligned, dtype=float)
    if aligned.ndim != 3:
        raise InvalidArgumentError(f"Expected a (t, N_c, d_x) array, got shape {aligned.shape}.")
    t, n_groups, _ = aligned.shape
    sq = np.sum((aligned[:, :, None, :] - aligned[:, None, :, :]) ** 2, axis=-1)
    return np.exp(-sq / (2.0 * cfg.bandwidth_k**2)).sum(axis=0) / (t * n_groups)
