"""
Group-aware embedding.

A context ``x`` is lifted to the block-diagonal matrix ``X~`` of shape
``(N_c, d_x * N_c)`` whose row ``c'`` holds ``x`` in column block ``c'``. The
matrix is never materialized on the scoring path: ``EmbeddedArm`` keeps
``(x, N_c)`` and multiplies block-wise.
"""

from collections.abc import Hashable
from dataclasses import dataclass

import numpy as np

from agg_bandit.const import CONTEXT_NORM_TOL
from agg_bandit.errors import InvalidArgumentError, ShapeMismatchError


@dataclass(frozen=True, eq=False)
class ArmContext:
    """A unit-norm feature vector tagged with its arm group."""

    features: np.ndarray
    group: int
    arm_id: Hashable = None

    def __post_init__(self) -> None:
        features = np.array(self.features, dtype=float).reshape(-1)
        if not np.all(np.isfinite(features)):
            raise InvalidArgumentError(f"Context for arm {self.arm_id!r} has non-finite features.")
        if abs(np.linalg.norm(features) - 1.0) > CONTEXT_NORM_TOL:
            raise InvalidArgumentError(
                f"Context for arm {self.arm_id!r} must be unit-norm, got norm {np.linalg.norm(features)!r}."
            )
        if self.group < 0:
            raise InvalidArgumentError(f"Group index must be >= 0, got {self.group}.")
        features.flags.writeable = False
        object.__setattr__(self, "features", features)

    @property
    def dim(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True, eq=False)
class EmbeddedArm:
    """Implicit ``X~`` for one context; see the module docstring for the layout."""

    context: ArmContext
    n_groups: int

    @property
    def features(self) -> np.ndarray:
        return self.context.features

    @property
    def d_x(self) -> int:
        return self.context.dim

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_groups, self.d_x * self.n_groups

    def row(self, c: int) -> np.ndarray:
        """Dense row ``c`` of ``X~`` (length ``d_x * N_c``)."""
        if not 0 <= c < self.n_groups:
            raise InvalidArgumentError(f"Row {c} out of range [0, {self.n_groups}).")
        out = np.zeros(self.d_x * self.n_groups)
        out[c * self.d_x : (c + 1) * self.d_x] = self.features
        return out

    def multiply_right(self, theta: np.ndarray) -> np.ndarray:
        """``X~ @ theta`` for a ``(d_x * N_c) x m`` matrix, computed block by block."""
        blocks = split_blocks(theta, self.n_groups, self.d_x)
        return np.einsum("d,cdm->cm", self.features, blocks)

    def materialize(self) -> np.ndarray:
        """Dense ``X~``. Only meant for checks against the implicit products."""
        return np.kron(np.eye(self.n_groups), self.features[None, :])


def split_blocks(theta: np.ndarray, n_groups: int, d_x: int) -> np.ndarray:
    """View a ``(d_x * N_c) x m`` matrix as ``N_c`` stacked ``d_x x m`` blocks."""
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 2 or theta.shape[0] != n_groups * d_x:
        raise ShapeMismatchError(f"Expected a ({n_groups * d_x}, m) matrix, got shape {theta.shape}.")
    return theta.reshape(n_groups, d_x, theta.shape[1])


def embed(ctx: ArmContext, n_groups: int) -> EmbeddedArm:
    if n_groups < 1:
        raise InvalidArgumentError(f"n_groups must be >= 1, got {n_groups}.")
    if ctx.group >= n_groups:
        raise InvalidArgumentError(f"Context group {ctx.group} out of range [0, {n_groups}).")
    return EmbeddedArm(context=ctx, n_groups=n_groups)


def embedded_rows(features: np.ndarray, groups: np.ndarray, n_groups: int) -> np.ndarray:
    """Row ``groups[b]`` of ``X~_b`` for every context in a batch, as a dense ``(B, d_x * N_c)`` array."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    batch, d_x = features.shape
    out = np.zeros((batch, n_groups, d_x))
    out[np.arange(batch), np.asarray(groups, dtype=int)] = features
    return out.reshape(batch, n_groups * d_x)
