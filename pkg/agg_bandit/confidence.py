"""
Gradient design matrix and UCB widths.

``Z`` starts at ``lambda * I`` and absorbs ``g g^T`` for every played arm. The
exact mode keeps ``Z^{-1}`` through Sherman-Morrison updates; the diagonal mode
keeps ``diag(Z)`` only, for networks too large for a dense ``p x p`` matrix.
"""

from enum import StrEnum

import numpy as np
from custom_python_logger import get_logger
from scipy.linalg.blas import dger

from agg_bandit.const import EXACT_MODE_MAX_PARAMS
from agg_bandit.errors import InvalidArgumentError, ShapeMismatchError

logger = get_logger(name=__name__)


class ConfidenceMode(StrEnum):
    EXACT = "exact"
    DIAGONAL = "diagonal"
    AUTO = "auto"

    def resolve(self, p: int) -> "ConfidenceMode":
        if self is not ConfidenceMode.AUTO:
            return self
        return ConfidenceMode.EXACT if p <= EXACT_MODE_MAX_PARAMS else ConfidenceMode.DIAGONAL


class ConfidenceState:
    """``Z^{-1}`` (exact) or ``diag(Z)`` (diagonal) with widths ``sqrt(g^T Z^{-1} g / m)``."""

    def __init__(self, p: int, lam: float, m: int, mode: ConfidenceMode | str = ConfidenceMode.AUTO) -> None:
        if p < 1:
            raise InvalidArgumentError(f"p must be >= 1, got {p}.")
        if not lam > 0:
            raise InvalidArgumentError(f"lambda must be > 0, got {lam!r}.")
        self.p = p
        self.lam = float(lam)
        self.m = m
        self.mode = ConfidenceMode(mode).resolve(p)
        if ConfidenceMode(mode) is ConfidenceMode.AUTO and self.mode is ConfidenceMode.DIAGONAL:
            logger.warning(f"p={p} exceeds {EXACT_MODE_MAX_PARAMS}; using the diagonal confidence approximation.")

        if self.mode is ConfidenceMode.EXACT:
            self.z_inv = np.eye(p) / self.lam
        else:
            self.z_diag = np.full(p, self.lam)

    def _check(self, g: np.ndarray) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        if g.shape[-1] != self.p:
            raise ShapeMismatchError(f"Gradient has dimension {g.shape[-1]}, expected {self.p}.")
        return g

    def quadratic_forms(self, grads: np.ndarray) -> np.ndarray:
        """``g^T Z^{-1} g`` for each row of a ``(B, p)`` array."""
        grads = np.atleast_2d(self._check(grads))
        if self.mode is ConfidenceMode.EXACT:
            return np.einsum("bi,bi->b", grads @ self.z_inv, grads)
        return np.sum(grads**2 / self.z_diag, axis=1)

    def widths(self, grads: np.ndarray) -> np.ndarray:
        return np.sqrt(np.maximum(self.quadratic_forms(grads), 0.0) / self.m)

    def width(self, g: np.ndarray) -> float:
        return float(self.widths(self._check(g)[None, :])[0])

    def update(self, g: np.ndarray) -> "ConfidenceState":
        g = self._check(g).reshape(-1)
        if self.mode is ConfidenceMode.EXACT:
            u = self.z_inv @ g
            # rank-1 update in place on the Fortran-ordered view
            self.z_inv = dger(-1.0 / (1.0 + g @ u), u, u, a=self.z_inv.T, overwrite_a=True).T
            self.z_inv += self.z_inv.T
            self.z_inv *= 0.5
        else:
            self.z_diag += g**2
        return self
