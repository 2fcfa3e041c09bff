"""
Dataset preprocessing: k-means sub-classing, truncated SVD factors, GMF
contexts and the plain-CSV loaders the dataset environments read.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from custom_python_logger import get_logger
from scipy.spatial.distance import cdist

from agg_bandit.const import GMF_CONSTANT
from agg_bandit.errors import DegenerateContextError, InvalidArgumentError, ShapeMismatchError

logger = get_logger(name=__name__)


# ---------------------------------------------------------------------------
# k-means
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KMeansResult:
    assignments: np.ndarray
    centroids: np.ndarray
    objectives: list[float]

    @property
    def inertia(self) -> float:
        return self.objectives[-1]


def _kmeans_plusplus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(len(points))]
    for i in range(1, k):
        dist_sq = cdist(points, centroids[:i], "sqeuclidean").min(axis=1)
        total = dist_sq.sum()
        if total <= 0:
            centroids[i] = points[rng.integers(len(points))]
            continue
        centroids[i] = points[rng.choice(len(points), p=dist_sq / total)]
    return centroids


def kmeans(points: np.ndarray, k: int, max_iters: int = 100, seed: int = 0) -> KMeansResult:
    """Lloyd's algorithm from a k-means++ seeding; empty clusters move to the farthest point."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise InvalidArgumentError(f"Expected a 2-d point matrix, got shape {points.shape}.")
    if not 1 <= k <= len(points):
        raise InvalidArgumentError(f"k must lie in [1, {len(points)}], got {k}.")

    rng = np.random.default_rng(seed)
    centroids = _kmeans_plusplus(points, k, rng)
    assignments = np.full(len(points), -1)
    objectives: list[float] = []

    for _ in range(max_iters):
        dist_sq = cdist(points, centroids, "sqeuclidean")
        new_assignments = dist_sq.argmin(axis=1)
        objectives.append(float(dist_sq[np.arange(len(points)), new_assignments].sum()))
        if np.array_equal(new_assignments, assignments):
            break
        assignments = new_assignments

        for j in range(k):
            members = assignments == j
            if members.any():
                centroids[j] = points[members].mean(axis=0)
                continue
            # re-seed at the point farthest from its own centroid
            own = cdist(points, centroids, "sqeuclidean")[np.arange(len(points)), assignments]
            far = int(own.argmax())
            centroids[j] = points[far]
            assignments[far] = j

    return KMeansResult(assignments=assignments, centroids=centroids, objectives=objectives)


# ---------------------------------------------------------------------------
# Truncated SVD
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SVDResult:
    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray

    @property
    def left_factors(self) -> np.ndarray:
        return self.left * np.sqrt(self.singular_values)

    @property
    def right_factors(self) -> np.ndarray:
        return self.right * np.sqrt(self.singular_values)

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singular_values) @ self.right.T


def truncated_svd(matrix: np.ndarray, rank: int, iters: int = 50, seed: int = 0) -> SVDResult:
    """Rank-``rank`` SVD by orthogonal (subspace) iteration, finished with a small dense SVD."""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2:
        raise InvalidArgumentError(f"Expected a matrix, got shape {a.shape}.")
    if not 1 <= rank <= min(a.shape):
        raise InvalidArgumentError(f"rank must lie in [1, {min(a.shape)}], got {rank}.")

    rng = np.random.default_rng(seed)
    right, _ = np.linalg.qr(rng.standard_normal((a.shape[1], rank)))
    for _ in range(max(iters, 1)):
        left, _ = np.linalg.qr(a @ right)
        right, _ = np.linalg.qr(a.T @ left)

    small_u, s, small_vt = np.linalg.svd(left.T @ a @ right)
    return SVDResult(left=left @ small_u, singular_values=s, right=right @ small_vt.T)


# ---------------------------------------------------------------------------
# Contexts and CSV inputs
# ---------------------------------------------------------------------------


def gmf_context(user_factor: np.ndarray, item_factor: np.ndarray) -> np.ndarray:
    """``normalize([v_u * v_i ; 0.01])``."""
    user_factor = np.asarray(user_factor, dtype=float).reshape(-1)
    item_factor = np.asarray(item_factor, dtype=float).reshape(-1)
    if user_factor.shape != item_factor.shape:
        raise ShapeMismatchError(f"Factor dimensions differ: {user_factor.shape} vs {item_factor.shape}.")
    vector = np.append(user_factor * item_factor, GMF_CONSTANT)
    norm = np.linalg.norm(vector)
    if not np.all(np.isfinite(vector)) or not np.isfinite(norm) or norm == 0:
        raise DegenerateContextError("GMF product is not finite.")
    return vector / norm


def _read_csv(path: str | Path, columns: int | None = None) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise InvalidArgumentError(f"CSV file not found: {path}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        logger.warning(f"{path} has a header but no rows.")
        return np.empty((0, columns or 0))
    if columns is not None and data.shape[1] != columns:
        raise InvalidArgumentError(f"{path} must have {columns} columns, got {data.shape[1]}.")
    return data


def load_ratings(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``user_id,item_id,rating`` rows (header line required)."""
    data = _read_csv(path, columns=3)
    return data[:, 0].astype(int), data[:, 1].astype(int), data[:, 2]


def load_feature_matrix(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Comma-separated feature rows whose last column is the integer class label."""
    data = _read_csv(path)
    if data.shape[1] < 2:
        raise InvalidArgumentError(f"{path} needs at least one feature column and a label column.")
    return data[:, :-1], data[:, -1].astype(int)


def load_item_groups(path: str | Path) -> dict[int, list[int]]:
    """``item_id,group_id`` rows; an item listed under several groups belongs to all of them."""
    mapping: dict[int, list[int]] = {}
    for item, group in _read_csv(path, columns=2).astype(int):
        groups = mapping.setdefault(int(item), [])
        if int(group) not in groups:
            groups.append(int(group))
    return mapping
