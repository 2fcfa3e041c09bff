"""
Sub-classed classification as a bandit.

Every original class is split into ``subdivisions`` sub-classes by k-means on
its own samples; each sub-class is an arm group. A round presents one sample,
offered once under every group, and the learner's pick is rewarded 1 for the
right sub-class, 0.5 for a wrong sub-class of the right class and 0 otherwise.
"""

from pathlib import Path

import numpy as np
from custom_python_logger import get_logger

from agg_bandit.embedding import ArmContext
from agg_bandit.environments.base import ENVIRONMENTS, Environment, EnvRound
from agg_bandit.environments.preprocessing import kmeans, load_feature_matrix
from agg_bandit.errors import ConfigError, InvalidArgumentError, ShapeMismatchError

logger = get_logger(name=__name__)


def classification_reward(predicted: int, true: int, class_of: np.ndarray) -> float:
    if predicted == true:
        return 1.0
    if class_of[predicted] == class_of[true]:
        return 0.5
    return 0.0


class ClassificationEnv(Environment):
    # candidates share one context
    supports_pooling = False

    def __init__(
        self,
        features: np.ndarray,
        labels: np.ndarray,
        seed: int,
        subdivisions: int = 5,
        kmeans_iters: int = 100,
        world_seed: int = 0,
    ) -> None:
        super().__init__(seed)
        features = np.asarray(features, dtype=float)
        labels = np.asarray(labels, dtype=int).reshape(-1)
        if features.ndim != 2 or features.shape[0] != labels.shape[0]:
            raise ShapeMismatchError(f"Features {features.shape} do not match {labels.shape[0]} labels.")
        if subdivisions < 1:
            raise InvalidArgumentError(f"subdivisions must be >= 1, got {subdivisions}.")
        norms = np.linalg.norm(features, axis=1)
        if np.any(norms == 0) or not np.all(np.isfinite(features)):
            raise InvalidArgumentError("Every sample needs finite, nonzero features.")

        self.features = features / norms[:, None]
        self.classes = np.unique(labels)
        self.subdivisions = subdivisions
        self.sub_labels = np.empty(len(labels), dtype=int)
        for class_idx, label in enumerate(self.classes):
            members = np.flatnonzero(labels == label)
            if len(members) < subdivisions:
                raise InvalidArgumentError(
                    f"Class {label} has {len(members)} samples, fewer than {subdivisions} sub-divisions."
                )
            result = kmeans(self.features[members], subdivisions, max_iters=kmeans_iters, seed=world_seed + class_idx)
            self.sub_labels[members] = class_idx * subdivisions + result.assignments

        self.class_of = np.repeat(np.arange(len(self.classes)), subdivisions)
        self.n_groups = len(self.classes) * subdivisions
        self.d_x = self.features.shape[1]
        logger.info(f"Classification world: {len(self.classes)} classes x {subdivisions} = {self.n_groups} groups")

    def _draw_round(self) -> EnvRound:
        sample = int(self.rng.integers(len(self.features)))
        true = int(self.sub_labels[sample])
        candidates = [
            ArmContext(features=self.features[sample], group=c, arm_id=f"{sample}:{c}") for c in range(self.n_groups)
        ]
        expected = np.array([classification_reward(c, true, self.class_of) for c in range(self.n_groups)])
        return EnvRound(candidates=candidates, expected=expected)

    @classmethod
    def from_csv(cls, path: str | Path, seed: int, **kwargs) -> "ClassificationEnv":
        features, labels = load_feature_matrix(path)
        return cls(features, labels, seed=seed, **kwargs)


@ENVIRONMENTS.register("classification")
def build_classification(
    seed: int,
    path: str | None = None,
    features: np.ndarray | None = None,
    labels: np.ndarray | None = None,
    **params,
) -> ClassificationEnv:
    """From a feature CSV (``path``) or in-memory ``features``/``labels``."""
    if path is not None:
        return ClassificationEnv.from_csv(path, seed=seed, **params)
    if features is None or labels is None:
        raise ConfigError("The classification environment needs 'path' or 'features' and 'labels'.")
    return ClassificationEnv(features, labels, seed=seed, **params)
