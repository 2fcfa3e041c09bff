"""
Rating-matrix recommendation as a bandit.

Ratings are min-max normalized and factorized by truncated SVD; an arm is an
(item, group) pair whose context is the GMF product of the user and item
factors. A round picks a user and offers a sample of the items that user
rated, once per group of the item, so multi-group items appear several times.
"""

from pathlib import Path

import numpy as np
from custom_python_logger import get_logger

from agg_bandit.embedding import ArmContext
from agg_bandit.environments.base import ENVIRONMENTS, Environment, EnvRound
from agg_bandit.environments.preprocessing import gmf_context, load_item_groups, load_ratings, truncated_svd
from agg_bandit.errors import InvalidArgumentError, ShapeMismatchError

logger = get_logger(name=__name__)


class RecommendationEnv(Environment):
    def __init__(
        self,
        users: np.ndarray,
        items: np.ndarray,
        ratings: np.ndarray,
        item_groups: dict[int, list[int]],
        seed: int,
        rank: int = 20,
        arms_per_round: int = 20,
        svd_iters: int = 50,
        world_seed: int = 0,
    ) -> None:
        super().__init__(seed)
        users, items = np.asarray(users, dtype=int), np.asarray(items, dtype=int)
        ratings = np.asarray(ratings, dtype=float)
        if not users.shape == items.shape == ratings.shape:
            raise ShapeMismatchError("users, items and ratings must have equal lengths.")
        if arms_per_round < 1:
            raise InvalidArgumentError(f"arms_per_round must be >= 1, got {arms_per_round}.")

        keep = np.array([int(i) in item_groups for i in items], dtype=bool)
        if not keep.any():
            raise InvalidArgumentError("No rated item has a group.")
        if not keep.all():
            logger.warning(f"Dropping {int((~keep).sum())} ratings of items without a group.")
        users, items, ratings = users[keep], items[keep], ratings[keep]

        self.user_ids, user_idx = np.unique(users, return_inverse=True)
        self.item_ids, item_idx = np.unique(items, return_inverse=True)
        group_ids = sorted({g for item in self.item_ids for g in item_groups[int(item)]})
        self.group_index = {g: i for i, g in enumerate(group_ids)}
        self.item_group_idx = [[self.group_index[g] for g in item_groups[int(item)]] for item in self.item_ids]

        span = ratings.max() - ratings.min()
        normalized = (ratings - ratings.min()) / span if span > 0 else np.ones_like(ratings)
        self.ratings = np.zeros((len(self.user_ids), len(self.item_ids)))
        self.ratings[user_idx, item_idx] = normalized
        # membership from the triples; a normalized 0 is still a rating
        self.rated = [np.unique(item_idx[user_idx == u]) for u in range(len(self.user_ids))]

        rank = min(rank, *self.ratings.shape)
        svd = truncated_svd(self.ratings, rank, iters=svd_iters, seed=world_seed)
        self.user_factors = svd.left_factors
        self.item_factors = svd.right_factors

        self.n_groups = len(group_ids)
        self.d_x = rank + 1
        self.arms_per_round = arms_per_round
        logger.info(
            f"Recommendation world: {len(self.user_ids)} users, {len(self.item_ids)} items, "
            f"{self.n_groups} groups, d_x={self.d_x}"
        )

    def _draw_round(self) -> EnvRound:
        user = int(self.rng.integers(len(self.user_ids)))
        rated = self.rated[user]
        if len(rated) > self.arms_per_round:
            rated = np.sort(self.rng.choice(rated, size=self.arms_per_round, replace=False))

        candidates, expected = [], []
        for item in rated:
            x = gmf_context(self.user_factors[user], self.item_factors[item])
            for group in self.item_group_idx[item]:
                candidates.append(ArmContext(features=x, group=group, arm_id=int(self.item_ids[item])))
                expected.append(self.ratings[user, item])
        return EnvRound(candidates=candidates, expected=np.array(expected))

    @classmethod
    def from_csv(cls, ratings_path: str | Path, groups_path: str | Path, seed: int, **kwargs) -> "RecommendationEnv":
        users, items, ratings = load_ratings(ratings_path)
        return cls(users, items, ratings, load_item_groups(groups_path), seed=seed, **kwargs)


@ENVIRONMENTS.register("recommendation")
def build_recommendation(seed: int, ratings_path: str, groups_path: str, **params) -> RecommendationEnv:
    return RecommendationEnv.from_csv(ratings_path, groups_path, seed=seed, **params)
