import numpy as np
import pytest

from agg_bandit.config import AgentConfig
from agg_bandit.embedding import ArmContext
from agg_bandit.environments import SyntheticEnv, SyntheticEnvConfig
from agg_bandit.environments.base import Environment, EnvRound
from agg_bandit.errors import ConfigError, InvalidArgumentError
from agg_bandit.policy import (
    POLICIES,
    AggUcbAgent,
    LinUcbAgent,
    NeuralIndAgent,
    NeuralPoolAgent,
    OracleAgent,
    build_agent,
)
from agg_bandit.trainer import TrainConfig
from tests.conftest import make_contexts, unit_vectors

SMALL = AgentConfig(gamma=0.1, m=8, L=2, train=TrainConfig(eta=0.01, steps=5))


class LinearEnv(Environment):
    """Reward ``0.5 + 0.5 theta_c . x`` with a fixed per-group ``theta_c``."""

    def __init__(self, n_groups: int, d_x: int, seed: int, arms: int = 6) -> None:
        super().__init__(seed)
        self.n_groups, self.d_x, self.arms = n_groups, d_x, arms
        self.theta = unit_vectors(np.random.default_rng(99), n_groups, d_x)

    def _draw_round(self) -> EnvRound:
        features = unit_vectors(self.rng, self.arms, self.d_x)
        groups = np.arange(self.arms) % self.n_groups
        expected = 0.5 + 0.5 * np.einsum("bd,bd->b", features, self.theta[groups])
        candidates = [ArmContext(features=x, group=int(c), arm_id=i) for i, (x, c) in enumerate(zip(features, groups))]
        return EnvRound(candidates=candidates, expected=expected)


def play(agent, env: Environment, rounds: int) -> list[float]:
    regrets = []
    for _ in range(rounds):
        current = env.next_round()
        decision = agent.step(current.candidates)
        agent.update(decision, env.observe(decision.index))
        regrets.append(env.regret(decision.index))
    return regrets


class TestRegistry:
    def test_registered_algorithms(self) -> None:
        assert POLICIES.names() == ["agg_ucb", "lin_ucb", "neural_ind", "neural_pool", "oracle"]

    def test_unknown_algorithm(self) -> None:
        env = LinearEnv(2, 3, seed=0)
        with pytest.raises(ConfigError, match="Unknown algorithm"):
            build_agent("thompson", env, SMALL)

    def test_build_agent_types(self) -> None:
        env = LinearEnv(2, 3, seed=0)
        assert isinstance(build_agent("agg_ucb", env, SMALL), AggUcbAgent)
        oracle = build_agent("oracle", env, SMALL)
        assert isinstance(oracle, OracleAgent)
        assert oracle.env is env


class TestStep:
    def test_single_candidate_is_chosen(self, rng: np.random.Generator) -> None:
        agent = AggUcbAgent(3, 4, SMALL, seed=0)
        decision = agent.step(make_contexts(rng, 1, 4, 3))
        assert decision.index == 0
        assert decision.scores.shape == (1,)

    def test_empty_round(self) -> None:
        with pytest.raises(InvalidArgumentError):
            AggUcbAgent(2, 3, SMALL).step([])

    def test_candidate_outside_agent_shape(self) -> None:
        agent = AggUcbAgent(2, 3, SMALL)
        with pytest.raises(InvalidArgumentError):
            agent.step([ArmContext(features=np.array([1.0, 0.0]), group=0)])
        with pytest.raises(InvalidArgumentError):
            agent.step([ArmContext(features=np.array([1.0, 0.0, 0.0]), group=2)])

    def test_zero_gamma_is_greedy(self, rng: np.random.Generator) -> None:
        agent = AggUcbAgent(3, 4, AgentConfig(gamma=0.0, m=8, train=SMALL.train), seed=1)
        decision = agent.step(make_contexts(rng, 6, 4, 3))
        np.testing.assert_array_equal(decision.scores, decision.points)
        assert decision.index == int(np.argmax(decision.points))

    def test_score_is_point_plus_scaled_width(self, rng: np.random.Generator) -> None:
        decision = AggUcbAgent(3, 4, SMALL, seed=2).step(make_contexts(rng, 5, 4, 3))
        np.testing.assert_allclose(decision.scores, decision.points + 0.1 * decision.widths, rtol=0, atol=1e-15)
        assert decision.score == decision.scores.max()

    def test_identical_candidates_pick_first(self, rng: np.random.Generator) -> None:
        ctx = make_contexts(rng, 1, 4, 3)[0]
        twins = [ArmContext(features=ctx.features, group=ctx.group, arm_id=i) for i in range(4)]
        for agent in (AggUcbAgent(3, 4, SMALL), LinUcbAgent(3, 4, SMALL), NeuralIndAgent(3, 4, SMALL)):
            assert agent.step(twins).index == 0

    def test_step_is_pure(self, rng: np.random.Generator) -> None:
        agent = AggUcbAgent(3, 4, SMALL, seed=3)
        candidates = make_contexts(rng, 5, 4, 3)
        first, second = agent.step(candidates), agent.step(candidates)
        np.testing.assert_array_equal(first.scores, second.scores)
        assert first.index == second.index
        assert agent.generation == 0
        assert len(agent.buffer) == 0
        assert agent.graph.counts.sum() == 0

    def test_same_context_under_two_groups_is_scored_per_group(self, rng: np.random.Generator) -> None:
        x = unit_vectors(rng, 1, 4)[0]
        agent = AggUcbAgent(3, 4, SMALL, seed=4)
        decision = agent.step([ArmContext(features=x, group=0, arm_id="a"), ArmContext(features=x, group=2, arm_id="a")])
        assert decision.points.shape == (2,)
        assert decision.points[0] != decision.points[1]


class TestUpdate:
    def test_stale_decision_is_rejected(self, rng: np.random.Generator) -> None:
        agent = AggUcbAgent(3, 4, SMALL, seed=5)
        decision = agent.step(make_contexts(rng, 3, 4, 3))
        agent.update(decision, 0.5)
        assert agent.generation == 1
        with pytest.raises(InvalidArgumentError, match="generation"):
            agent.update(decision, 0.5)

    def test_update_grows_buffer_and_shrinks_width(self, rng: np.random.Generator) -> None:
        agent = AggUcbAgent(3, 4, SMALL, seed=6)
        decision = agent.step(make_contexts(rng, 4, 4, 3))
        agent.update(decision, 0.7)
        assert len(agent.buffer) == 1
        assert agent.buffer.rewards.tolist() == [0.7]
        assert agent.confidence.width(decision.gradient) < decision.width
        assert np.isfinite(agent.last_loss)

    @pytest.mark.parametrize(("ingest", "expected"), [("all", 4), ("chosen", 1)])
    def test_graph_ingest_modes(self, rng: np.random.Generator, ingest: str, expected: int) -> None:
        config = AgentConfig(gamma=0.1, m=8, train=SMALL.train, ingest=ingest)
        agent = AggUcbAgent(3, 4, config, seed=7)
        decision = agent.step(make_contexts(rng, 4, 4, 3))
        agent.update(decision, 0.3)
        assert agent.graph.counts.sum() == expected

    def test_cold_start_retrains_from_initial_params(self, rng: np.random.Generator) -> None:
        cold = AggUcbAgent(2, 3, SMALL, seed=8)
        warm = AggUcbAgent(2, 3, SMALL.with_overrides(warm_start=True), seed=8)
        for _ in range(3):
            candidates = make_contexts(rng, 3, 3, 2)
            for agent in (cold, warm):
                agent.update(agent.step(candidates), 0.9)
        np.testing.assert_array_equal(cold.theta_0.flatten(), warm.theta_0.flatten())
        assert not np.array_equal(cold.params.flatten(), warm.params.flatten())

    def test_invalid_reward(self, rng: np.random.Generator) -> None:
        agent = AggUcbAgent(2, 3, SMALL)
        decision = agent.step(make_contexts(rng, 2, 3, 2))
        with pytest.raises(InvalidArgumentError):
            agent.update(decision, 1.5)


class TestBaselines:
    def test_neural_ind_with_one_group_matches_pool(self, rng: np.random.Generator) -> None:
        pool, ind = NeuralPoolAgent(1, 4, SMALL, seed=9), NeuralIndAgent(1, 4, SMALL, seed=9)
        for _ in range(4):
            candidates = make_contexts(rng, 3, 4, 1)
            a, b = pool.step(candidates), ind.step(candidates)
            np.testing.assert_array_equal(a.scores, b.scores)
            pool.update(a, 0.4)
            ind.update(b, 0.4)

    def test_neural_pool_ignores_groups(self, rng: np.random.Generator) -> None:
        x = unit_vectors(rng, 1, 4)[0]
        decision = NeuralPoolAgent(3, 4, SMALL, seed=10).step(
            [ArmContext(features=x, group=0), ArmContext(features=x, group=2)]
        )
        assert decision.points[0] == decision.points[1]

    def test_lin_ucb_learns_linear_rewards(self) -> None:
        env = LinearEnv(2, 4, seed=11)
        agent = LinUcbAgent(2, 4, AgentConfig(gamma=0.5, lam=1.0))
        regrets = play(agent, env, 400)
        assert np.mean(regrets[-100:]) < 0.5 * np.mean(regrets[:20])

    def test_lin_ucb_loss_is_post_update_residual(self) -> None:
        agent = LinUcbAgent(1, 2, AgentConfig(lam=1.0))
        decision = agent.step([ArmContext(features=np.array([1.0, 0.0]), group=0)])
        agent.update(decision, 1.0)
        # theta = (I + x x^T)^-1 x = x / 2
        assert agent.last_loss == pytest.approx(0.5 * 0.25)

    def test_oracle_has_zero_regret(self) -> None:
        env = SyntheticEnv(SyntheticEnvConfig(n_groups=4, d_x=5), seed=12)
        agent = build_agent("oracle", env, SMALL)
        assert sum(play(agent, env, 50)) == 0.0

    def test_oracle_needs_current_round(self, rng: np.random.Generator) -> None:
        with pytest.raises(InvalidArgumentError):
            OracleAgent(2, 3, SMALL).step(make_contexts(rng, 2, 3, 2))


def test_fixed_seed_decisions_are_reproducible() -> None:
    sequences = []
    for _ in range(2):
        env = SyntheticEnv(SyntheticEnvConfig(n_groups=3, d_x=4, world_seed=1), seed=13)
        agent = AggUcbAgent(3, 4, SMALL, seed=13)
        chosen = []
        for _ in range(15):
            decision = agent.step(env.next_round().candidates)
            agent.update(decision, env.observe(decision.index))
            chosen.append((decision.index, decision.score))
        sequences.append(chosen)
    assert sequences[0] == sequences[1]
