import numpy as np
import pytest

from agg_bandit.const import RUN_SLOW_TESTS
from agg_bandit.embedding import ArmContext


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption("--run-slow", action="store_true", default=False, help="Run tests marked slow.")


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    if config.getoption("--run-slow") or RUN_SLOW_TESTS:
        return
    skip_slow = pytest.mark.skip(reason="slow; use --run-slow or AGG_BANDIT_RUN_SLOW=true")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def unit_vectors(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    x = rng.standard_normal((n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def make_contexts(rng: np.random.Generator, n: int, d: int, n_groups: int) -> list[ArmContext]:
    return [
        ArmContext(features=x, group=int(c), arm_id=i)
        for i, (x, c) in enumerate(zip(unit_vectors(rng, n, d), rng.integers(n_groups, size=n)))
    ]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
