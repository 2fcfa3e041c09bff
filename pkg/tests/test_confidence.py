import numpy as np
import pytest

from agg_bandit.confidence import ConfidenceMode, ConfidenceState
from agg_bandit.const import EXACT_MODE_MAX_PARAMS
from agg_bandit.errors import InvalidArgumentError, ShapeMismatchError


def basis(p: int, i: int) -> np.ndarray:
    e = np.zeros(p)
    e[i] = 1.0
    return e


class TestNew:
    def test_initial_width_of_unit_vector(self) -> None:
        assert ConfidenceState(4, lam=1.0, m=16, mode="exact").width(basis(4, 0)) == pytest.approx(np.sqrt(1 / 16))

    def test_zero_gradient_has_zero_width(self) -> None:
        assert ConfidenceState(4, lam=1.0, m=16, mode="exact").width(np.zeros(4)) == 0.0

    def test_width_is_positively_homogeneous(self, rng: np.random.Generator) -> None:
        state = ConfidenceState(6, lam=0.5, m=8, mode="exact")
        g = rng.standard_normal(6)
        assert state.width(3.0 * g) == pytest.approx(3.0 * state.width(g), rel=1e-12)

    @pytest.mark.parametrize("kwargs", [{"p": 0, "lam": 1.0}, {"p": 3, "lam": 0.0}])
    def test_invalid(self, kwargs: dict[str, float]) -> None:
        with pytest.raises(InvalidArgumentError):
            ConfidenceState(m=4, **kwargs)

    def test_auto_mode_resolution(self) -> None:
        assert ConfidenceState(10, 1.0, 4).mode is ConfidenceMode.EXACT
        assert ConfidenceMode.AUTO.resolve(EXACT_MODE_MAX_PARAMS + 1) is ConfidenceMode.DIAGONAL
        assert ConfidenceMode.DIAGONAL.resolve(3) is ConfidenceMode.DIAGONAL


class TestWidth:
    def test_after_parallel_update(self) -> None:
        m = 10
        state = ConfidenceState(2, lam=1.0, m=m, mode="exact").update(basis(2, 0))
        assert state.width(basis(2, 0)) == pytest.approx(np.sqrt(0.5 / m), abs=1e-15)

    def test_orthogonal_update_leaves_width(self) -> None:
        state = ConfidenceState(2, lam=1.0, m=9, mode="exact").update(basis(2, 1))
        assert state.width(basis(2, 0)) == pytest.approx(np.sqrt(1 / 9), abs=1e-15)

    def test_matches_direct_solve(self, rng: np.random.Generator) -> None:
        p, m, lam = 50, 12, 0.7
        state = ConfidenceState(p, lam=lam, m=m, mode="exact")
        z = lam * np.eye(p)
        for _ in range(200):
            g = rng.standard_normal(p) / np.sqrt(p)
            state.update(g)
            z += np.outer(g, g)
        g = rng.standard_normal(p)
        expected = np.sqrt(g @ np.linalg.solve(z, g) / m)
        assert state.width(g) == pytest.approx(expected, rel=1e-8)

    def test_dimension_mismatch(self) -> None:
        with pytest.raises(ShapeMismatchError):
            ConfidenceState(3, 1.0, 4, mode="exact").width(np.zeros(4))

    def test_batched_widths(self, rng: np.random.Generator) -> None:
        state = ConfidenceState(5, 1.0, 4, mode="exact").update(rng.standard_normal(5))
        grads = rng.standard_normal((3, 5))
        np.testing.assert_allclose(state.widths(grads), [state.width(g) for g in grads], rtol=1e-12)


class TestUpdate:
    def test_zero_update_is_noop(self, rng: np.random.Generator) -> None:
        state = ConfidenceState(5, 1.0, 4, mode="exact").update(rng.standard_normal(5))
        before = state.z_inv.copy()
        state.update(np.zeros(5))
        np.testing.assert_array_equal(state.z_inv, before)

    def test_update_shrinks_own_width(self, rng: np.random.Generator) -> None:
        for mode in ("exact", "diagonal"):
            state = ConfidenceState(6, 1.0, 4, mode=mode)
            g = rng.standard_normal(6)
            before = state.width(g)
            state.update(g)
            assert state.width(g) < before

    def test_inverse_matches_direct_inverse(self, rng: np.random.Generator) -> None:
        p = 50
        state = ConfidenceState(p, lam=1.0, m=1, mode="exact")
        z = np.eye(p)
        probe = rng.standard_normal(p)
        previous = state.width(probe)
        for _ in range(200):
            g = rng.standard_normal(p) / np.sqrt(p)
            state.update(g)
            z += np.outer(g, g)
            current = state.width(probe)
            assert current <= previous + 1e-12
            previous = current
        assert np.max(np.abs(state.z_inv - np.linalg.inv(z))) <= 1e-8
        np.testing.assert_array_equal(state.z_inv, state.z_inv.T)
        assert np.linalg.eigvalsh(state.z_inv).min() > 0

    def test_diagonal_mode_accumulates_squares(self) -> None:
        state = ConfidenceState(3, lam=2.0, m=4, mode="diagonal")
        state.update(np.array([1.0, 2.0, 0.0]))
        np.testing.assert_array_equal(state.z_diag, [3.0, 6.0, 2.0])
        assert state.width(np.array([1.0, 1.0, 1.0])) == pytest.approx(np.sqrt((1 / 3 + 1 / 6 + 1 / 2) / 4))

    def test_exact_and_diagonal_agree_on_axis_aligned_updates(self, rng: np.random.Generator) -> None:
        exact = ConfidenceState(4, 1.0, 3, mode="exact")
        diagonal = ConfidenceState(4, 1.0, 3, mode="diagonal")
        for i in rng.integers(4, size=10):
            g = float(rng.uniform(0.5, 2.0)) * basis(4, int(i))
            exact.update(g)
            diagonal.update(g)
        probe = rng.standard_normal(4)
        assert exact.width(probe) == pytest.approx(diagonal.width(probe), rel=1e-12)
