"""Coordinate-wise uniform quantizer with stochastic rounding."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotquant.errors import CodecError
from rotquant.scalar_quant import (
    UniformGrid,
    cuq_decode,
    cuq_encode,
    stochastic_round,
    symbols_to_values,
)


def _rng(seed=0):
    return np.random.default_rng(seed)


class TestUniformGrid:
    def test_symmetric_levels(self):
        grid = UniformGrid(M=1.0, k=3)
        np.testing.assert_allclose(grid.levels, [-1.0, 0.0, 1.0])

    def test_symmetric_endpoints_exact(self):
        grid = UniformGrid(M=2.5, k=6)
        assert grid.levels[0] == -2.5
        assert grid.levels[-1] == 2.5

    def test_nonnegative_levels(self):
        grid = UniformGrid(M=2.0, k=3, nonnegative=True)
        np.testing.assert_allclose(grid.levels, [0.0, 1.0, 2.0])

    def test_overflow_symbol_is_k(self):
        assert UniformGrid(M=1.0, k=4).overflow_symbol == 4

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            UniformGrid(M=1.0, k=1)
        with pytest.raises(ValueError):
            UniformGrid(M=0.0, k=3)
        with pytest.raises(ValueError):
            UniformGrid(M=np.inf, k=3)


class TestEncode:
    def test_midpoint_splits_between_bracketing_levels(self):
        grid = UniformGrid(M=1.0, k=3)
        symbols = cuq_encode(np.full(20000, 0.5), grid, _rng())
        assert set(np.unique(symbols)) == {1, 2}
        # decoded expectation 0.5: upper level w.p. 0.5
        frac_upper = np.mean(symbols == 2)
        assert frac_upper == pytest.approx(0.5, abs=0.02)

    def test_grid_endpoint_deterministic(self):
        grid = UniformGrid(M=1.0, k=3)
        symbols = cuq_encode(np.full(100, -1.0), grid, _rng())
        assert np.all(symbols == 0)

    def test_out_of_range_emits_overflow(self):
        grid = UniformGrid(M=1.0, k=3)
        np.testing.assert_array_equal(cuq_encode(np.array([1.2]), grid, _rng()), [3])
        np.testing.assert_array_equal(cuq_encode(np.array([-1.2]), grid, _rng()), [3])

    def test_nonnegative_out_of_range(self):
        grid = UniformGrid(M=1.0, k=3, nonnegative=True)
        np.testing.assert_array_equal(cuq_encode(np.array([1.5]), grid, _rng()), [3])

    def test_nonnegative_zero_deterministic(self):
        grid = UniformGrid(M=1.0, k=3, nonnegative=True)
        assert np.all(cuq_encode(np.zeros(50), grid, _rng()) == 0)

    def test_rejects_nan_and_inf(self):
        grid = UniformGrid(M=1.0, k=3)
        with pytest.raises(ValueError):
            cuq_encode(np.array([np.nan]), grid, _rng())
        with pytest.raises(ValueError):
            cuq_encode(np.array([np.inf]), grid, _rng())

    @given(
        st.integers(min_value=2, max_value=16),
        st.floats(min_value=-1.0, max_value=1.0, allow_nan=False),
        st.integers(min_value=0, max_value=2**31),
    )
    @settings(max_examples=60)
    def test_round_trip_moves_at_most_one_step(self, k, y, seed):
        grid = UniformGrid(M=1.0, k=k)
        decoded = cuq_decode(cuq_encode(np.array([y]), grid, _rng(seed)), grid)
        assert abs(decoded[0] - y) <= 2.0 / (k - 1) + 1e-12

    @given(st.integers(min_value=2, max_value=9), st.integers(min_value=0, max_value=50))
    @settings(max_examples=60)
    def test_exact_grid_points_deterministic(self, k, level_pick):
        grid = UniformGrid(M=1.0, k=k)
        level = level_pick % k
        y = grid.levels[level : level + 1]
        for seed in range(3):
            np.testing.assert_array_equal(cuq_encode(y, grid, _rng(seed)), [level])


class TestDecode:
    def test_symmetric_level_zero(self):
        grid = UniformGrid(M=1.0, k=3)
        np.testing.assert_allclose(cuq_decode(np.array([0]), grid), [-1.0])

    def test_overflow_decodes_to_zero(self):
        grid = UniformGrid(M=1.0, k=3)
        np.testing.assert_allclose(cuq_decode(np.array([3]), grid), [0.0])

    def test_nonnegative_top_level(self):
        grid = UniformGrid(M=2.0, k=3, nonnegative=True)
        np.testing.assert_allclose(cuq_decode(np.array([2]), grid), [2.0])

    def test_rejects_invalid_symbol(self):
        grid = UniformGrid(M=1.0, k=3)
        with pytest.raises(CodecError):
            cuq_decode(np.array([4]), grid)
        with pytest.raises(CodecError):
            cuq_decode(np.array([-1]), grid)


class TestStatistics:
    def test_unbiased_inside_range(self):
        grid = UniformGrid(M=1.0, k=5)
        rng = _rng(3)
        y = np.array([0.37])
        n = 100000
        decoded = cuq_decode(cuq_encode(np.repeat(y, n), grid, rng), grid)
        se = decoded.std(ddof=1) / np.sqrt(n)
        assert abs(decoded.mean() - y[0]) <= 4.0 * se

    def test_unbiased_nonnegative(self):
        grid = UniformGrid(M=2.0, k=4, nonnegative=True)
        rng = _rng(4)
        n = 100000
        decoded = cuq_decode(cuq_encode(np.full(n, 1.23), grid, rng), grid)
        se = decoded.std(ddof=1) / np.sqrt(n)
        assert abs(decoded.mean() - 1.23) <= 4.0 * se

    def test_symmetric_mse_bound(self):
        # per-coordinate in-range MSE <= M^2/(k-1)^2
        M, k, n = 1.0, 5, 100000
        grid = UniformGrid(M=M, k=k)
        rng = _rng(5)
        y = rng.uniform(-M, M, size=n)
        err2 = (cuq_decode(cuq_encode(y, grid, rng), grid) - y) ** 2
        se = err2.std(ddof=1) / np.sqrt(n)
        assert err2.mean() <= M * M / (k - 1) ** 2 + 3.0 * se

    def test_nonnegative_mse_bound(self):
        # per-coordinate in-range MSE <= M^2/(4(k-1)^2)
        M, k, n = 2.0, 4, 100000
        grid = UniformGrid(M=M, k=k, nonnegative=True)
        rng = _rng(6)
        y = rng.uniform(0, M, size=n)
        err2 = (cuq_decode(cuq_encode(y, grid, rng), grid) - y) ** 2
        se = err2.std(ddof=1) / np.sqrt(n)
        assert err2.mean() <= M * M / (4.0 * (k - 1) ** 2) + 3.0 * se


class TestPerCoordinateRange:
    def test_vector_valued_range(self):
        y = np.array([0.9, 5.0, -3.0])
        M = np.array([1.0, 10.0, 2.0])
        symbols = stochastic_round(y, M, 3, _rng())
        assert symbols[2] == 3  # only the third coordinate overflows its range
        vals = symbols_to_values(symbols, M, 3)
        assert vals[2] == 0.0
        assert abs(vals[0] - 0.9) <= 1.0
        assert abs(vals[1] - 5.0) <= 10.0
