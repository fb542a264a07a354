"""Adaptive range ladders: tetra-iterated and geometric variants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotquant.adaptive import (
    AdaptiveCodeword,
    GainCodeword,
    aguq_decode,
    aguq_quantize,
    atuq_decode,
    atuq_encode,
    geometric_ladder,
    tetra_ladder,
)
from rotquant.errors import CodecError, ConfigError


def _rng(seed=0):
    return np.random.default_rng(seed)


class TestTetraLadder:
    def test_example_bounds(self):
        ladder = tetra_ladder(m=3.0, m0=0.0, h=3)
        np.testing.assert_allclose(
            ladder.bounds, [math.sqrt(3), math.sqrt(3 * math.e), math.sqrt(3 * math.e**math.e)],
        )
        np.testing.assert_allclose(ladder.bounds, [1.732, 2.854, 6.744], atol=5e-3)

    def test_single_bound(self):
        np.testing.assert_allclose(tetra_ladder(3.0, 0.0, 1).bounds, [math.sqrt(3)])

    def test_offset_enters_every_bound(self):
        ladder = tetra_ladder(m=2.0, m0=1.5, h=3)
        assert ladder.bounds[0] == pytest.approx(math.sqrt(3.5))
        assert ladder.bounds[1] == pytest.approx(math.sqrt(2 * math.e + 1.5))

    def test_top_bound_covers_unit_norm_at_default_params(self):
        # m=3B^2/d, m0=(2B^2/d) ln s with B=1, d=1024, s=2: top bound >= 1,
        # the condition that makes the quantizer unbiased on the unit ball
        m0 = (2.0 / 1024) * math.log(2)
        ladder = tetra_ladder(3.0 / 1024, m0, 4)
        assert ladder.bounds[3] >= 1.0

    def test_saturation_sentinel(self):
        ladder = tetra_ladder(1.0, 0.0, 8)
        assert np.isinf(ladder.bounds[-1])
        assert np.all(np.diff(ladder.bounds[np.isfinite(ladder.bounds)]) > 0)

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            tetra_ladder(0.0, 0.0, 3)
        with pytest.raises(ValueError):
            tetra_ladder(1.0, -1.0, 3)
        with pytest.raises(ValueError):
            tetra_ladder(1.0, 0.0, 0)

    @given(st.integers(min_value=1, max_value=8))
    def test_bounds_nondecreasing(self, h):
        ladder = tetra_ladder(0.5, 0.25, h)
        finite = ladder.bounds[np.isfinite(ladder.bounds)]
        assert np.all(np.diff(finite) >= 0)


class TestGeometricLadder:
    def test_example(self):
        np.testing.assert_allclose(geometric_ladder(1.0, 4.0, 2).bounds, [1.0, 2.0])

    def test_single_bound(self):
        np.testing.assert_allclose(geometric_ladder(2.0, 2.0, 1).bounds, [2.0])

    def test_growth_factor_from_horizon(self):
        # a_g = (mu*T)^(1/(h_g+1)) with mu*T = 256, h_g = 3 gives a_g = 4
        a_g = 256.0 ** (1.0 / 4.0)
        np.testing.assert_allclose(geometric_ladder(1.0, a_g, 3).bounds, [1.0, 2.0, 4.0])

    def test_ratio_exact(self):
        ladder = geometric_ladder(1.3, 2.0, 5)
        ratios = (ladder.bounds[1:] / ladder.bounds[:-1]) ** 2
        np.testing.assert_allclose(ratios, 2.0)

    def test_rejects_non_expanding(self):
        with pytest.raises(ValueError):
            geometric_ladder(1.0, 1.0, 3)
        with pytest.raises(ValueError):
            geometric_ladder(0.0, 2.0, 3)


class TestRangeSelection:
    @given(
        st.floats(min_value=0.0, max_value=100.0, allow_nan=False),
        st.integers(min_value=1, max_value=6),
    )
    @settings(max_examples=80)
    def test_minimality(self, magnitude, h_g):
        ladder = geometric_ladder(1.0, 2.0, h_g)
        j = ladder.select(magnitude)
        assert j == 0 or magnitude > ladder.bounds[j - 1]

    def test_exact_bound_selects_lower_range(self):
        ladder = geometric_ladder(1.0, 4.0, 3)  # bounds [1, 2, 4]
        assert ladder.select(2.0) == 1

    def test_above_top_selects_top(self):
        ladder = geometric_ladder(1.0, 4.0, 2)
        assert ladder.select(100.0) == 1


class TestAtuq:
    LADDER = tetra_ladder(3.0, 0.0, 3)  # bounds ~ [1.732, 2.854, 6.744]

    def test_selects_smallest_covering_range(self):
        cw = atuq_encode(np.array([2.0, 0.1]), self.LADDER, 4, _rng())
        assert cw.range_index == 1

    def test_zero_vector_middle_level(self):
        cw = atuq_encode(np.zeros(3), self.LADDER, 5, _rng())
        assert cw.range_index == 0
        assert np.all(cw.symbols == 2)  # middle of 5 levels is exactly 0
        np.testing.assert_allclose(atuq_decode(cw, self.LADDER, 5), 0.0)

    def test_overflow_at_top_range(self):
        cw = atuq_encode(np.array([100.0, 0.0]), self.LADDER, 4, _rng())
        assert cw.range_index == 2
        assert cw.symbols[0] == 4
        assert cw.overflow_count(4) == 1
        decoded = atuq_decode(cw, self.LADDER, 4)
        assert decoded[0] == 0.0

    def test_negative_bottom_bound_exact(self):
        M0 = float(self.LADDER.bounds[0])
        cw = atuq_encode(np.array([-M0]), self.LADDER, 4, _rng())
        np.testing.assert_allclose(atuq_decode(cw, self.LADDER, 4), [-M0])

    def test_all_overflow_decodes_to_zero(self):
        cw = AdaptiveCodeword(range_index=1, symbols=np.array([4, 4, 4]))
        np.testing.assert_allclose(atuq_decode(cw, self.LADDER, 4), 0.0)

    def test_rejects_empty_input(self):
        with pytest.raises(ValueError):
            atuq_encode(np.array([]), self.LADDER, 4, _rng())

    def test_rejects_out_of_range_index(self):
        with pytest.raises(CodecError):
            atuq_decode(AdaptiveCodeword(range_index=3, symbols=np.zeros(1, int)), self.LADDER, 4)

    def test_saturated_range_selection_raises(self):
        ladder = tetra_ladder(1.0, 0.0, 8)  # top bounds saturate to inf
        with pytest.raises(ConfigError):
            atuq_encode(np.array([1e200]), ladder, 4, _rng())

    def test_unbiased_when_covered(self):
        rng = _rng(11)
        y = np.array([1.9, -0.6, 2.5])
        n = 40000
        acc = np.zeros(3)
        acc2 = np.zeros(3)
        for _ in range(n):
            d = atuq_decode(atuq_encode(y, self.LADDER, 4, rng), self.LADDER, 4)
            acc += d
            acc2 += d * d
        mean = acc / n
        se = np.sqrt(np.maximum(acc2 / n - mean**2, 0) / n)
        assert np.all(np.abs(mean - y) <= 4.0 * se + 1e-12)

    def test_subgaussian_mse_ladder_bound(self):
        # iid subgaussian coordinates with variance factor v, ladder m=3v,
        # m0=2v ln s: per-coordinate MSE <= v (9 + 3 ln s)/(k-1)^2
        v, s, k, h = 1.0, 2, 7, 4
        ladder = tetra_ladder(3.0 * v, 2.0 * v * math.log(s), h)
        rng = _rng(12)
        n = 40000
        err2 = np.empty(n)
        for i in range(n):
            y = math.sqrt(v) * rng.standard_normal(s)
            d = atuq_decode(atuq_encode(y, ladder, k, rng), ladder, k)
            err2[i] = float(np.mean((d - y) ** 2))
        bound = v * (9.0 + 3.0 * math.log(s)) / (k - 1) ** 2
        se = err2.std(ddof=1) / math.sqrt(n)
        assert err2.mean() <= bound + 3.0 * se


class TestAguq:
    def test_split_between_levels(self):
        # g=1.5 on bounds [1, 2]: range 1, grid {0, 1, 2}; outputs 1 or 2
        ladder = geometric_ladder(1.0, 4.0, 2)
        vals = [aguq_quantize(1.5, ladder, 3, _rng(i))[1] for i in range(400)]
        assert set(vals) == {1.0, 2.0}
        assert np.mean(vals) == pytest.approx(1.5, abs=0.1)

    def test_zero_gain(self):
        ladder = geometric_ladder(1.0, 4.0, 2)
        cw, val = aguq_quantize(0.0, ladder, 3, _rng())
        assert (cw.range_index, cw.symbol, val) == (0, 0, 0.0)

    def test_overflow_decodes_to_zero(self):
        ladder = geometric_ladder(1.0, 4.0, 2)  # bounds [1, 2]
        cw, val = aguq_quantize(10.0, ladder, 3, _rng())
        assert cw.symbol == 3
        assert val == 0.0

    def test_rejects_negative_gain(self):
        with pytest.raises(ValueError):
            aguq_quantize(-0.1, geometric_ladder(1.0, 2.0, 2), 3, _rng())

    def test_decode_range_check(self):
        with pytest.raises(CodecError):
            aguq_decode(GainCodeword(range_index=5, symbol=0), geometric_ladder(1.0, 2.0, 2), 3)

    def test_second_moment_bound(self):
        # E[Q(g)^2] <= B^2 (1/(4(k_g-1)^2) + a_g(h_g-1)/(4(k_g-1)^2) + 1)
        B, a_g, h_g, k_g = 1.0, 2.0, 4, 4
        ladder = geometric_ladder(B, a_g, h_g)
        rng = _rng(13)
        n = 60000
        g = np.minimum(np.abs(rng.standard_normal(n)) * B / math.sqrt(2), ladder.bounds[-1])
        vals = np.array([aguq_quantize(float(x), ladder, k_g, rng)[1] for x in g])
        assert float(np.mean(g * g)) <= B * B  # mean-square-bounded inputs
        bound = B * B * (
            1.0 / (4 * (k_g - 1) ** 2) + a_g * (h_g - 1) / (4 * (k_g - 1) ** 2) + 1.0
        )
        se = (vals**2).std(ddof=1) / math.sqrt(n)
        assert float(np.mean(vals**2)) <= bound + 3.0 * se

    def test_bias_bound(self):
        # |E[Q(g) - g]| <= B^2 / M_top for mean-square-bounded gains
        B, a_g, h_g, k_g = 1.0, 2.0, 3, 4
        ladder = geometric_ladder(B, a_g, h_g)
        rng = _rng(14)
        n = 60000
        # spiky distribution: mass above the top bound triggers real bias
        g = np.where(rng.random(n) < 0.02, 3.0 * B, 0.7 * B)
        assert float(np.mean(g * g)) <= B * B
        errs = np.array([aguq_quantize(float(x), ladder, k_g, rng)[1] - x for x in g])
        se = errs.std(ddof=1) / math.sqrt(n)
        assert abs(errs.mean()) <= B * B / float(ladder.bounds[-1]) + 3.0 * se
