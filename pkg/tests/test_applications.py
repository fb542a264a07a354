"""Distributed mean estimation and the rate-distortion codec."""

import math

import numpy as np
import pytest

from rotquant.applications import DmeInstance, RdConfig, dme_estimate, rd_quantize
from rotquant.errors import ConfigError
from rotquant.numerics import SeedBundle


class TestDme:
    def test_all_zero_clients_estimate_exactly(self):
        inst = DmeInstance.from_master_seed(np.zeros((4, 16)), SeedBundle(0))
        res = dme_estimate(inst)
        np.testing.assert_allclose(res.estimate, 0.0)
        assert res.squared_error == 0.0

    def test_rejects_out_of_ball_clients(self):
        vectors = np.zeros((2, 8))
        vectors[0, 0] = 1.5
        with pytest.raises(ValueError):
            DmeInstance.from_master_seed(vectors, SeedBundle(0))

    def test_requires_one_seed_per_client(self):
        with pytest.raises(ValueError):
            DmeInstance(vectors=np.zeros((3, 4)), seeds=(SeedBundle(0),))

    def test_client_seeds_pairwise_distinct(self):
        inst = DmeInstance.from_master_seed(np.zeros((6, 4)), SeedBundle(1))
        assert len(set(inst.seeds)) == 6

    def test_bits_per_client_formula(self):
        rng = np.random.default_rng(2)
        vectors = rng.standard_normal((3, 256))
        vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
        res = dme_estimate(DmeInstance.from_master_seed(vectors, SeedBundle(2)))
        # d=256: h=4, s=2, k=7 -> 128*2 + 256*3 bits
        assert res.bits_per_client == 128 * 2 + 256 * 3

    def test_error_decays_with_clients(self):
        rng = np.random.default_rng(3)
        errs = {}
        for n in (4, 16):
            vals = []
            for trial in range(200):
                vectors = rng.standard_normal((n, 64))
                vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
                inst = DmeInstance.from_master_seed(vectors, SeedBundle(3), trial)
                vals.append(dme_estimate(inst).squared_error)
            errs[n] = float(np.mean(vals))
            se = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
            assert errs[n] <= 1.0 / n + 3.0 * se
        assert errs[16] < errs[4]


class TestRateDistortion:
    CFG = RdConfig(v=1.0, D_target=0.05, d=512)

    def test_resolved_parameters(self):
        p = self.CFG.resolve()
        assert (p.h, p.s, p.k) == (4, 2, 31)

    def test_rate_is_exact_bit_count(self):
        rng = np.random.default_rng(4)
        res = rd_quantize(rng.standard_normal(512), self.CFG, SeedBundle(4))
        # ceil(512/2)*2 header bits + 512*5 symbol bits over 512 dims
        assert res.rate_per_dim == 6.0

    def test_distortion_near_target(self):
        rng = np.random.default_rng(5)
        mses = [
            rd_quantize(rng.standard_normal(512), self.CFG, SeedBundle(5), counter=i).mse_per_dim
            for i in range(30)
        ]
        se = float(np.std(mses, ddof=1) / math.sqrt(len(mses)))
        assert float(np.mean(mses)) <= 0.05 + 3.0 * se

    def test_bounded_source_also_meets_target(self):
        rng = np.random.default_rng(6)
        x = rng.uniform(-math.sqrt(3), math.sqrt(3), size=512)  # variance 1
        res = rd_quantize(x, self.CFG, SeedBundle(6))
        assert res.mse_per_dim <= 0.05 + 0.01

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            rd_quantize(np.zeros(8), self.CFG, SeedBundle(0))

    def test_infeasible_target_rejected(self):
        with pytest.raises(ConfigError):
            RdConfig(v=1.0, D_target=0.5, d=64).resolve()
