"""Distributed mean estimation with per-client quantizers, and the
subgaussian rate-distortion quantizer (adaptive ranges, no rotation)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .numerics import SeedBundle
from .params import ResolvedParams, derive_params, make_ratq_config
from .ratq import ratq_decode, ratq_encode


@dataclass(frozen=True)
class DmeInstance:
    """n client vectors in the unit ball, each with its own seed bundle."""

    vectors: np.ndarray  # (n, d)
    seeds: tuple[SeedBundle, ...]

    def __post_init__(self):
        n = self.vectors.shape[0]
        if len(self.seeds) != n:
            raise ValueError(f"need one seed per client: {len(self.seeds)} != {n}")
        norms = np.linalg.norm(self.vectors, axis=1)
        if np.any(norms > 1.0 + 1e-9):
            raise ValueError("client vectors must lie in the unit ball")

    @classmethod
    def from_master_seed(cls, vectors: np.ndarray, master: SeedBundle, trial: int = 0):
        seeds = tuple(master.derive(trial, i) for i in range(vectors.shape[0]))
        return cls(vectors=np.asarray(vectors, dtype=np.float64), seeds=seeds)


@dataclass(frozen=True)
class DmeResult:
    estimate: np.ndarray
    bits_per_client: int
    squared_error: float


def dme_estimate(inst: DmeInstance, counter: int = 0) -> DmeResult:
    """Average of per-client quantized vectors versus the true sample mean."""
    n, d = inst.vectors.shape
    params = derive_params("dme", d=d)
    total = np.zeros(d)
    bits = 0
    for i in range(n):
        cfg = make_ratq_config(params, seed=inst.seeds[i])
        block = ratq_encode(inst.vectors[i], cfg, counter)
        total += ratq_decode(block, cfg, counter)
        bits = block.bit_len
    estimate = total / n
    mean = inst.vectors.mean(axis=0)
    err = float(np.sum((estimate - mean) ** 2))
    return DmeResult(estimate=estimate, bits_per_client=bits, squared_error=err)


@dataclass(frozen=True)
class RdConfig:
    """Rate-distortion run setup for subgaussian coordinates."""

    v: float
    D_target: float
    d: int

    def resolve(self) -> ResolvedParams:
        return derive_params("rd", d=self.d, v=self.v, D_target=self.D_target)


@dataclass(frozen=True)
class RdResult:
    reconstruction: np.ndarray
    rate_per_dim: float
    mse_per_dim: float


def rd_quantize(x: np.ndarray, cfg: RdConfig, seed: SeedBundle, counter: int = 0) -> RdResult:
    """Quantize a subgaussian vector without rotation; report the exact rate
    achieved by the bit codec and the realized per-dimension squared error."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (cfg.d,):
        raise ValueError(f"expected vector of length {cfg.d}, got {x.shape}")
    params = cfg.resolve()
    if cfg.d < np.log2(params.h):
        raise ConfigError(f"need d >= log2(h): d={cfg.d}, h={params.h}")
    qcfg = make_ratq_config(params, seed=seed, rotate=False)
    block = ratq_encode(x, qcfg, counter)
    recon = ratq_decode(block, qcfg, counter)
    return RdResult(
        reconstruction=recon,
        rate_per_dim=block.bit_len / cfg.d,
        mse_per_dim=float(np.mean((recon - x) ** 2)),
    )
