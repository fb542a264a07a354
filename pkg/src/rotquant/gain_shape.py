"""Gain-shape composite quantizer: adaptive geometric quantization of the
Euclidean norm times rotated adaptive quantization of the unit direction.

Gain and shape use distinct randomness streams, making their codewords
conditionally independent given the input.  Serialized form is the gain bits
followed by the shape bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .adaptive import GainCodeword, RangeLadder, aguq_decode, aguq_quantize
from .errors import CodecError, ConfigError
from .ratq import (
    EncodedBlock,
    RatqConfig,
    RatqQuantizer,
    RcsRatqQuantizer,
    draw_subsample_set,
    ratq_decode,
    ratq_encode,
    rcs_decode,
    rcs_encode,
)
from .scalar_quant import stochastic_round, symbols_to_values

GAIN_STREAM = 1  # extra stream-key component separating gain from shape rounding


@dataclass(frozen=True)
class GainShapeConfig:
    """Shape config (unit-norm parameters) plus the geometric gain ladder."""

    shape: RatqConfig
    gain_ladder: RangeLadder
    k_g: int
    mu_d: int | None = None  # shape subsampling size; None means full

    def __post_init__(self):
        if abs(self.shape.B - 1.0) > 1e-12:
            raise ConfigError("shape quantizer must be configured for the unit ball")
        if self.k_g < 2:
            raise ConfigError(f"need k_g >= 2 gain levels, got {self.k_g}")
        if self.mu_d is not None and self.shape.s != 1:
            raise ConfigError("subsampled shape coding requires subvector size s = 1")

    @property
    def h_g(self) -> int:
        return len(self.gain_ladder)

    @property
    def gain_bits(self) -> int:
        header = math.ceil(math.log2(self.h_g)) if self.h_g > 1 else 0
        return header + math.ceil(math.log2(self.k_g + 1))

    @property
    def shape_bits(self) -> int:
        if self.mu_d is None:
            return self.shape.bit_len
        return self.mu_d * (self.shape.header_width + self.shape.symbol_width)

    @property
    def bit_len(self) -> int:
        return self.gain_bits + self.shape_bits


@dataclass(frozen=True)
class AratqCodeword:
    gain: GainCodeword
    shape: EncodedBlock


def aratq_encode(y: np.ndarray, cfg: GainShapeConfig, counter: int = 0) -> AratqCodeword:
    """Quantize the norm adaptively and the direction with the shape quantizer."""
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise ValueError("input contains NaN or Inf")
    g = float(np.linalg.norm(y))
    if g == 0.0:
        shape_in = np.zeros(cfg.shape.d)
        shape_in[0] = 1.0  # zero-norm convention: the first basis vector
    else:
        shape_in = y / g
    gain_rng = cfg.shape.seed.stream("rounding", counter, GAIN_STREAM)
    gain_cw, _ = aguq_quantize(g, cfg.gain_ladder, cfg.k_g, gain_rng)
    if cfg.mu_d is None:
        shape_block = ratq_encode(shape_in, cfg.shape, counter)
    else:
        sset = draw_subsample_set(cfg.shape, cfg.mu_d, counter)
        shape_block = rcs_encode(shape_in, cfg.shape, sset, counter)
    return AratqCodeword(gain=gain_cw, shape=shape_block)


def aratq_decode(cw: AratqCodeword, cfg: GainShapeConfig, counter: int = 0) -> np.ndarray:
    gain = aguq_decode(cw.gain, cfg.gain_ladder, cfg.k_g)
    if cfg.mu_d is None:
        shape = ratq_decode(cw.shape, cfg.shape, counter)
    else:
        sset = draw_subsample_set(cfg.shape, cfg.mu_d, counter)
        shape = rcs_decode(cw.shape, cfg.shape, sset, counter)
    return gain * shape


def pack_gain(cw: GainCodeword, cfg: GainShapeConfig) -> tuple[int, int]:
    """Gain codeword as (value, width) for concatenation before the shape bits."""
    header = math.ceil(math.log2(cfg.h_g)) if cfg.h_g > 1 else 0
    sym_width = math.ceil(math.log2(cfg.k_g + 1))
    return (cw.range_index << sym_width) | cw.symbol, header + sym_width


def unpack_gain(value: int, cfg: GainShapeConfig) -> GainCodeword:
    sym_width = math.ceil(math.log2(cfg.k_g + 1))
    cw = GainCodeword(range_index=value >> sym_width, symbol=value & ((1 << sym_width) - 1))
    if cw.range_index >= cfg.h_g or cw.symbol > cfg.k_g:
        raise CodecError("gain codeword outside the codebook")
    return cw


def baseline_uniform_gain(
    g: float, M: float, k_g: int, rng: np.random.Generator
) -> tuple[int, float]:
    """Non-adaptive gain foil: stochastic rounding on a fixed [0, M] grid.

    Gains above M overflow and decode to 0, which is exactly the failure
    mode the adaptive ladder avoids.
    """
    if g < 0:
        raise ValueError(f"gain must be nonnegative, got {g}")
    sym = int(stochastic_round(np.array([g]), M, k_g, rng, nonnegative=True)[0])
    val = float(symbols_to_values(np.array([sym]), M, k_g, nonnegative=True)[0])
    return sym, val


class AratqQuantizer:
    """Round-trip gain-shape quantizer for the optimizer harness."""

    def __init__(self, cfg: GainShapeConfig):
        self.cfg = cfg

    @property
    def bits_per_vector(self) -> int:
        return self.cfg.bit_len

    def alpha_bound(self) -> float:
        c = self.cfg
        a_g = c.gain_ladder.params["a_g"]
        B = c.gain_ladder.params["B"]
        gain = math.sqrt(
            1.0 / (4 * (c.k_g - 1) ** 2)
            + a_g * (c.h_g - 1) / (4 * (c.k_g - 1) ** 2)
            + 1.0
        )
        if c.mu_d is None:
            shape = RatqQuantizer(c.shape).alpha_bound()
        else:
            shape = RcsRatqQuantizer(c.shape, c.mu_d).alpha_bound()
        return B * gain * shape

    def bias_bound(self) -> float:
        B = self.cfg.gain_ladder.params["B"]
        return B * B / float(self.cfg.gain_ladder.bounds[-1])

    def __call__(self, y: np.ndarray, counter: int = 0) -> np.ndarray:
        cw = aratq_encode(y, self.cfg, counter)
        return aratq_decode(cw, self.cfg, counter)


class UniformGainShapeQuantizer:
    """Experimental foil: fixed-range uniform gain times the same shape."""

    def __init__(self, cfg: GainShapeConfig, gain_range: float):
        self.cfg = cfg
        self.gain_range = gain_range

    @property
    def bits_per_vector(self) -> int:
        return self.cfg.bit_len

    def alpha_bound(self) -> float:
        return AratqQuantizer(self.cfg).alpha_bound()

    def __call__(self, y: np.ndarray, counter: int = 0) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        g = float(np.linalg.norm(y))
        shape_in = y / g if g > 0 else np.eye(1, self.cfg.shape.d, 0)[0]
        rng = self.cfg.shape.seed.stream("rounding", counter, GAIN_STREAM)
        _, gain = baseline_uniform_gain(g, self.gain_range, self.cfg.k_g, rng)
        if self.cfg.mu_d is None:
            block = ratq_encode(shape_in, self.cfg.shape, counter)
            shape = ratq_decode(block, self.cfg.shape, counter)
        else:
            sset = draw_subsample_set(self.cfg.shape, self.cfg.mu_d, counter)
            block = rcs_encode(shape_in, self.cfg.shape, sset, counter)
            shape = rcs_decode(block, self.cfg.shape, sset, counter)
        return gain * shape
