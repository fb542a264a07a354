"""Rotate -> split -> adaptively quantize -> bit-pack pipeline, with the
shared-randomness coordinate subsampling layer and exact fixed-length codec.

Bitstream layout, per subvector in index order: the range index in
ceil(log2 h) bits, then each coordinate's level in ceil(log2(k+1)) bits, the
overflow symbol encoded as the value k; the final byte is zero-padded.
Rotation signs and the subsample set travel out-of-band as (seed, label,
counter) and never appear in the bitstream.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import bitstream
from .adaptive import RangeLadder
from .errors import CodecError, ConfigError
from .numerics import RotationOperator, SeedBundle, next_power_of_two, rotate
from .scalar_quant import stochastic_round, symbols_to_values

NORM_SLACK = 1e-9


@dataclass(frozen=True)
class RatqConfig:
    """Full parameter record for the rotated adaptive quantizer."""

    d: int
    B: float
    s: int
    k: int
    ladder: RangeLadder
    seed: SeedBundle
    rotate: bool = True
    norm_check: bool = True

    def __post_init__(self):
        if self.d < 1 or self.s < 1 or self.k < 2:
            raise ConfigError(f"invalid dimensions d={self.d}, s={self.s}, k={self.k}")
        if self.B <= 0:
            raise ConfigError(f"norm bound must be positive, got {self.B}")

    @property
    def dim(self) -> int:
        """Quantized dimension: padded to a power of two when rotating."""
        return next_power_of_two(self.d) if self.rotate else self.d

    @property
    def h(self) -> int:
        return len(self.ladder)

    @property
    def n_subvectors(self) -> int:
        return -(-self.dim // self.s)

    @property
    def header_width(self) -> int:
        return max(0, math.ceil(math.log2(self.h))) if self.h > 1 else 0

    @property
    def symbol_width(self) -> int:
        return math.ceil(math.log2(self.k + 1))

    @property
    def bit_len(self) -> int:
        return self.n_subvectors * self.header_width + self.dim * self.symbol_width

    def with_seed(self, seed: SeedBundle) -> "RatqConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class BlockLayout:
    n_subvectors: int
    header_width: int
    symbol_width: int
    subvector_len: int  # length of every subvector except possibly the last
    tail_len: int  # length of the last subvector (== subvector_len if s | dim)


@dataclass(frozen=True)
class EncodedBlock:
    """The wire artifact: packed bits plus layout metadata."""

    bits: bytes
    bit_len: int
    layout: BlockLayout


def _layout_for(cfg: RatqConfig) -> BlockLayout:
    tail = cfg.dim - cfg.s * (cfg.dim // cfg.s)
    return BlockLayout(
        n_subvectors=cfg.n_subvectors,
        header_width=cfg.header_width,
        symbol_width=cfg.symbol_width,
        subvector_len=cfg.s,
        tail_len=tail if tail else cfg.s,
    )


def pack_codewords(
    range_indices: np.ndarray, symbols: np.ndarray, layout: BlockLayout
) -> EncodedBlock:
    """Bit-pack per-subvector range indices and level symbols."""
    n, hb, kb = layout.n_subvectors, layout.header_width, layout.symbol_width
    s, tail = layout.subvector_len, layout.tail_len
    if range_indices.shape != (n,):
        raise CodecError(f"expected {n} range indices, got {range_indices.shape}")
    total = (n - 1) * s + tail
    if symbols.shape != (total,):
        raise CodecError(f"expected {total} symbols, got {symbols.shape}")

    n_full = n if tail == s else n - 1
    pieces = []
    if n_full:
        sym_bits = bitstream.field_bits(symbols[: n_full * s].reshape(n_full, s), kb)
        sym_bits = sym_bits.reshape(n_full, s * kb)
        if hb:
            hdr_bits = bitstream.field_bits(range_indices[:n_full], hb)
            pieces.append(np.hstack([hdr_bits, sym_bits]).ravel())
        else:
            pieces.append(sym_bits.ravel())
    if tail != s:
        if hb:
            pieces.append(bitstream.field_bits(range_indices[-1:], hb).ravel())
        pieces.append(bitstream.field_bits(symbols[n_full * s :], kb).ravel())
    bits = np.concatenate(pieces) if len(pieces) > 1 else pieces[0]
    return EncodedBlock(bits=bitstream.pack_bitarray(bits), bit_len=bits.size, layout=layout)


def unpack_codewords(block: EncodedBlock) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of pack_codewords; exact for every valid codeword stream."""
    lay = block.layout
    n, hb, kb = lay.n_subvectors, lay.header_width, lay.symbol_width
    s, tail = lay.subvector_len, lay.tail_len
    expected = n * hb + ((n - 1) * s + tail) * kb
    if block.bit_len != expected:
        raise CodecError(f"bit_len {block.bit_len} does not match layout ({expected})")
    bits = bitstream.unpack_bitarray(block.bits, block.bit_len)

    n_full = n if tail == s else n - 1
    ranges = np.zeros(n, dtype=np.int64)
    symbols = np.empty((n - 1) * s + tail, dtype=np.int64)
    full_bits = bits[: n_full * (hb + s * kb)].reshape(n_full, hb + s * kb)
    if hb:
        ranges[:n_full] = bitstream.bits_to_fields(full_bits[:, :hb], hb)
    sym_rows = full_bits[:, hb:].reshape(n_full, s, kb)
    symbols[: n_full * s] = bitstream.bits_to_fields(sym_rows, kb).ravel()
    if tail != s:
        rest = bits[n_full * (hb + s * kb) :]
        if hb:
            ranges[-1] = bitstream.bits_to_fields(rest[:hb], hb)
            rest = rest[hb:]
        symbols[n_full * s :] = bitstream.bits_to_fields(rest.reshape(tail, kb), kb)
    return ranges, symbols


def _validate_input(y: np.ndarray, cfg: RatqConfig) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (cfg.d,):
        raise ValueError(f"expected vector of length {cfg.d}, got {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("input contains NaN or Inf")
    if cfg.norm_check:
        norm = float(np.linalg.norm(y))
        if norm > cfg.B * (1.0 + NORM_SLACK):
            raise ValueError(f"input norm {norm} exceeds bound {cfg.B}")
    return y


def _rotated(y: np.ndarray, cfg: RatqConfig, counter: int) -> np.ndarray:
    if not cfg.rotate:
        return y
    padded = np.zeros(cfg.dim)
    padded[: cfg.d] = y
    op = RotationOperator.draw(cfg.dim, cfg.seed.stream("rotation-signs", counter))
    return rotate(padded, op)


def _subvector_ranges(ytil: np.ndarray, cfg: RatqConfig) -> np.ndarray:
    """Smallest covering range index for each subvector's inf-norm."""
    s, dim = cfg.s, cfg.dim
    n_full = dim // s
    norms = np.empty(cfg.n_subvectors)
    if n_full:
        norms[:n_full] = np.abs(ytil[: n_full * s]).reshape(n_full, s).max(axis=1)
    if n_full < cfg.n_subvectors:
        norms[-1] = np.abs(ytil[n_full * s :]).max()
    j = np.searchsorted(cfg.ladder.bounds, norms, side="left")
    return np.minimum(j, cfg.h - 1)


def _per_coordinate_bounds(ranges: np.ndarray, cfg: RatqConfig) -> np.ndarray:
    M_sub = cfg.ladder.bounds[ranges]
    if not np.all(np.isfinite(M_sub)):
        raise ConfigError("selected range bound is saturated; increase m or h")
    return np.repeat(M_sub, cfg.s)[: cfg.dim]


def ratq_encode(y: np.ndarray, cfg: RatqConfig, counter: int = 0) -> EncodedBlock:
    """Rotate, split into subvectors, adaptively quantize each, bit-pack."""
    y = _validate_input(y, cfg)
    ytil = _rotated(y, cfg, counter)
    ranges = _subvector_ranges(ytil, cfg)
    M = _per_coordinate_bounds(ranges, cfg)
    rng = cfg.seed.stream("rounding", counter)
    symbols = stochastic_round(ytil, M, cfg.k, rng)
    return pack_codewords(ranges, symbols, _layout_for(cfg))


def ratq_decode(block: EncodedBlock, cfg: RatqConfig, counter: int = 0) -> np.ndarray:
    """Unpack, dequantize, inverse-rotate, truncate padding."""
    if block.bit_len != cfg.bit_len:
        raise CodecError(f"bit_len {block.bit_len} does not match config ({cfg.bit_len})")
    ranges, symbols = unpack_codewords(block)
    M = _per_coordinate_bounds(ranges, cfg)
    vals = symbols_to_values(symbols, M, cfg.k)
    if not cfg.rotate:
        return vals
    op = RotationOperator.draw(cfg.dim, cfg.seed.stream("rotation-signs", counter))
    return rotate(vals, op, inverse=True)[: cfg.d]


def overflow_count(block: EncodedBlock, cfg: RatqConfig) -> int:
    """Diagnostic: number of overflow symbols in an encoded block."""
    _, symbols = unpack_codewords(block)
    return int(np.count_nonzero(symbols == cfg.k))


# ---------------------------------------------------------------------------
# Random coordinate subsampling


@dataclass(frozen=True)
class SubsampleSet:
    """Shared-randomness subset of rotated coordinates, stored sorted."""

    indices: np.ndarray
    dim: int

    @property
    def mu(self) -> float:
        return self.indices.size / self.dim

    def digest(self) -> str:
        return hashlib.sha256(self.indices.astype(np.int64).tobytes()).hexdigest()[:16]


def draw_subsample_set(cfg: RatqConfig, mu_d: int, counter: int = 0) -> SubsampleSet:
    """Sample mu_d distinct coordinates from the shared subsampling stream."""
    if not 1 <= mu_d <= cfg.dim:
        raise ConfigError(f"subsample size must be in [1, {cfg.dim}], got {mu_d}")
    rng = cfg.seed.stream("subsampling", counter)
    idx = np.sort(rng.choice(cfg.dim, size=mu_d, replace=False))
    return SubsampleSet(indices=idx, dim=cfg.dim)


def _check_rcs_config(cfg: RatqConfig, sset: SubsampleSet) -> None:
    if cfg.s != 1:
        raise ConfigError("subsampled coding requires subvector size s = 1")
    if sset.dim != cfg.dim:
        raise ConfigError(f"subsample set dim {sset.dim} does not match config ({cfg.dim})")


def rcs_encode(
    y: np.ndarray, cfg: RatqConfig, sset: SubsampleSet, counter: int = 0
) -> EncodedBlock:
    """Encode only the sampled rotated coordinates; bit length scales by mu."""
    _check_rcs_config(cfg, sset)
    y = _validate_input(y, cfg)
    ytil = _rotated(y, cfg, counter)[sset.indices]
    ranges = np.minimum(
        np.searchsorted(cfg.ladder.bounds, np.abs(ytil), side="left"), cfg.h - 1
    )
    M_sub = cfg.ladder.bounds[ranges]
    if not np.all(np.isfinite(M_sub)):
        raise ConfigError("selected range bound is saturated; increase m or h")
    rng = cfg.seed.stream("rounding", counter)
    symbols = stochastic_round(ytil, M_sub, cfg.k, rng)
    layout = BlockLayout(
        n_subvectors=sset.indices.size,
        header_width=cfg.header_width,
        symbol_width=cfg.symbol_width,
        subvector_len=1,
        tail_len=1,
    )
    return pack_codewords(ranges, symbols, layout)


def rcs_decode(
    block: EncodedBlock, cfg: RatqConfig, sset: SubsampleSet, counter: int = 0
) -> np.ndarray:
    """Decode sampled coordinates scaled by 1/mu, zeros elsewhere, unrotate."""
    _check_rcs_config(cfg, sset)
    ranges, symbols = unpack_codewords(block)
    M_sub = cfg.ladder.bounds[ranges]
    if not np.all(np.isfinite(M_sub)):
        raise ConfigError("selected range bound is saturated; increase m or h")
    vals = symbols_to_values(symbols, M_sub, cfg.k)
    full = np.zeros(cfg.dim)
    full[sset.indices] = vals / sset.mu
    if not cfg.rotate:
        return full
    op = RotationOperator.draw(cfg.dim, cfg.seed.stream("rotation-signs", counter))
    return rotate(full, op, inverse=True)[: cfg.d]


# ---------------------------------------------------------------------------
# File persistence: raw bits plus a structured sidecar header


def save_block(path: str, block: EncodedBlock, cfg: RatqConfig, sset: SubsampleSet | None = None) -> None:
    header = {
        "d": cfg.d,
        "B": cfg.B,
        "s": cfg.s,
        "k": cfg.k,
        "h": cfg.h,
        "seed": cfg.seed.master_seed,
        "bit_len": block.bit_len,
        "layout": vars(block.layout),
        "mu": sset.mu if sset is not None else 1.0,
        "set_hash": sset.digest() if sset is not None else None,
    }
    with open(path + ".bits", "wb") as f:
        f.write(block.bits)
    with open(path + ".json", "w") as f:
        json.dump(header, f, indent=2, sort_keys=True)


def load_block(path: str) -> EncodedBlock:
    with open(path + ".json") as f:
        header = json.load(f)
    with open(path + ".bits", "rb") as f:
        bits = f.read()
    return EncodedBlock(bits=bits, bit_len=header["bit_len"], layout=BlockLayout(**header["layout"]))


# ---------------------------------------------------------------------------
# Quantizer objects for the optimizer harness


class RatqQuantizer:
    """Round-trip quantizer with its fixed bit budget and second-moment bound."""

    almost_sure_only = True  # inputs must satisfy the hard norm bound

    def __init__(self, cfg: RatqConfig):
        self.cfg = cfg

    @property
    def bits_per_vector(self) -> int:
        return self.cfg.bit_len

    def alpha_bound(self) -> float:
        s, k = self.cfg.s, self.cfg.k
        return self.cfg.B * math.sqrt((9.0 + 3.0 * math.log(s)) / (k - 1) ** 2 + 1.0)

    def __call__(self, y: np.ndarray, counter: int = 0) -> np.ndarray:
        block = ratq_encode(y, self.cfg, counter)
        return ratq_decode(block, self.cfg, counter)


class RcsRatqQuantizer:
    """Subsampled variant; the subsample set is redrawn each round from the
    shared stream so encoder and decoder stay in sync."""

    almost_sure_only = True

    def __init__(self, cfg: RatqConfig, mu_d: int):
        _check_rcs_config(cfg, SubsampleSet(indices=np.arange(1), dim=cfg.dim))
        self.cfg = cfg
        self.mu_d = mu_d

    @property
    def mu(self) -> float:
        return self.mu_d / self.cfg.dim

    @property
    def bits_per_vector(self) -> int:
        return self.mu_d * (self.cfg.header_width + self.cfg.symbol_width)

    def alpha_bound(self) -> float:
        return RatqQuantizer(self.cfg).alpha_bound() / math.sqrt(self.mu)

    def __call__(self, y: np.ndarray, counter: int = 0) -> np.ndarray:
        sset = draw_subsample_set(self.cfg, self.mu_d, counter)
        block = rcs_encode(y, self.cfg, sset, counter)
        return rcs_decode(block, self.cfg, sset, counter)
