"""Coordinate-wise uniform quantization with stochastic rounding.

Two grid variants: symmetric [-M, M] (used for subvector coordinates) and
nonnegative [0, M] (used for gains).  Inputs outside the dynamic range emit
the overflow symbol, encoded as the integer ``k``; it decodes to 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CodecError


@dataclass(frozen=True)
class UniformGrid:
    """k uniform levels over [-M, M] (symmetric) or [0, M] (nonnegative)."""

    M: float
    k: int
    nonnegative: bool = False

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"need k >= 2 levels, got {self.k}")
        if not np.isfinite(self.M) or self.M <= 0:
            raise ValueError(f"dynamic range bound must be finite positive, got {self.M}")

    @property
    def overflow_symbol(self) -> int:
        return self.k

    @property
    def levels(self) -> np.ndarray:
        if self.nonnegative:
            return np.arange(self.k) * (self.M / (self.k - 1))
        return -self.M + np.arange(self.k) * (2.0 * self.M / (self.k - 1))


def stochastic_round(
    y: np.ndarray,
    M: np.ndarray | float,
    k: int,
    rng: np.random.Generator,
    nonnegative: bool = False,
) -> np.ndarray:
    """Round each coordinate to one of k uniform levels over its range.

    ``M`` may be per-coordinate.  In-range values go to the lower or upper
    bracketing level with probability proportional to proximity, so the
    decoded value is conditionally unbiased; out-of-range values get the
    overflow symbol ``k``.  Level intervals are half-open on the left, so
    exact grid points round deterministically.
    """
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise ValueError("quantizer input must be finite")
    M = np.broadcast_to(np.asarray(M, dtype=np.float64), y.shape)
    lo = np.zeros_like(M) if nonnegative else -M
    span = M if nonnegative else 2.0 * M
    out_of_range = y > M if nonnegative else np.abs(y) > M

    step = span / (k - 1)
    t = (y - lo) / step
    low = np.clip(np.ceil(t).astype(np.int64) - 1, 0, k - 2)
    p = np.clip(t - low, 0.0, 1.0)
    symbols = low + (rng.random(y.shape) < p)
    return np.where(out_of_range, k, symbols)


def symbols_to_values(
    symbols: np.ndarray,
    M: np.ndarray | float,
    k: int,
    nonnegative: bool = False,
) -> np.ndarray:
    """Map level symbols back to grid values; the overflow symbol maps to 0."""
    symbols = np.asarray(symbols)
    if np.any((symbols < 0) | (symbols > k)):
        raise CodecError(f"symbol outside {{0..{k}}}")
    M = np.broadcast_to(np.asarray(M, dtype=np.float64), symbols.shape)
    step = (M if nonnegative else 2.0 * M) / (k - 1)
    lo = np.zeros_like(M) if nonnegative else -M
    vals = lo + symbols * step
    return np.where(symbols == k, 0.0, vals)


def cuq_encode(y: np.ndarray, grid: UniformGrid, rng: np.random.Generator) -> np.ndarray:
    """Encode a vector against a fixed uniform grid."""
    return stochastic_round(y, grid.M, grid.k, rng, nonnegative=grid.nonnegative)


def cuq_decode(symbols: np.ndarray, grid: UniformGrid) -> np.ndarray:
    """Decode level symbols against a fixed uniform grid."""
    return symbols_to_values(symbols, grid.M, grid.k, nonnegative=grid.nonnegative)
