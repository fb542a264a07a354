"""Adaptive dynamic-range selection around the uniform quantizer.

Two ladder families: tetra-iterated bounds for subvector quantization and
geometric bounds for gain quantization.  The encoder always picks the
smallest range covering the input; if none covers it, the top range is used
and overflowing coordinates emit the overflow symbol.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CodecError, ConfigError
from .numerics import HUGE, tetration
from .scalar_quant import stochastic_round, symbols_to_values


@dataclass(frozen=True)
class RangeLadder:
    """Nondecreasing dynamic-range bounds M_0 <= ... <= M_{h-1}."""

    kind: str  # "tetra" | "geometric"
    bounds: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=np.float64)
        if b.ndim != 1 or b.size == 0:
            raise ValueError("ladder needs at least one bound")
        finite = b[np.isfinite(b)]
        if np.any(np.diff(finite) < 0):
            raise ValueError("ladder bounds must be nondecreasing")
        object.__setattr__(self, "bounds", b)

    def __len__(self) -> int:
        return self.bounds.size

    def select(self, magnitude: float) -> int:
        """Smallest index j with magnitude <= bounds[j]; top index if none.

        Saturated (inf) bounds compare as larger than any finite magnitude.
        """
        j = int(np.searchsorted(self.bounds, magnitude, side="left"))
        return min(j, self.bounds.size - 1)


def tetra_ladder(m: float, m0: float, h: int) -> RangeLadder:
    """Bounds with M_0^2 = m + m0 and M_i^2 = m * e^{*i} + m0."""
    if m <= 0:
        raise ValueError(f"need m > 0, got {m}")
    if m0 < 0:
        raise ValueError(f"need m0 >= 0, got {m0}")
    if h < 1:
        raise ValueError(f"need h >= 1, got {h}")
    sq = [m + m0]
    for i in range(1, h):
        t = tetration(i)
        sq.append(HUGE if t == HUGE else m * t + m0)
    return RangeLadder(kind="tetra", bounds=np.sqrt(sq), params={"m": m, "m0": m0, "h": h})


def geometric_ladder(B: float, a_g: float, h_g: int) -> RangeLadder:
    """Bounds with M_j^2 = B^2 * a_g^j."""
    if B <= 0:
        raise ValueError(f"need B > 0, got {B}")
    if a_g <= 1:
        raise ValueError(f"need growth factor a_g > 1, got {a_g}")
    if h_g < 1:
        raise ValueError(f"need h_g >= 1, got {h_g}")
    bounds = B * np.power(a_g, np.arange(h_g) / 2.0)
    return RangeLadder(
        kind="geometric", bounds=bounds, params={"B": B, "a_g": a_g, "h_g": h_g}
    )


@dataclass(frozen=True)
class AdaptiveCodeword:
    """Selected range index plus the per-coordinate level symbols."""

    range_index: int
    symbols: np.ndarray

    def overflow_count(self, k: int) -> int:
        """Diagnostic: number of coordinates that emitted the overflow symbol."""
        return int(np.count_nonzero(self.symbols == k))


def _checked_bound(ladder: RangeLadder, j: int) -> float:
    M = float(ladder.bounds[j])
    if not np.isfinite(M):
        raise ConfigError(
            "selected range bound is saturated; increase m or reduce the input scale"
        )
    return M


def atuq_encode(
    y: np.ndarray, ladder: RangeLadder, k: int, rng: np.random.Generator
) -> AdaptiveCodeword:
    """Quantize a vector with the smallest symmetric range covering its inf-norm."""
    y = np.asarray(y, dtype=np.float64)
    if y.size == 0:
        raise ValueError("empty input")
    j = ladder.select(float(np.max(np.abs(y))))
    M = _checked_bound(ladder, j)
    return AdaptiveCodeword(range_index=j, symbols=stochastic_round(y, M, k, rng))


def atuq_decode(cw: AdaptiveCodeword, ladder: RangeLadder, k: int) -> np.ndarray:
    if not 0 <= cw.range_index < len(ladder):
        raise CodecError(f"range index {cw.range_index} outside ladder of length {len(ladder)}")
    M = _checked_bound(ladder, cw.range_index)
    return symbols_to_values(cw.symbols, M, k)


@dataclass(frozen=True)
class GainCodeword:
    range_index: int
    symbol: int


def aguq_quantize(
    g: float, ladder: RangeLadder, k_g: int, rng: np.random.Generator
) -> tuple[GainCodeword, float]:
    """Quantize a nonnegative gain on the smallest geometric range covering it.

    A gain above the top bound emits the overflow symbol, which decodes to 0.
    """
    if g < 0:
        raise ValueError(f"gain must be nonnegative, got {g}")
    j = ladder.select(g)
    M = _checked_bound(ladder, j)
    if g > M:
        cw = GainCodeword(range_index=j, symbol=k_g)
    else:
        sym = stochastic_round(np.array([g]), M, k_g, rng, nonnegative=True)
        cw = GainCodeword(range_index=j, symbol=int(sym[0]))
    return cw, aguq_decode(cw, ladder, k_g)


def aguq_decode(cw: GainCodeword, ladder: RangeLadder, k_g: int) -> float:
    if not 0 <= cw.range_index < len(ladder):
        raise CodecError(f"range index {cw.range_index} outside ladder of length {len(ladder)}")
    M = _checked_bound(ladder, cw.range_index)
    return float(symbols_to_values(np.array([cw.symbol]), M, k_g, nonnegative=True)[0])
