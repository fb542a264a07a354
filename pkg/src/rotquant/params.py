"""Closed-form parameter derivation for every supported operating regime.

Users never hand-compute ladders: given a regime name and the run-level
constants (d, B, T, bit budgets), these helpers emit every derived constant
(m, m0, h, s, k, mu, gain ladder, bit budget) and ready-to-use configs.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

from .adaptive import geometric_ladder, tetra_ladder
from .errors import ConfigError
from .numerics import SeedBundle, iterated_log_star, next_power_of_two
from .ratq import RatqConfig

MODES = ("ratq-high", "ratq-low", "aratq-high", "aratq-low", "dme", "rd")


@dataclass(frozen=True)
class ResolvedParams:
    """Every derived constant for one regime, plus the exact bit budget."""

    mode: str
    d: int
    B: float
    m: float
    m0: float
    h: int
    s: int
    k: int
    mu_d: int | None = None
    a_g: float | None = None
    h_g: int | None = None
    k_g: int | None = None
    v: float | None = None
    D_target: float | None = None
    bits: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


def _range_count(d: int) -> int:
    """h = 2^ceil(log2(1 + ln*(d/3)))."""
    return 1 << math.ceil(math.log2(1 + iterated_log_star(d / 3.0)))


def _shape_levels(s: int) -> int:
    """k with log2(k+1) = ceil(log2(2 + sqrt(9 + 3 ln s)))."""
    width = math.ceil(math.log2(2.0 + math.sqrt(9.0 + 3.0 * math.log(s))))
    return (1 << width) - 1


def _bit_budget(dim: int, s: int, h: int, k: int) -> int:
    header = math.ceil(math.log2(h)) if h > 1 else 0
    return -(-dim // s) * header + dim * math.ceil(math.log2(k + 1))


def _high_precision(d: int, B: float, mode: str) -> ResolvedParams:
    dim = next_power_of_two(d)
    h = _range_count(dim)
    s = max(1, int(math.log2(h)))
    k = _shape_levels(s)
    m = 3.0 * B * B / dim
    m0 = (2.0 * B * B / dim) * math.log(s)
    return ResolvedParams(
        mode=mode, d=d, B=B, m=m, m0=m0, h=h, s=s, k=k, bits=_bit_budget(dim, s, h, k)
    )


def _low_precision(d: int, B: float, r: int, mode: str) -> ResolvedParams:
    dim = next_power_of_two(d)
    h = _range_count(dim)
    header = math.ceil(math.log2(h)) if h > 1 else 0
    floor_bits = 3 + header
    if r < floor_bits:
        raise ConfigError(
            f"bit budget r={r} below the floor {floor_bits} for d={d}"
        )
    k = 7  # log2(k+1) = 3
    mu_d = min(dim, r // floor_bits)
    m = 3.0 * B * B / dim
    m0 = 0.0  # s = 1, so the ln(s) offset vanishes
    return ResolvedParams(
        mode=mode, d=d, B=B, m=m, m0=m0, h=h, s=1, k=k, mu_d=mu_d,
        bits=mu_d * floor_bits,
    )


def _gain_high(T: int) -> tuple[float, int, int]:
    """Geometric gain ladder constants for a T-iteration run."""
    if T < 2:
        raise ConfigError(f"need T >= 2 for the adaptive gain ladder, got T={T}")
    logT = math.log2(T)
    h_g = 1 << math.ceil(math.log2(1.0 + 0.5 * logT))
    kg_width = math.ceil(math.log2(2.0 + 0.5 * math.sqrt(logT + 1.0)))
    return 2.0, h_g, (1 << kg_width) - 1


def derive_params(
    mode: str,
    d: int,
    B: float = 1.0,
    T: int | None = None,
    r: int | None = None,
    r_g: int | None = None,
    v: float | None = None,
    D_target: float | None = None,
) -> ResolvedParams:
    """Resolve every derived constant for the named regime."""
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {MODES}")
    if mode == "ratq-high":
        return _high_precision(d, B, mode)
    if mode == "dme":
        return _high_precision(d, 1.0, mode)
    if mode == "ratq-low":
        if r is None:
            raise ConfigError("ratq-low needs the total bit budget r")
        return _low_precision(d, B, r, mode)
    if mode == "aratq-high":
        if T is None:
            raise ConfigError("aratq-high needs the iteration count T")
        base = _high_precision(d, 1.0, mode)
        a_g, h_g, k_g = _gain_high(T)
        gain_bits = math.ceil(math.log2(h_g)) + math.ceil(math.log2(k_g + 1))
        return ResolvedParams(
            mode=mode, d=d, B=B, m=base.m, m0=base.m0, h=base.h, s=base.s,
            k=base.k, a_g=a_g, h_g=h_g, k_g=k_g, bits=base.bits + gain_bits,
        )
    if mode == "aratq-low":
        if T is None or r is None or r_g is None:
            raise ConfigError("aratq-low needs T, r, and the gain budget r_g")
        if r_g % 2 or r_g < 4:
            raise ConfigError(f"gain bit budget r_g must be even and >= 4, got {r_g}")
        r_s = r - r_g
        base = _low_precision(d, 1.0, r_s, mode)
        h_g = 1 << (r_g // 2)
        k_g = (1 << (r_g // 2)) - 1
        mu = base.mu_d / next_power_of_two(d)
        if mu * T < 1:
            raise ConfigError(f"need mu*T >= 1 for the gain ladder, got {mu * T}")
        a_g = (mu * T) ** (1.0 / (h_g + 1))
        if a_g <= 1.0:
            raise ConfigError(f"degenerate gain growth factor a_g={a_g}; increase T")
        return ResolvedParams(
            mode=mode, d=d, B=B, m=base.m, m0=base.m0, h=base.h, s=1, k=base.k,
            mu_d=base.mu_d, a_g=a_g, h_g=h_g, k_g=k_g, bits=base.bits + r_g,
        )
    # mode == "rd"
    if v is None or D_target is None:
        raise ConfigError("rd needs the variance factor v and target distortion D")
    if not 0 < D_target < v / 4.0:
        raise ConfigError(f"rd requires 0 < D < v/4, got D={D_target}, v={v}")
    h = 1 << math.ceil(
        math.log2(1 + iterated_log_star(4.0 * math.log(8.0 * math.sqrt(2.0) * v / D_target) / 3.0))
    )
    s = min(max(1, int(math.log2(h))), d)
    if d < math.log2(h):
        raise ConfigError(f"rd requires d >= log2(h); got d={d}, h={h}")
    k_width = math.ceil(
        math.log2(2.0 + math.sqrt((18.0 * v + 6.0 * v * math.log(s)) / D_target))
    )
    k = (1 << k_width) - 1
    m = 3.0 * v
    m0 = 2.0 * v * math.log(s)
    return ResolvedParams(
        mode=mode, d=d, B=B, m=m, m0=m0, h=h, s=s, k=k, v=v, D_target=D_target,
        bits=_bit_budget(d, s, h, k),
    )


def make_ratq_config(params: ResolvedParams, seed: SeedBundle, rotate: bool = True) -> RatqConfig:
    """Build a runnable config from resolved parameters."""
    ladder = tetra_ladder(params.m, params.m0, params.h)
    return RatqConfig(
        d=params.d, B=params.B, s=params.s, k=params.k, ladder=ladder, seed=seed,
        rotate=rotate, norm_check=rotate,
    )


def make_gain_ladder(params: ResolvedParams):
    if params.a_g is None or params.h_g is None:
        raise ConfigError(f"mode {params.mode!r} has no gain ladder")
    return geometric_ladder(params.B, params.a_g, params.h_g)


def make_aratq_config(params: ResolvedParams, seed: SeedBundle):
    """Gain-shape config: unit-ball shape quantizer plus the geometric gain
    ladder scaled by B.  Subsampled shape when the mode carries mu_d."""
    from .gain_shape import GainShapeConfig

    shape = make_ratq_config(replace(params, B=1.0), seed)
    return GainShapeConfig(
        shape=shape,
        gain_ladder=make_gain_ladder(params),
        k_g=params.k_g,
        mu_d=params.mu_d,
    )
