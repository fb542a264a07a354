"""Tetration arithmetic, fast Walsh-Hadamard transform, and randomized rotation.

All randomness in the package flows through :class:`SeedBundle`.  A stream is
keyed by ``(master_seed, label, *counters)`` via numpy's ``SeedSequence`` spawn
keys, which gives splittable, statistically independent streams that both the
encoder and decoder can reconstruct without communication.  This is the single
place where the generator choice is fixed.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np

# Tetration values that overflow float64 saturate here.  Only comparisons and
# square roots of range bounds are ever needed, so +inf preserves semantics.
HUGE = math.inf

_EXP_OVERFLOW = math.log(sys.float_info.max)

STREAM_LABELS = {
    "rotation-signs": 0,
    "rounding": 1,
    "subsampling": 2,
    "oracle-noise": 3,
    "trial": 4,
}


@dataclass(frozen=True)
class SeedBundle:
    """Master seed from which all purpose-labelled randomness streams derive."""

    master_seed: int

    def stream(self, label: str, *counters: int) -> np.random.Generator:
        """Return the generator for (master_seed, label, counters).

        Streams with distinct labels or counters are independent; the same
        key always reproduces the same stream.
        """
        code = STREAM_LABELS[label]
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(code, *counters))
        return np.random.default_rng(seq)

    def derive(self, *indices: int) -> "SeedBundle":
        """Derive a child bundle (e.g. per trial or per client)."""
        seq = np.random.SeedSequence(
            self.master_seed, spawn_key=(STREAM_LABELS["trial"], *indices)
        )
        return SeedBundle(int(seq.generate_state(1, dtype=np.uint64)[0]))


def tetration(i: int) -> float:
    """i-th element of the tower e, e^e, e^(e^e), ...; saturates to +inf."""
    if i < 1:
        raise ValueError(f"tetration index must be >= 1, got {i}")
    val = math.e
    for _ in range(i - 1):
        if val > _EXP_OVERFLOW:
            return HUGE
        val = math.exp(val)
    return val


def iterated_log_star(b: float) -> int:
    """Smallest i such that tetration(i) >= b, computed by forward iteration."""
    if b < 0:
        raise ValueError(f"iterated_log_star needs b >= 0, got {b}")
    i = 1
    while tetration(i) < b:
        i += 1
    return i


def next_power_of_two(n: int) -> int:
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    return 1 << (n - 1).bit_length()


def fwht(v: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis.

    Length must be a power of two.  O(d log d) butterfly; the caller applies
    the 1/sqrt(d) normalization where needed.
    """
    v = np.asarray(v, dtype=np.float64)
    n = v.shape[-1]
    if n == 0 or n & (n - 1):
        raise ValueError(f"fwht length must be a power of two, got {n}")
    out = v.copy()
    lead = v.shape[:-1]
    h = 1
    while h < n:
        out = out.reshape(*lead, n // (2 * h), 2, h)
        a = out[..., 0, :].copy()
        out[..., 0, :] += out[..., 1, :]
        out[..., 1, :] = a - out[..., 1, :]
        out = out.reshape(*lead, n)
        h *= 2
    return out


def hadamard_matrix(n: int) -> np.ndarray:
    """Dense Walsh-Hadamard matrix, used as the O(d^2) oracle in tests."""
    if n == 0 or n & (n - 1):
        raise ValueError(f"order must be a power of two, got {n}")
    H = np.array([[1.0]])
    while H.shape[0] < n:
        H = np.block([[H, H], [H, -H]])
    return H


@dataclass(frozen=True)
class RotationOperator:
    """Random rotation (1/sqrt(d)) * H * diag(signs); unitary and self-derived
    from shared randomness, so encoder and decoder apply the same operator."""

    dim: int
    signs: np.ndarray

    def __post_init__(self):
        if self.dim & (self.dim - 1) or self.dim == 0:
            raise ValueError(f"rotation dim must be a power of two, got {self.dim}")
        if self.signs.shape != (self.dim,):
            raise ValueError("signs length must equal dim")

    @classmethod
    def draw(cls, dim: int, rng: np.random.Generator) -> "RotationOperator":
        signs = rng.integers(0, 2, size=dim) * 2.0 - 1.0
        return cls(dim=dim, signs=signs)


def rotate(v: np.ndarray, op: RotationOperator, inverse: bool = False) -> np.ndarray:
    """Apply the rotation (or its inverse) to v; norm is preserved."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != op.dim:
        raise ValueError(f"vector length {v.shape[-1]} != rotation dim {op.dim}")
    scale = 1.0 / math.sqrt(op.dim)
    if inverse:
        return op.signs * (fwht(v) * scale)
    return fwht(op.signs * v) * scale
