"""Fixed-width big-endian bit packing on top of numpy's packbits.

The codec is deterministic and header-free: the caller supplies the field
widths on both sides.  Trailing pad bits in the final byte are zero.
"""

from __future__ import annotations

import numpy as np

from .errors import CodecError


def field_bits(values: np.ndarray, width: int) -> np.ndarray:
    """Expand integers to (n, width) big-endian bit rows."""
    v = np.asarray(values, dtype=np.uint64)
    if width < 1:
        raise ValueError(f"field width must be >= 1, got {width}")
    if np.any(v >> np.uint64(width)):
        raise CodecError(f"value does not fit in {width} bits")
    shifts = np.arange(width - 1, -1, -1, dtype=np.uint64)
    return ((v[..., None] >> shifts) & np.uint64(1)).astype(np.uint8)


def bits_to_fields(bits: np.ndarray, width: int) -> np.ndarray:
    """Inverse of field_bits: collapse (..., width) bit rows to integers."""
    weights = np.uint64(1) << np.arange(width - 1, -1, -1, dtype=np.uint64)
    return (bits.astype(np.uint64) * weights).sum(axis=-1)


def pack_bitarray(bits: np.ndarray) -> bytes:
    """Pack a flat 0/1 array into bytes, zero-padding the final byte."""
    return np.packbits(bits.astype(np.uint8)).tobytes()


def unpack_bitarray(data: bytes, bit_len: int) -> np.ndarray:
    """Unpack bytes back into a flat 0/1 array of exactly bit_len bits."""
    raw = np.frombuffer(data, dtype=np.uint8)
    if raw.size * 8 < bit_len:
        raise CodecError(f"bitstream too short: {raw.size * 8} bits < {bit_len}")
    if raw.size != (bit_len + 7) // 8:
        raise CodecError("bitstream length does not match declared bit count")
    bits = np.unpackbits(raw)
    if np.any(bits[bit_len:]):
        raise CodecError("nonzero trailing pad bits")
    return bits[:bit_len]
