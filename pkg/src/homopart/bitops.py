"""Bit-packed set kernels.

Subsets of ``range(n)`` are stored little-endian in uint64 words so that
intersections, symmetric differences, and cardinalities reduce to
bitwise ops plus a vectorized popcount. Every graph type in the package
packs its membership data with these helpers; keeping the layout in one
place makes the word-parallel identities easy to audit.
"""

from __future__ import annotations

import numpy as np

WORD_BITS = 64


def n_words(n: int) -> int:
    """Number of uint64 words covering an ``n``-bit mask."""
    if n < 0:
        raise ValueError(f"negative mask length {n}")
    return (int(n) + WORD_BITS - 1) // WORD_BITS


def pack(mask: np.ndarray) -> np.ndarray:
    """Pack a boolean array along its last axis into uint64 words.

    Bit ``j`` of the packed row is element ``j`` of the input row. The
    word view assumes a little-endian host, which is asserted once at
    import time below.
    """
    mask = np.asarray(mask, dtype=bool)
    target_bytes = 8 * n_words(mask.shape[-1])
    packed = np.packbits(mask, axis=-1, bitorder="little")
    pad = target_bytes - packed.shape[-1]
    if pad:
        width = [(0, 0)] * (packed.ndim - 1) + [(0, pad)]
        packed = np.pad(packed, width)
    return np.ascontiguousarray(packed).view(np.uint64)


def unpack(words: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`pack`; returns a boolean array of width ``n``."""
    words = np.ascontiguousarray(words, dtype=np.uint64)
    bits = np.unpackbits(words.view(np.uint8), axis=-1, bitorder="little")
    return bits[..., :n].astype(bool)


def popcount(words: np.ndarray, axis=None):
    """Total number of set bits, optionally along an axis."""
    counts = np.bitwise_count(words)
    return counts.sum(axis=axis, dtype=np.int64)


def from_indices(indices, n: int) -> np.ndarray:
    """Packed mask with exactly the given bit positions set."""
    mask = np.zeros(n, dtype=bool)
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size:
        if idx.min() < 0 or idx.max() >= n:
            raise ValueError(f"index out of range for mask of length {n}")
        mask[idx] = True
    return pack(mask)


def to_indices(words: np.ndarray, n: int) -> np.ndarray:
    """Sorted positions of the set bits."""
    return np.flatnonzero(unpack(words, n))


def extract_bit(words: np.ndarray, j: int) -> np.ndarray:
    """Boolean plane of bit ``j`` across an array of packed rows."""
    word = words[..., j // WORD_BITS]
    return ((word >> np.uint64(j % WORD_BITS)) & np.uint64(1)).astype(bool)


def symdiff_sizes(rows: np.ndarray, row: np.ndarray) -> np.ndarray:
    """Hamming distances between each packed row and a single row."""
    return popcount(rows ^ row, axis=-1)


# The uint8 <-> uint64 views above are only valid on little-endian
# hosts; fail loudly rather than corrupt masks on anything exotic.
if np.little_endian is False:  # pragma: no cover
    raise ImportError("homopart.bitops requires a little-endian host")
