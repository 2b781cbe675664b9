"""Deterministic random-number pipeline: MT19937 and the Box-Muller transform.

Uniform draws come from a from-scratch 32-bit Mersenne Twister (seeded with
the classic Knuth-style initializer) so that streams are identical across
kernel backends and reproducible against independent implementations.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels

MT_STATE_WORDS = 624

_TWO_PI = 6.283185307179586476925287


def seed_state(seed: int) -> np.ndarray:
    """Initialize the 624-word generator state from a 32-bit seed."""
    mt = np.empty(MT_STATE_WORDS, dtype=np.uint32)
    mt[0] = seed & 0xFFFFFFFF
    prev = int(mt[0])
    for i in range(1, MT_STATE_WORDS):
        prev = (1812433253 * (prev ^ (prev >> 30)) + i) & 0xFFFFFFFF
        mt[i] = prev
    return mt


class Mt19937:
    """MT19937 stream with block extraction.

    State is confined to the owning worker; create one instance per worker
    (or per pricing task) rather than sharing across threads.
    """

    def __init__(self, seed: int):
        self.words = seed_state(int(seed))
        self.index = MT_STATE_WORDS  # force a twist on first draw

    def next_uint32(self) -> int:
        block, self.index = _kernels.active().mt_next_block(self.words, self.index, 1)
        return int(block[0])

    def next_block(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError(f"block size must be >= 0, got {n}")
        block, self.index = _kernels.active().mt_next_block(self.words, self.index, n)
        return block

    def normals(self, n: int) -> np.ndarray:
        """Draw ``n`` standard normals via Box-Muller over paired uniforms.

        Each pair of uint32 draws yields two normals; for odd ``n`` the
        trailing sine output is discarded, so the stream position depends
        only on how many normals have been requested in total.
        """
        if n < 0:
            raise ValueError(f"draw count must be >= 0, got {n}")
        pairs = (n + 1) // 2
        draws = self.next_block(2 * pairs)
        z = _kernels.active().box_muller_block(draws)
        return z[:n]


def box_muller(u1: float, u2: float) -> tuple[float, float]:
    """Map uniforms u1 in (0,1], u2 in [0,1) to two standard normals."""
    if not 0.0 < u1 <= 1.0:
        raise ValueError(f"u1 must lie in (0, 1], got {u1}")
    if not 0.0 <= u2 < 1.0:
        raise ValueError(f"u2 must lie in [0, 1), got {u2}")
    r = math.sqrt(-2.0 * math.log(u1))
    ang = _TWO_PI * u2
    return r * math.cos(ang), r * math.sin(ang)
