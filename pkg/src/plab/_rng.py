"""Deterministic random streams shared by the compiled and pure-Python kernels.

Every stochastic routine derives a fresh PCG64 bit generator from a user seed
plus integer sub-indices, so replicates are reproducible and independent.  The
two kernel backends consume the *same* raw 64-bit output sequence and map it
to variates identically:

* bounded integer in ``[0, b)``: 128-bit multiply-shift ``(r * b) >> 64``,
* double in ``[0, 1)``: ``(r >> 11) * 2**-53``,
* in-place shuffle: Fisher-Yates driven by the bounded-integer map.

A given ``(inputs, seed)`` pair therefore produces bit-identical results on
both backends, which the test suite exploits to cross-check the compiled
kernels against the pure-Python reference.
"""

from __future__ import annotations

import numpy as np

_U64 = 1 << 64
_BUFFER = 4096


def seed_seq(*entropy: int) -> np.random.SeedSequence:
    """SeedSequence for a master seed plus optional stream sub-indices."""
    return np.random.SeedSequence([int(e) & (_U64 - 1) for e in entropy])


def make_bitgen(*entropy: int) -> np.random.PCG64:
    """Fresh PCG64 stream for one kernel invocation (single-use by convention)."""
    return np.random.PCG64(seed_seq(*entropy))


def make_generator(*entropy: int) -> np.random.Generator:
    """numpy Generator for vectorised (non-kernel) sampling code."""
    return np.random.Generator(make_bitgen(*entropy))


class RawStream:
    """Buffered raw-uint64 reader over a bit generator (pure-Python twin).

    The buffer prefetches raw outputs; consumption order of the underlying
    sequence is unchanged, so it matches the compiled kernels draw for draw.
    A stream handed to one consumer must not be reused elsewhere.
    """

    __slots__ = ("_bitgen", "_buf", "_pos")

    def __init__(self, bitgen: np.random.PCG64):
        self._bitgen = bitgen
        self._buf: list[int] = []
        self._pos = 0

    def u64(self) -> int:
        if self._pos == len(self._buf):
            self._buf = self._bitgen.random_raw(_BUFFER).tolist()
            self._pos = 0
        value = self._buf[self._pos]
        self._pos += 1
        return value

    def randint(self, bound: int) -> int:
        """Uniform integer in [0, bound); bias below 2**-40 for desk-scale bounds."""
        return (self.u64() * bound) >> 64

    def random01(self) -> float:
        return (self.u64() >> 11) * 2.0**-53

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = (self.u64() * (i + 1)) >> 64
            items[i], items[j] = items[j], items[i]
