"""Seeded randomness for simulations.

Two flavours are provided.  :class:`RngStream` hands out numpy generators
(Philox, counter based) for keyed substreams, so a run, a node or an edge
can get its own reproducible stream whatever order the caller asks in.
:func:`hash_uniform` is a stateless splitmix64 hash mapping
``(seed, key, t)`` to a double in ``[0, 1)``; the lazy edge oracle uses it
so that an edge's coin at time ``t`` does not depend on query order.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """splitmix64 finalizer on a Python int (taken mod 2**64)."""
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def mix64_array(x: np.ndarray) -> np.ndarray:
    z = x.astype(np.uint64) + np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def hash_uniform(seed: int, key: int, t: int) -> float:
    h = mix64(mix64(mix64(seed & MASK64) ^ (key & MASK64)) ^ (t & MASK64))
    return (h >> 11) * (1.0 / 9007199254740992.0)


def hash_uniform_array(seed: int, keys: np.ndarray, t: int) -> np.ndarray:
    """Vectorized :func:`hash_uniform`; bit-identical to the scalar version."""
    s = np.uint64(mix64(seed & MASK64))
    h = mix64_array(mix64_array(np.asarray(keys, dtype=np.uint64) ^ s) ^ np.uint64(t & MASK64))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def derive_seed(*parts: object) -> int:
    """Stable 63-bit seed from an arbitrary tuple of printable parts.

    blake2b over the ``repr`` of each part joined by ``|``; independent of
    Python's hash randomization and of platform.
    """
    text = "|".join(repr(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little") >> 1


class RngStream:
    """A 64-bit seed plus cheap derivation of independent substreams."""

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64

    def generator(self, *key: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=tuple(int(k) for k in key))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, *key: int) -> "RngStream":
        return RngStream(derive_seed(self.seed, *key))

    def uniform(self, key: int, t: int) -> float:
        return hash_uniform(self.seed, key, t)

    def __repr__(self) -> str:
        return f"RngStream({self.seed})"
