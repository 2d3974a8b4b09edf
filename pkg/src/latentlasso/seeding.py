"""Deterministic per-task random streams derived from one master seed.

A stream is identified by ``(master_seed, *key)`` where key parts are ints or
strings. Strings are mapped to integers with CRC-32 and the tuple is fed to
:class:`numpy.random.SeedSequence` as its spawn key, which mixes it into the
master entropy. The mapping is fixed, so a given key always yields the same
stream regardless of which process or thread asks for it.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_part(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("seed key integers must be nonnegative")
        return int(part)
    return zlib.crc32(str(part).encode("utf-8"))


def seed_sequence(master_seed: int, *key) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master_seed), spawn_key=tuple(_key_part(k) for k in key))


def derive_seed(master_seed: int, *key) -> int:
    """A 64-bit integer seed for the stream named by ``key``."""
    return int(seed_sequence(master_seed, *key).generate_state(1, dtype=np.uint64)[0])


def stream(master_seed: int, *key) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(master_seed, *key))
