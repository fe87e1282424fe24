"""Counter-based seed expansion.

A single root seed fans out into independent streams keyed by a tuple of
component labels and counters, e.g. ``derive_rng(seed, "membrane", gamma_idx, ic)``.
String labels are folded to integers with CRC-32 so keys are stable across runs
and platforms. Streams never depend on the order in which they are requested.
"""
import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    part = int(part)
    if part < 0:
        raise ValueError(f"seed keys must be non-negative, got {part}")
    return part


def seed_sequence(seed, *keys) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=_key(seed), spawn_key=tuple(_key(k) for k in keys))


def derive_rng(seed, *keys) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *keys)))
