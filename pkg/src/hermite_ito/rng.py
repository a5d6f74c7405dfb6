"""Named, counter-based random streams.

Every stream is a Philox generator keyed by a hash of (master seed, names),
so experiment -> level -> path streams are independent of evaluation order,
worker count and platform.
"""
from __future__ import annotations

import hashlib

import numpy as np


def stream_key(master_seed: int, *names) -> int:
    h = hashlib.blake2b(digest_size=16)
    h.update(str(int(master_seed)).encode())
    for name in names:
        h.update(b"\x1f")
        h.update(str(name).encode())
    return int.from_bytes(h.digest(), "little")


def stream(master_seed: int, *names) -> np.random.Generator:
    """Independent generator for the named stream under ``master_seed``."""
    return np.random.Generator(np.random.Philox(key=stream_key(master_seed, *names)))


def as_generator(seed) -> np.random.Generator:
    """Accept a Generator, an int seed or a (seed, name, ...) tuple."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, tuple):
        return stream(*seed)
    return stream(int(seed))
