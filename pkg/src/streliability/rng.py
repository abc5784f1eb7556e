"""Named, order-independent random substreams derived from one master seed."""

from __future__ import annotations

import hashlib

import numpy as np

STREAM_COUNT = 1
STREAM_SAMPLE = 2
STREAM_HARNESS = 3


def _words(key: tuple[int, ...]) -> tuple[int, ...]:
    digest = hashlib.blake2b(repr(key).encode(), digest_size=16).digest()
    return tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))


def substream(seed: int, tag: int, *key: int) -> np.random.Generator:
    """Generator for the stream ``(tag, key)`` under ``seed``.

    Keys may be arbitrarily large ints (bitmasks); they are hashed to 128 bits.
    """
    ss = np.random.SeedSequence(seed, spawn_key=(tag, *_words(key)))
    return np.random.Generator(np.random.PCG64(ss))
