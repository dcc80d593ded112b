"""Counter-based random streams.

Every random draw in the package comes from a Philox generator keyed by a
64-bit seed.  Seeds for sub-streams are derived from a master seed and a
tuple of tags, so a trial's randomness depends only on its key and never on
execution order.
"""

from __future__ import annotations

import hashlib

import numpy as np

DEFAULT_SEED = 1729

_MASK64 = (1 << 64) - 1


def _tag_to_int(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        if tag < 0:
            raise ValueError("seed tags must be non-negative")
        return int(tag)
    digest = hashlib.blake2b(str(tag).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_seed(master: int, *tags) -> int:
    """Deterministic 64-bit seed for the stream ``(master, *tags)``."""
    entropy = [int(master) & _MASK64] + [_tag_to_int(t) for t in tags]
    ss = np.random.SeedSequence(entropy)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & _MASK64))
