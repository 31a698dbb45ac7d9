"""Counter-based random substreams.

Every stream is a Philox generator keyed by (seed, purpose, index...), so a
path or chunk draws the same numbers no matter how work is scheduled.
"""
import zlib

import numpy as np

# Paths simulated together by the vectorized subordinator engines share a
# stream; the chunk size is fixed so results never depend on thread count.
CHUNK = 4096


def stream(seed: int, purpose: str, *index: int) -> np.random.Generator:
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(purpose.encode()), *map(int, index)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))
