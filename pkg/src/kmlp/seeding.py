"""Named sub-seeds so that data, initialization and batching vary independently."""
import zlib

import numpy as np


def derive_seed(seed, name, *index) -> int:
    key = [int(seed) & 0xFFFFFFFF, zlib.crc32(name.encode())] + [int(i) for i in index]
    return int(np.random.SeedSequence(key).generate_state(1, dtype=np.uint32)[0])
