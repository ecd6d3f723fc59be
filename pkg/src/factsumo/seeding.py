import zlib

import numpy as np


def derive_seed(seed, purpose):
    """Stable per-purpose seed expanded from one run seed."""
    seq = np.random.SeedSequence([int(seed), zlib.crc32(purpose.encode("utf-8"))])
    return int(seq.generate_state(1)[0])
