"""Counter-based random streams with independent per-trial substreams.

Philox is counter-based, so (seed, index) pairs give statistically
independent streams and parallel/serial runs agree bit-for-bit.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def substream(seed: int, index: int) -> np.random.Generator:
    """Return an independent generator keyed by (seed, index)."""
    key = np.array([seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
