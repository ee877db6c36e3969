"""Counter-based random streams.

All randomness flows through numpy's Philox generator keyed by a
64-bit seed plus a stream index.  Stream i is fully determined by
(seed, i), so work split across any number of workers draws identical
numbers per trial and estimates do not depend on the partition.
"""

import bisect

import numpy as np


def stream(seed, index=0):
    """Independent generator for the given (seed, stream index)."""
    key = np.array([np.uint64(seed & (2 ** 64 - 1)), np.uint64(index & (2 ** 64 - 1))],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_index(gen, cumulative):
    """Index into a distribution given its cumulative weights (floats
    ending at 1.0)."""
    return bisect.bisect_right(cumulative, gen.random())
