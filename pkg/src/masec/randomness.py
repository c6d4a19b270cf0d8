"""Seeded, purpose-split random streams.

Every random draw in a trial comes from a Philox generator keyed by
``(seed, purpose)``, so geometry, initialization and baseline placement
are independent and do not shift when another stream is consumed
differently.
"""

import numpy as np

GEOMETRY = 0
INIT = 1
RPA = 2
FRI = 3


def stream_seed(seed, purpose):
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(int(purpose),))


def make_rng(seed_or_sequence):
    if isinstance(seed_or_sequence, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed_or_sequence))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed_or_sequence))))


def stream(seed, purpose):
    return make_rng(stream_seed(seed, purpose))
