"""Seeded random streams.

Every random draw in evsce comes from ``stream(seed, *indices)``: a Philox
(counter-based) generator keyed by ``SeedSequence(seed, spawn_key=indices)``.
Appending an index to the key yields an independent substream, so replica
``r`` of a batch always sees the same numbers whatever the thread schedule.
"""

import numpy as np

SEED_MASK = (1 << 64) - 1


def stream(seed: int, *indices: int) -> np.random.Generator:
    sequence = np.random.SeedSequence(seed & SEED_MASK, spawn_key=tuple(indices))
    return np.random.Generator(np.random.Philox(sequence))
