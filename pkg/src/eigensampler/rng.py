"""Seeded, splittable random streams.

All randomness in the package flows through numpy Generators backed by the
counter-based Philox bit generator. Estimator repetitions each get a child
stream spawned deterministically from the caller's generator, so results are
reproducible for a fixed master seed and insensitive to worker scheduling.
"""

import numpy as np


def make_generator(seed):
    """Return a Generator seeded from an integer (or None for OS entropy)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def spawn_streams(rng, count):
    """Spawn `count` independent child generators from `rng`.

    Children are derived from the generator's seed sequence, so the same
    parent in the same call order always yields the same children.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    seq = rng.bit_generator.seed_seq
    return [np.random.Generator(np.random.Philox(child)) for child in seq.spawn(count)]
