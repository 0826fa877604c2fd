"""Seeded random substreams.

Every random draw in cvauc comes from a Philox generator (a counter-based
bit generator) seeded by ``SeedSequence(entropy=seed, spawn_key=key)``.
The key names the purpose and the position of the draw, e.g.
``(Stream.PARTITION, trial, m, class_index)``, so the numbers drawn for one
repetition do not depend on how many other repetitions ran before it or in
which worker.
"""
from enum import IntEnum
from typing import Sequence, Union

import numpy as np

SeedLike = Union[int, Sequence[int]]


class Stream(IntEnum):
    PARTITION = 1
    DATASET = 2
    TEST_SAMPLE = 3


def as_entropy(seed: SeedLike):
    if isinstance(seed, (int, np.integer)):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        return int(seed)
    return [int(word) for word in seed]


def substream(seed: SeedLike, *key: int) -> np.random.Generator:
    """Generator for the substream identified by (seed, key)"""
    sequence = np.random.SeedSequence(
        entropy=as_entropy(seed),
        spawn_key=tuple(int(part) for part in key)
    )
    return np.random.Generator(np.random.Philox(sequence))
