"""Seed plumbing: every public function accepts an int, a SeedSequence or None."""

from __future__ import annotations

import numpy as np


def seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def spawn(seed, n: int) -> list[np.random.SeedSequence]:
    return seed_sequence(seed).spawn(n)
