"""Deterministic random-stream management.

Every stochastic operation in this package takes an explicit numpy
``Generator``.  Streams are derived from a master seed through
counter-based Philox keys, so any run, sensor or fusion stage can be
reproduced independently of execution order or parallelism.
"""

from __future__ import annotations

import numpy as np


def seed_sequence(seed: int, *key: int) -> np.random.SeedSequence:
    """Root seed sequence for ``seed``, optionally descended along ``key``."""
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))


def substream(seq: np.random.SeedSequence, *key: int) -> np.random.SeedSequence:
    """Child sequence of ``seq`` addressed by the integers in ``key``."""
    return np.random.SeedSequence(
        entropy=seq.entropy,
        spawn_key=tuple(seq.spawn_key) + tuple(int(k) for k in key),
    )


def generator(seq: np.random.SeedSequence | int) -> np.random.Generator:
    """Philox generator for a seed sequence (or a bare integer seed)."""
    if not isinstance(seq, np.random.SeedSequence):
        seq = seed_sequence(seq)
    return np.random.Generator(np.random.Philox(seq))
