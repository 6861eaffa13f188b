"""Counter-based random streams.

Every stream is addressed by ``(seed, *key)`` through numpy's ``SeedSequence``
spawn keys, so the stream of chain 7 does not depend on how many other chains
exist or in which order workers finish.
"""

from __future__ import annotations

import enum

import numpy as np


class Purpose(enum.IntEnum):
    MOVES = 0
    STRATEGY = 1
    INIT = 2


def stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *key: int) -> int:
    """A 63-bit integer seed for a sub-task, e.g. one cross-validation fold."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
