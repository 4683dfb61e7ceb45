"""Deterministic RNG stream derivation.

Every random stream used by an experiment is derived from a single master seed
through :class:`numpy.random.SeedSequence` with a spawn key of
``(purpose code, trial index)``.  The derived integer seed is what gets written
into dataset and report files, so any stream can be recreated from the file alone
without knowing the master seed.
"""

import numpy as np

PURPOSES = {
    "data": 0,
    "bases": 1,
    "init": 2,
    "optimizer": 3,
    "sampling": 4,
    "target": 5,
}


def derive_seed(master_seed: int, purpose: str, trial: int = 0) -> int:
    """Return a 63-bit integer seed for ``(purpose, trial)`` under ``master_seed``."""
    if purpose not in PURPOSES:
        raise KeyError(f"unknown RNG purpose {purpose!r}; expected one of {sorted(PURPOSES)}")
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(PURPOSES[purpose], int(trial)))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def make_rng(seed) -> np.random.Generator:
    """Accept an int seed or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
