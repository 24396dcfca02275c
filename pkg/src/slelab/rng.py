"""Counter-based random number streams.

Every sample path gets its own Philox stream derived from (master_seed, index),
so ensembles are reproducible independently of execution order or thread count.
"""

from __future__ import annotations

import numpy as np


def path_rng(master_seed: int, index: int) -> np.random.Generator:
    """Generator for path `index` of the ensemble seeded by `master_seed`."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def child_seed(master_seed: int, index: int) -> int:
    """Derived integer seed for member `index` of an ensemble.

    Used where a config object carries a single seed: the ensemble member's
    config gets this value, so membership depends only on (master_seed, index)
    and never on execution order.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])
