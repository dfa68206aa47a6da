"""Index-addressed random streams.

Every random decision in the package draws from a generator keyed by a
tuple of non-negative integers, e.g. ``(master_seed, run_index, iteration)``.
The streams are Philox (counter-based), so the values a task sees depend
only on its key, never on the order in which tasks happen to execute.
"""

from __future__ import annotations

import numpy as np


def substream(*key: int) -> np.random.Generator:
    """Return the generator addressed by ``key``."""
    if not key:
        raise ValueError("substream needs at least one key component")
    entropy = [int(k) for k in key]
    if any(k < 0 for k in entropy):
        raise ValueError(f"stream key components must be >= 0, got {key}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def as_generator(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        raise ValueError("an explicit seed or generator is required")
    return substream(int(rng))
