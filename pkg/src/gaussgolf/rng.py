"""Seedable, order-independent random streams.

Every stochastic routine in the package draws from a generator built by
:func:`stream`, keyed by the user's seed plus integer coordinates that
identify the unit of work (career index, event/iteration pair, ...).
Because a unit's stream depends only on its key, results do not change
with the number of worker threads or the order work is scheduled in.
"""

from __future__ import annotations

import secrets

import numpy as np

# Domain tags keep streams for different tasks disjoint under one seed.
TAG_MODEL = 1
TAG_PVALUE_SIM = 2
TAG_CAREER = 3
TAG_DITHER = 4
TAG_SYNTH = 5


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return a PCG64 generator for ``(seed, *key)``."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def fresh_seed() -> int:
    """Draw a new 63-bit seed from the OS entropy pool."""
    return secrets.randbits(63)
