"""Counter-style random substreams.

A substream is addressed by integer keys appended to the spawn key of a
master :class:`numpy.random.SeedSequence`, e.g. ``(rep, m)``. The same
address always yields the same stream, independent of how many other
streams were created or in which order, which makes per-rep and per-mode
work schedule independent.
"""

from __future__ import annotations

import numpy as np


def as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        raise TypeError("pass a seed or SeedSequence; a Generator cannot be split into substreams")
    return np.random.SeedSequence(seed)


def substream_seed(seed, *keys: int) -> np.random.SeedSequence:
    ss = as_seed_sequence(seed)
    return np.random.SeedSequence(
        entropy=ss.entropy,
        spawn_key=tuple(ss.spawn_key) + tuple(int(k) for k in keys),
        pool_size=ss.pool_size,
    )


def substream(seed, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(substream_seed(seed, *keys)))
