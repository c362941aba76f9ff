"""Keyed random streams.

Every random draw in an experiment comes from a Philox generator keyed by
``(master seed, replication index, role)``.  Philox is counter based, so a
stream depends only on its key and never on the order in which streams are
created or on how replications are spread over workers.
"""

from __future__ import annotations

import numpy as np

ROLES = {"data": 0, "weights": 1, "bootstrap": 2, "aux": 3}


def stream(seed: int, index: int = 0, role: str = "data") -> np.random.Generator:
    """Return the generator for one ``(seed, index, role)`` key."""
    try:
        role_id = ROLES[role]
    except KeyError:
        raise ValueError(f"unknown stream role {role!r}") from None
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index), role_id))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(seed) -> np.random.Generator:
    """Accept an int seed, a ``SeedSequence`` or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    if seed is None:
        raise ValueError("an explicit seed is required for reproducible draws")
    return stream(int(seed))
