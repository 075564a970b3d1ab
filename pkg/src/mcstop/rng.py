"""Reproducible random streams keyed by (base seed, stream index).

Streams use the counter-based Philox generator so that replications can
be produced in any order, on any worker layout, with identical results.
"""
from __future__ import annotations

import numpy as np


def stream(base_seed: int, index: int) -> np.random.Generator:
    """Independent generator for one replication or auxiliary task."""
    if base_seed < 0 or index < 0:
        raise ValueError("seeds and stream indices must be nonnegative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([base_seed, index])))


def seed_fingerprint(base_seed: int, index: int) -> int:
    """Stable integer identifying the stream, recorded in result rows."""
    ss = np.random.SeedSequence([base_seed, index])
    return int(ss.generate_state(1, np.uint64)[0])
