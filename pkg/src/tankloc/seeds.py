"""Derived random streams.

One root seed drives the whole experiment; every consumer (per-class
shuffles, per-fold carves, per-epoch batch orders) gets its own stream
derived through ``numpy.random.SeedSequence`` spawn keys, so streams never
collide or correlate across folds and architectures.
"""

from __future__ import annotations

import numpy as np

# Fixed stream namespaces so unrelated consumers can never share a key.
STREAM_FOLD_ASSIGN = 1
STREAM_VAL_CARVE = 2
STREAM_TRAIN = 3
STREAM_EPOCH = 4
STREAM_AUGMENT = 5


def derived_rng(root_seed: int, *path: int) -> np.random.Generator:
    """Generator for the stream identified by ``path`` under ``root_seed``."""
    return np.random.default_rng(np.random.SeedSequence(root_seed, spawn_key=tuple(path)))


def derived_seed(root_seed: int, *path: int) -> int:
    """A 63-bit integer seed for consumers that want a plain seed (torch)."""
    state = np.random.SeedSequence(root_seed, spawn_key=tuple(path)).generate_state(2, np.uint32)
    return int(state[0]) << 31 | int(state[1]) >> 1
