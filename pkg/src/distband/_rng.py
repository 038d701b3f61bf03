"""Deterministic per-replicate random streams."""

import numpy as np

CALIBRATION_STREAM = 0
KS_STREAM = 1
SIMLAB_STREAM = 2


def substream(seed: int, stream: int, index: int) -> np.random.Generator:
    """Independent generator for replicate ``index`` of ``stream``.

    Depends only on its arguments, so any partition of replicates over workers
    reproduces the same draws.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(stream, int(index))))
