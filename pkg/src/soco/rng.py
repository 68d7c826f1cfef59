"""Seed-stream discipline.

Every random draw in the package flows from one master seed through a named
sub-stream, so unrelated stages (data generation, imputation noise, map
modification) cannot perturb each other and per-key draws are independent of
evaluation order and worker count.  Streams are derived with SeedSequence
spawn keys, which gives explicit splittability without shared state.
"""

from __future__ import annotations

import numpy as np

from .core import ConfigError

STREAM_IDS = {"data": 1, "noise": 2, "modify": 3}


def substream(master_seed: int, stream: str, *key: int) -> np.random.Generator:
    """Generator for (master_seed, stream, *key); identical args, identical draws."""
    if stream not in STREAM_IDS:
        raise ConfigError(f"unknown rng stream {stream!r}")
    parts = (STREAM_IDS[stream],) + tuple(int(k) for k in key)
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=parts)
    return np.random.default_rng(ss)
