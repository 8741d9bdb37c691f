"""Deterministic random-stream derivation.

All randomness in the package flows through counter-based Philox (4x64)
generators keyed by (seed, stream).  Distinct stream indices give
statistically independent streams, so per-round and per-worker streams can
be derived without coordination and results never depend on execution
order or worker count.

Stream index layout:
  [0, 2**62)            protocol round index
  [2**62, 2**63)        reserved named streams (bits, calibration, ...)
  [2**63, 2**64)        worker streams: 2**63 + worker_index
"""

from __future__ import annotations

import numpy as np

ALGORITHM_ID = "numpy-philox4x64"

_MASK64 = (1 << 64) - 1

ROUND_STREAM_LIMIT = 1 << 62
BITS_STREAM = 1 << 62
CALIBRATION_STREAM = (1 << 62) + 1
EVE_STREAM = (1 << 62) + 2
BLOCK_STREAM = (1 << 62) + 3
SWEEP_STREAM = (1 << 62) + 4
WORKER_STREAM_BASE = 1 << 63


def stream_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent Philox stream for (seed, stream).

    Deterministic across runs and platforms for a given numpy version;
    negative seeds are folded into the 64-bit key space.
    """
    key = [int(seed) & _MASK64, int(stream) & _MASK64]
    return np.random.Generator(np.random.Philox(key=key))


def round_generator(seed: int, round_index: int) -> np.random.Generator:
    """Stream for one protocol round; independent of every other round."""
    if not 0 <= round_index < ROUND_STREAM_LIMIT:
        raise ValueError(f"round_index {round_index} outside [0, 2**62)")
    return stream_generator(seed, round_index)


def worker_generator(seed: int, worker_index: int) -> np.random.Generator:
    """Stream for one parallel sampling worker, derived from (seed, worker_index)."""
    if worker_index < 0:
        raise ValueError("worker_index must be nonnegative")
    return stream_generator(seed, WORKER_STREAM_BASE + worker_index)
