"""Counter-based random substreams.

Every shot gets its own Philox stream keyed by ``(master_seed, stream, shot)``
so ensembles are reproducible and independent of execution order.  ``stream``
separates logically distinct ensembles (sweep cells, reference records,
validation batches) under one master seed.
"""

from __future__ import annotations

import numpy as np

_MASK32 = 0xFFFFFFFF
_MASK64 = 0xFFFFFFFFFFFFFFFF


def substream(master_seed: int, stream: int, shot: int = 0) -> np.random.Generator:
    """Generator for one shot, derived from (master_seed, stream, shot).

    ``stream`` and ``shot`` must fit in 32 bits each; the master seed is
    truncated to 64 bits.
    """
    if not 0 <= stream <= _MASK32:
        raise ValueError(f"stream {stream} outside 32-bit range")
    if not 0 <= shot <= _MASK32:
        raise ValueError(f"shot {shot} outside 32-bit range")
    key = np.array(
        [master_seed & _MASK64, ((stream & _MASK32) << 32) | (shot & _MASK32)],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))
