"""Counter-based uniform streams.

Every trajectory draws from a Philox-4x64 stream whose 128-bit key is the
pair ``(seed, stream_id)``. Trajectory ``t`` of sweep cell ``c`` uses
``stream_id = c * n_traj + t``. Step ``i`` of a walk consumes the ``i``-th
uniform of its stream, so a walk is fully determined by the key and is
independent of chunking, batching and thread scheduling.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_BUFFER = 4096


class Rng:
    """Deterministic stream of uniforms on [0, 1)."""

    def __init__(self, seed: int, stream_id: int = 0):
        if not (0 <= seed <= _MASK64 and 0 <= stream_id <= _MASK64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))
        self._buf = np.empty(0)
        self._pos = 0
        self.consumed = 0

    def __repr__(self):
        return f"Rng(seed={self.seed}, stream_id={self.stream_id}, consumed={self.consumed})"

    def uniform(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = self._gen.random(_BUFFER)
            self._pos = 0
        u = float(self._buf[self._pos])
        self._pos += 1
        self.consumed += 1
        return u

    def uniforms(self, n: int) -> np.ndarray:
        """The next ``n`` uniforms of the stream as a float64 array."""
        head = self._buf[self._pos:self._pos + n]
        self._pos += len(head)
        rest = n - len(head)
        self.consumed += n
        if rest == 0:
            return head.copy()
        return np.concatenate([head, self._gen.random(rest)])
