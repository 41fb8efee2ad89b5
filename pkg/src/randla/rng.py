"""Reproducible random streams keyed by ``(seed, stream_id)``.

Every stream is a Philox counter-based generator whose key is derived from a
:class:`numpy.random.SeedSequence` with ``spawn_key=(stream_id,)``. Trials use
their index as ``stream_id``, so results do not depend on execution order or
thread count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= _MASK64 and 0 <= self.stream_id <= _MASK64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, k: int) -> np.random.Generator:
        """Generator for the ``k``-th independent sub-stream of this stream."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, k))
        return np.random.Generator(np.random.Philox(ss))


def as_generator(rng) -> np.random.Generator:
    """Accept an :class:`RngStream`, a ``Generator``, an int seed or ``None``."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if rng is None or isinstance(rng, (int, np.integer)):
        return RngStream(int(rng or 0)).generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")
