"""Seeded random streams.

All randomness in a run flows from one root seed split into named streams
(env, election-noise, exploration, init, replay) so that components can be
perturbed independently and runs are reproducible bit-for-bit.
"""

from __future__ import annotations

import numpy as np

STREAMS = {
    "env": 0,
    "election-noise": 1,
    "exploration": 2,
    "init": 3,
    "replay": 4,
}


class SeededRng:
    """PCG64 generator derived from (seed, stream); deterministic per call sequence."""

    def __init__(self, seed: int, stream: int | str = 0):
        if isinstance(stream, str):
            if stream not in STREAMS:
                raise ValueError(f"unknown rng stream {stream!r}; known: {sorted(STREAMS)}")
            stream = STREAMS[stream]
        self.seed = int(seed)
        self.stream_id = int(stream)
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None) -> np.ndarray:
        return self._gen.uniform(low, high, size=size)

    def random(self, size=None):
        return self._gen.random(size=size)

    def integers(self, n: int, size=None):
        return self._gen.integers(0, n, size=size)

    def gumbel(self, size=None) -> np.ndarray:
        u = self._gen.random(size=size)
        return -np.log(-np.log(u + 1e-20) + 1e-20)

    def normal(self, scale: float = 1.0, size=None) -> np.ndarray:
        return self._gen.normal(0.0, scale, size=size)


def named_streams(seed: int) -> dict[str, SeededRng]:
    """One independent generator per named stream, all derived from `seed`."""
    return {name: SeededRng(seed, name) for name in STREAMS}
