"""Episode replay: whole episodes only, so recurrent hidden states can be
reconstructed from episode start when sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics.rng import SeededRng


@dataclass
class Transition:
    observations: np.ndarray        # n x obs_dim
    actions_onehot: np.ndarray      # n x |A|
    reward: float
    next_observations: np.ndarray   # n x obs_dim
    done: bool
    election: np.ndarray            # hard one-hot over the n agents

    @property
    def action_indices(self) -> np.ndarray:
        return self.actions_onehot.argmax(axis=1)

    @property
    def elected(self) -> int:
        return int(self.election.argmax())


class EpisodeBuffer:
    """Ring of complete episodes; sampling is uniform with replacement and
    never crosses episode boundaries."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"buffer capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._episodes: list[list[Transition]] = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._episodes)

    def add_episode(self, episode: list[Transition]) -> None:
        if not episode:
            raise ValueError("cannot store an empty episode")
        if not episode[-1].done:
            raise ValueError("only complete episodes may be stored")
        if len(self._episodes) < self.capacity:
            self._episodes.append(episode)
        else:
            self._episodes[self._next] = episode
            self._next = (self._next + 1) % self.capacity

    def sample(self, k: int, rng: SeededRng) -> list[list[Transition]]:
        if not self._episodes:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(len(self._episodes), size=k)
        return [self._episodes[i] for i in np.atleast_1d(idx)]
