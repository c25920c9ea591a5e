"""First-mover election: encode per-agent messages, aggregate them over the
fully connected agent graph with multi-head attention, and elect one agent
via Gumbel-Softmax. The elected agent is held for ``hold_steps`` environment
steps; the encoder's recurrent state advances every step regardless, so each
fresh election sees up-to-date temporal context.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics.layers import (
    AttentionHead,
    GruParams,
    exclusion_mask,
    gru_step,
    gumbel_softmax,
    init_uniform,
    init_zeros,
    linear,
    multi_head_aggregate,
    softmax,
)
from .numerics.rng import SeededRng
from .numerics.tensor import Parameter, Tensor, as_tensor, concat, relu, reshape, transpose

DEFAULT_HOLD_STEPS = 5
DEFAULT_HEADS = 4
DEFAULT_HEAD_DIM = 16
DEFAULT_HIDDEN = 64


@dataclass
class ElectionWeights:
    """Election outcome: hard one-hot, its relaxation, and the hold age."""

    hard: np.ndarray  # one-hot, length n
    soft: np.ndarray  # probability vector, length n
    elected: int
    age: int  # steps since the election that produced this vector

    def aged(self) -> "ElectionWeights":
        return ElectionWeights(self.hard, self.soft, self.elected, self.age + 1)


def fixed_election(index: int, n: int) -> ElectionWeights:
    """Election pinned to one agent (ablation arms and adversary-free paths)."""
    hard = np.zeros(n)
    hard[index] = 1.0
    return ElectionWeights(hard=hard, soft=hard.copy(), elected=index, age=0)


class ElectionMechanism:
    """Encoder (FC+GRU, shared across agents), attention aggregator, and a
    weight generator (single FC shared across agents) feeding Gumbel-Softmax."""

    def __init__(
        self,
        obs_dim: int,
        n_actions: int,
        rng: SeededRng,
        hidden: int = DEFAULT_HIDDEN,
        heads: int = DEFAULT_HEADS,
        head_dim: int = DEFAULT_HEAD_DIM,
        hold_steps: int = DEFAULT_HOLD_STEPS,
    ):
        self.obs_dim = obs_dim
        self.n_actions = n_actions
        self.hidden = hidden
        self.hold_steps = hold_steps
        self.n_heads = heads
        in_dim = obs_dim + n_actions
        self.enc_w = init_uniform(rng, hidden, in_dim)
        self.enc_b = init_zeros(hidden)
        self.enc_gru = GruParams.create(hidden, hidden, rng)
        self.heads = [AttentionHead.create(hidden, head_dim, rng) for _ in range(heads)]
        agg_dim = heads * hidden  # residual fixes each head's width to `hidden`
        self.gen_w = init_uniform(rng, 1, agg_dim)
        self.gen_b = init_zeros(1)
        self._mask_cache: dict[tuple[int, int], object] = {}

    def parameters(self) -> list[Parameter]:
        params = [self.enc_w, self.enc_b, *self.enc_gru.parameters()]
        for head in self.heads:
            params.extend(head.parameters())
        params.extend([self.gen_w, self.gen_b])
        return params

    def initial_hidden(self, n_rows: int) -> Tensor:
        return Tensor(np.zeros((n_rows, self.hidden)))

    # -- pipeline stages ----------------------------------------------------

    def encode(self, obs, last_actions, hidden) -> Tensor:
        """Rows = agents (or batch x agents): h = GRU(ReLU(FC([obs, action])), h_prev)."""
        x = concat([as_tensor(obs), as_tensor(last_actions)], axis=1)
        return gru_step(relu(linear(x, self.enc_w, self.enc_b)), hidden, self.enc_gru)

    def aggregate(self, h: Tensor) -> Tensor:
        if h.shape[0] == 1:
            # no neighbours to attend over; replicate across heads
            return concat([h] * self.n_heads, axis=1)
        return multi_head_aggregate(h, self.heads)

    def logits(self, mfeat: Tensor) -> Tensor:
        """Per-agent election logit via the shared generator FC, as a 1xN row."""
        return transpose(linear(mfeat, self.gen_w, self.gen_b))

    def generate(self, mfeat: Tensor, beta: float, rng: SeededRng) -> ElectionWeights:
        logit_row = self.logits(mfeat)
        soft, hard = gumbel_softmax(logit_row, beta, rng)
        elected = int(np.argmax(hard.data))
        return ElectionWeights(
            hard=hard.data.reshape(-1).copy(),
            soft=soft.data.reshape(-1).copy(),
            elected=elected,
            age=0,
        )

    # -- per-step driver ----------------------------------------------------

    def elect(
        self,
        obs,
        last_actions,
        t: int,
        prev: ElectionWeights | None,
        hidden: Tensor,
        rng: SeededRng,
        beta: float = 1.0,
        forced: int | None = None,
    ) -> tuple[ElectionWeights, Tensor]:
        """Advance the encoder hidden state; re-elect when t is a multiple of
        the hold period (or no election exists yet), otherwise hold."""
        new_hidden = self.encode(obs, last_actions, hidden)
        n = new_hidden.shape[0]
        if forced is not None:
            return fixed_election(forced, n), new_hidden
        if t % self.hold_steps == 0 or prev is None:
            weights = self.generate(self.aggregate(new_hidden), beta, rng)
        else:
            weights = prev.aged()
        return weights, new_hidden

    def soft_weights(self, h: Tensor) -> Tensor:
        """Noise-free relaxation softmax(logits) as a 1xN row; the training-time
        gradient path for replayed elections."""
        return softmax(self.logits(self.aggregate(h)))

    def soft_weights_batched(self, h_all: Tensor, batch: int, n: int) -> Tensor:
        """soft_weights for `batch` independent agent groups at once: rows of
        h_all are episode-major (batch * n, hidden); returns (batch, n).
        Attention stays within each group via a block-diagonal mask."""
        if n == 1:
            mfeat = concat([h_all] * self.n_heads, axis=1)
        else:
            key = (batch, n)
            if key not in self._mask_cache:
                self._mask_cache[key] = exclusion_mask(batch * n, block=n)
            mfeat = multi_head_aggregate(h_all, self.heads, mask=self._mask_cache[key])
        logits = linear(mfeat, self.gen_w, self.gen_b)  # (batch * n, 1)
        return softmax(reshape(logits, (batch, n)))


def first_move_observation(observations, weights: ElectionWeights) -> np.ndarray:
    """The elected agent's observation (one-hot inner product with the rows)."""
    obs = np.asarray(observations, dtype=np.float64)
    if weights.hard.sum() != 1.0 or not np.all((weights.hard == 0) | (weights.hard == 1)):
        raise ValueError("first_move_observation needs a valid one-hot election")
    return obs[weights.elected].copy()


def blended_first_move_observation(obs_rows, soft: Tensor, hard: np.ndarray) -> Tensor:
    """Straight-through blend: value is the elected agent's observation, the
    backward pass flows through the soft weights (1xN row) into the election."""
    soft_st = soft + Tensor(hard.reshape(1, -1) - soft.data)
    return soft_st @ as_tensor(obs_rows)
