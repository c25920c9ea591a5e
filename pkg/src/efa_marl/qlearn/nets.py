"""Per-agent recurrent Q-networks and the central counterfactual critic."""

from __future__ import annotations

import copy

import numpy as np

from ..numerics.layers import GruParams, gru_step, init_uniform, init_zeros, linear
from ..numerics.rng import SeededRng
from ..numerics.tensor import Parameter, Tensor, as_tensor, relu


class AgentQNet:
    """FC -> ReLU -> GRU -> FC; hidden state advances on every query."""

    def __init__(self, obs_dim: int, n_actions: int, rng: SeededRng, hidden: int = 64):
        self.obs_dim = obs_dim
        self.n_actions = n_actions
        self.hidden = hidden
        self.fc_in_w = init_uniform(rng, hidden, obs_dim)
        self.fc_in_b = init_zeros(hidden)
        self.gru = GruParams.create(hidden, hidden, rng)
        self.fc_out_w = init_uniform(rng, n_actions, hidden)
        self.fc_out_b = init_zeros(n_actions)

    def parameters(self) -> list[Parameter]:
        return [self.fc_in_w, self.fc_in_b, *self.gru.parameters(),
                self.fc_out_w, self.fc_out_b]

    def initial_hidden(self, n_rows: int = 1) -> Tensor:
        return Tensor(np.zeros((n_rows, self.hidden)))

    def q_values(self, obs, hidden: Tensor) -> tuple[Tensor, Tensor]:
        """(q row(s), new hidden) for row-batched observations."""
        x = relu(linear(as_tensor(obs), self.fc_in_w, self.fc_in_b))
        new_hidden = gru_step(x, hidden, self.gru)
        q = linear(new_hidden, self.fc_out_w, self.fc_out_b)
        return q, new_hidden


class CentralCritic:
    """Feed-forward map from (all observations, one-hot actions of non-elected
    agents, one-hot elected index) to a Q-vector over the elected agent's actions."""

    def __init__(self, n_agents: int, obs_dim: int, n_actions: int,
                 rng: SeededRng, hidden: int = 64):
        self.n_agents = n_agents
        self.obs_dim = obs_dim
        self.n_actions = n_actions
        self.in_dim = n_agents * obs_dim + (n_agents - 1) * n_actions + n_agents
        self.w1 = init_uniform(rng, hidden, self.in_dim)
        self.b1 = init_zeros(hidden)
        self.w2 = init_uniform(rng, hidden, hidden)
        self.b2 = init_zeros(hidden)
        self.w3 = init_uniform(rng, n_actions, hidden)
        self.b3 = init_zeros(n_actions)

    def parameters(self) -> list[Parameter]:
        return [self.w1, self.b1, self.w2, self.b2, self.w3, self.b3]

    def q_vector(self, features) -> Tensor:
        h = relu(linear(as_tensor(features), self.w1, self.b1))
        h = relu(linear(h, self.w2, self.b2))
        return linear(h, self.w3, self.b3)

    def features(self, observations: np.ndarray, actions: np.ndarray, elected: int) -> np.ndarray:
        """Flat critic input; `observations` is n x obs_dim, `actions` length n."""
        parts = [observations.reshape(-1)]
        for i in range(self.n_agents):
            if i == elected:
                continue
            onehot = np.zeros(self.n_actions)
            onehot[actions[i]] = 1.0
            parts.append(onehot)
        elected_onehot = np.zeros(self.n_agents)
        elected_onehot[elected] = 1.0
        parts.append(elected_onehot)
        return np.concatenate(parts)

    def features_batch(self, observations: np.ndarray, actions: np.ndarray,
                       elected: np.ndarray) -> np.ndarray:
        """Row-batched features: observations (R, n, obs_dim), actions (R, n)
        integer indices, elected (R,). Matches `features` row for row."""
        r = observations.shape[0]
        n, acts = self.n_agents, self.n_actions
        onehots = np.zeros((r, n, acts))
        onehots[np.arange(r)[:, None], np.arange(n)[None, :], actions] = 1.0
        keep = np.ones((r, n), dtype=bool)
        keep[np.arange(r), elected] = False
        others = onehots[keep].reshape(r, (n - 1) * acts)
        elected_onehot = np.zeros((r, n))
        elected_onehot[np.arange(r), elected] = 1.0
        return np.concatenate(
            [observations.reshape(r, -1), others, elected_onehot], axis=1)


def make_target(net):
    """Frozen deep copy: same forward code, parameters detached from the tape."""
    target = copy.deepcopy(net)
    for p in target.parameters():
        p.requires_grad = False
    return target


def sync_target(target, online) -> None:
    """Copy online parameter values into the target copy."""
    for t, o in zip(target.parameters(), online.parameters()):
        t.data[...] = o.data
