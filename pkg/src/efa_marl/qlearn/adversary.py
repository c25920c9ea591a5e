"""Independent recurrent DQN for the deception adversary.

The adversary is excluded from the election and from value mixing: it learns
its own action-value function on its own reward with plain TD targets.
"""

from __future__ import annotations

import numpy as np

from ..numerics.optim import rmsprop_step
from ..numerics.rng import SeededRng
from ..numerics.tensor import Tensor, backward, mul, no_grad, square, tsum
from .learner import Hyperparams, _onehot_rows, select_action
from .nets import AgentQNet, make_target, sync_target
from .replay import EpisodeBuffer, Transition


class AdversaryLearner:
    def __init__(self, obs_dim: int, n_actions: int, hp: Hyperparams, rng_init: SeededRng):
        self.obs_dim = obs_dim
        self.n_actions = n_actions
        self.hp = hp
        self.net = AgentQNet(obs_dim, n_actions, rng_init, hp.hidden)
        self.net_target = make_target(self.net)
        self.buffer = EpisodeBuffer(hp.buffer_capacity)
        self.optimizer_steps = 0
        self.episodes = 0

    def begin_episode(self):
        return {"hidden": self.net.initial_hidden(1), "transitions": []}

    def act(self, obs: np.ndarray, rollout, epsilon: float, rng: SeededRng) -> int:
        with no_grad():
            q, rollout["hidden"] = self.net.q_values(obs.reshape(1, -1), rollout["hidden"])
        return select_action(q.data[0], epsilon, rng)

    def store_step(self, rollout, obs, action, reward, next_obs, done) -> None:
        onehot = _onehot_rows(np.array([action], dtype=np.intp), self.n_actions)
        rollout["transitions"].append(
            Transition(
                observations=np.asarray(obs).reshape(1, -1).copy(),
                actions_onehot=onehot,
                reward=float(reward),
                next_observations=np.asarray(next_obs).reshape(1, -1).copy(),
                done=bool(done),
                election=np.ones(1),
            )
        )

    def end_episode(self, rollout) -> None:
        self.buffer.add_episode(rollout["transitions"])
        self.episodes += 1

    def ready_to_train(self) -> bool:
        return self.episodes > self.hp.batch_episodes

    def train_step(self, rng_replay: SeededRng) -> float:
        episodes = self.buffer.sample(self.hp.batch_episodes, rng_replay)
        horizon = len(episodes[0])
        batch = len(episodes)
        obs = np.stack([[ep[t].observations[0] for ep in episodes] for t in range(horizon)])
        acts = np.stack([[ep[t].actions_onehot[0] for ep in episodes] for t in range(horizon)])
        rewards = np.array([[ep[t].reward for ep in episodes] for t in range(horizon)])
        dones = np.array([[ep[t].done for ep in episodes] for t in range(horizon)])

        hidden = self.net.initial_hidden(batch)
        hidden_tgt = self.net_target.initial_hidden(batch)
        chosen, tgt_max = [], np.zeros((horizon, batch))
        for t in range(horizon):
            q, hidden = self.net.q_values(obs[t], hidden)
            chosen.append(tsum(mul(q, Tensor(acts[t])), axis=1))
            q_t, hidden_tgt = self.net_target.q_values(obs[t], hidden_tgt)
            tgt_max[t] = q_t.data.max(axis=1)

        loss = Tensor(np.zeros((1, 1)))
        for t in range(horizon):
            next_max = tgt_max[t + 1] if t + 1 < horizon else np.zeros(batch)
            y = rewards[t] + (1.0 - dones[t]) * self.hp.gamma * next_max
            loss = loss + tsum(square(Tensor(y.reshape(-1, 1)) - chosen[t]))
        backward(loss)
        rmsprop_step(self.net.parameters(), self.hp.lr, self.hp.rms_decay)
        self.optimizer_steps += 1
        if self.optimizer_steps % self.hp.target_period == 0:
            sync_target(self.net_target, self.net)
        return loss.item()
