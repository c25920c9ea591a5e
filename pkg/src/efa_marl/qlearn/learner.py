"""Value-decomposition Q-learning with a weighted TD operator, dynamic
penalty factor, and a counterfactual regularizer for the elected first-mover.

Training replays whole episodes: per-agent GRU hidden states and the election
encoder are reconstructed from episode start, so sampled transitions see the
same recurrent context they saw at collection time. The stored hard election
vector is kept as the forward value; gradients reach the election parameters
through a straight-through blend with the (noise-free) soft relaxation
recomputed at replay time.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..efa import ElectionMechanism, ElectionWeights
from ..numerics.layers import log_softmax
from ..numerics.optim import rmsprop_step
from ..numerics.rng import SeededRng
from ..numerics.tensor import (
    Tensor,
    backward,
    matmul,
    mul,
    no_grad,
    reshape,
    square,
    take_rows,
    tsum,
)
from .nets import AgentQNet, CentralCritic, make_target, sync_target
from .replay import EpisodeBuffer, Transition


@dataclass
class Hyperparams:
    gamma: float = 0.99
    lr: float = 5e-4
    rms_decay: float = 0.99
    eps_start: float = 0.2
    eps_final: float = 0.05
    eps_anneal_steps: int = 50_000
    batch_episodes: int = 30
    target_period: int = 200
    hold_steps: int = 5
    lambda_cf: float = 0.1
    alpha0: float = 0.5
    buffer_capacity: int = 2000
    hidden: int = 64
    attention_heads: int = 4
    head_dim: int = 16
    beta: float = 1.0
    election_stop_gradient: bool = False

    def validate(self) -> None:
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.lr <= 0.0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if not 0.0 < self.rms_decay < 1.0:
            raise ValueError(f"rms_decay must be in (0, 1), got {self.rms_decay}")
        if not 0.0 <= self.eps_final <= self.eps_start <= 1.0:
            raise ValueError(
                f"epsilon schedule needs 0 <= eps_final <= eps_start <= 1, "
                f"got {self.eps_final}..{self.eps_start}"
            )
        if not 0.0 < self.alpha0 <= 1.0:
            raise ValueError(f"alpha0 must be in (0, 1], got {self.alpha0}")
        if self.lambda_cf < 0.0:
            raise ValueError(f"lambda_cf must be >= 0, got {self.lambda_cf}")
        for name in ("batch_episodes", "target_period", "hold_steps",
                     "buffer_capacity", "attention_heads", "hidden", "head_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")

    def to_dict(self) -> dict:
        return asdict(self)


# -- elementary operations (unit-testable pieces of the update rule) --------


def epsilon_at(env_step: int, hp: Hyperparams | None = None) -> float:
    """Linear anneal from eps_start to eps_final over eps_anneal_steps."""
    hp = hp or Hyperparams()
    frac = min(env_step, hp.eps_anneal_steps) / hp.eps_anneal_steps
    return hp.eps_start - (hp.eps_start - hp.eps_final) * frac


def select_action(q: np.ndarray, epsilon: float, rng: SeededRng) -> int:
    """Epsilon-greedy; greedy ties break to the lowest index. Both random
    draws happen unconditionally so stream consumption is branch-free."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    q = np.asarray(q).reshape(-1)
    coin = rng.random()
    random_action = int(rng.integers(q.size))
    if coin < epsilon:
        return random_action
    return int(np.argmax(q))


def mix(chosen_qs) -> float:
    """Additive value decomposition: Q_tot = sum of per-agent utilities."""
    return float(np.sum(np.asarray(chosen_qs, dtype=np.float64)))


def td_target(reward: float, done: bool, max_next_qtot_target: float,
              gamma: float = 0.99) -> float:
    if done:
        return float(reward)
    return float(reward + gamma * max_next_qtot_target)


def weighting(q_tot: float, q_tot_target_same_action: float, alpha: float) -> float:
    """1 for underestimated joint values, the penalty alpha otherwise."""
    return 1.0 if q_tot < q_tot_target_same_action else alpha


def update_alpha(batch_weights) -> float:
    """Next penalty factor: mean of the batch's weights, clamped to (0, 1]."""
    w = np.asarray(batch_weights, dtype=np.float64).reshape(-1)
    if w.size == 0:
        raise ValueError("update_alpha: empty batch")
    return min(float(np.mean(w)), 1.0)


def counterfactual_advantage(critic_q: np.ndarray, pi: np.ndarray, action_index: int) -> float:
    """A_f = Q(s, u) - sum_a pi(a) Q(s, <u^-f, a>), from one critic output row."""
    critic_q = np.asarray(critic_q, dtype=np.float64).reshape(-1)
    pi = np.asarray(pi, dtype=np.float64).reshape(-1)
    return float(critic_q[action_index] - np.dot(pi, critic_q))


def _softmax_np(v: np.ndarray) -> np.ndarray:
    e = np.exp(v - v.max())
    return e / e.sum()


def _onehot_rows(indices: np.ndarray, width: int) -> np.ndarray:
    out = np.zeros((indices.size, width))
    out[np.arange(indices.size), indices] = 1.0
    return out


def _stop_grad(cache: dict | None, key, compute):
    """Detached scalar data: recomputed when training, pinned when certifying."""
    if cache is None:
        return compute()
    if key not in cache:
        cache[key] = compute()
    return cache[key]


# -- the learner -------------------------------------------------------------


@dataclass
class RolloutState:
    """Per-episode recurrent state carried between environment steps."""

    q_hiddens: list  # one (1 x hidden) tensor per agent
    enc_hidden: Tensor  # n x hidden
    election: ElectionWeights | None
    last_actions: np.ndarray  # n x |A| one-hot (zeros at t=0)
    transitions: list = field(default_factory=list)


class Learner:
    """One EFA-DQN learner: per-agent Q-nets with targets, a central critic
    with a target, the election mechanism, replay, and the update rule."""

    def __init__(
        self,
        n_agents: int,
        obs_dim: int,
        n_actions: int,
        hp: Hyperparams,
        rng_init: SeededRng,
        fixed_first_mover: int | None = None,
    ):
        hp.validate()
        self.n_agents = n_agents
        self.obs_dim = obs_dim
        self.n_actions = n_actions
        self.hp = hp
        self.fixed_first_mover = fixed_first_mover
        self.alpha = hp.alpha0

        self.qnets = [AgentQNet(obs_dim, n_actions, rng_init, hp.hidden)
                      for _ in range(n_agents)]
        self.qnets_target = [make_target(net) for net in self.qnets]
        self.critic = CentralCritic(n_agents, obs_dim, n_actions, rng_init, hp.hidden)
        self.critic_target = make_target(self.critic)
        self.election = ElectionMechanism(
            obs_dim, n_actions, rng_init,
            hidden=hp.hidden, heads=hp.attention_heads,
            head_dim=hp.head_dim, hold_steps=hp.hold_steps,
        )
        self.buffer = EpisodeBuffer(hp.buffer_capacity)
        self._segment_cache: dict[tuple[int, int], np.ndarray] = {}

        self.env_steps = 0
        self.optimizer_steps = 0
        self.episodes = 0

    # -- parameter access ----------------------------------------------------

    def policy_parameters(self):
        params = [p for net in self.qnets for p in net.parameters()]
        params.extend(self.election.parameters())
        return params

    def begin_episode(self) -> RolloutState:
        return RolloutState(
            q_hiddens=[net.initial_hidden(1) for net in self.qnets],
            enc_hidden=self.election.initial_hidden(self.n_agents),
            election=None,
            last_actions=np.zeros((self.n_agents, self.n_actions)),
        )

    # -- acting ---------------------------------------------------------------

    def act(
        self,
        observations: np.ndarray,
        t: int,
        rollout: RolloutState,
        epsilon: float,
        rng_explore: SeededRng,
        rng_election: SeededRng,
    ) -> tuple[np.ndarray, ElectionWeights, np.ndarray]:
        """Elect (or hold), then epsilon-greedy per agent. Returns the action
        indices, the election, and the greedy q-values (one row per agent)."""
        obs = np.asarray(observations, dtype=np.float64)
        with no_grad():  # rollouts never backpropagate; replay rebuilds the tape
            weights, rollout.enc_hidden = self.election.elect(
                obs, rollout.last_actions, t, rollout.election, rollout.enc_hidden,
                rng_election, beta=self.hp.beta, forced=self.fixed_first_mover,
            )
            rollout.election = weights

            actions = np.zeros(self.n_agents, dtype=np.intp)
            q_rows = np.zeros((self.n_agents, self.n_actions))
            for i, net in enumerate(self.qnets):
                q, rollout.q_hiddens[i] = net.q_values(obs[i : i + 1], rollout.q_hiddens[i])
                q_rows[i] = q.data[0]
                actions[i] = select_action(q.data[0], epsilon, rng_explore)
        return actions, weights, q_rows

    def store_step(
        self,
        rollout: RolloutState,
        observations: np.ndarray,
        actions: np.ndarray,
        reward: float,
        next_observations: np.ndarray,
        done: bool,
        election: ElectionWeights,
    ) -> None:
        onehot = _onehot_rows(np.asarray(actions, dtype=np.intp), self.n_actions)
        rollout.transitions.append(
            Transition(
                observations=np.asarray(observations, dtype=np.float64).copy(),
                actions_onehot=onehot,
                reward=float(reward),
                next_observations=np.asarray(next_observations, dtype=np.float64).copy(),
                done=bool(done),
                election=election.hard.copy(),
            )
        )
        rollout.last_actions = onehot
        self.env_steps += 1

    def end_episode(self, rollout: RolloutState) -> None:
        self.buffer.add_episode(rollout.transitions)
        self.episodes += 1

    # -- learning --------------------------------------------------------------

    def ready_to_train(self) -> bool:
        return self.episodes > self.hp.batch_episodes

    def train_step(self, rng_replay: SeededRng) -> tuple[float, float]:
        """One optimizer step on a sampled batch. Returns (loss, critic loss)."""
        episodes = self.buffer.sample(self.hp.batch_episodes, rng_replay)
        loss, batch_weights = self.loss_on_batch(episodes)
        backward(loss)
        rmsprop_step(self.policy_parameters(), self.hp.lr, self.hp.rms_decay)
        self.alpha = update_alpha(batch_weights)

        critic_loss = 0.0
        if self.hp.lambda_cf != 0.0:
            critic_loss = self.critic_update(episodes)

        self.optimizer_steps += 1
        self.sync_targets()
        return loss.item(), critic_loss

    def sync_targets(self) -> None:
        """Copy online parameters into targets every `target_period` steps."""
        if self.optimizer_steps > 0 and self.optimizer_steps % self.hp.target_period == 0:
            for online, target in zip(self.qnets, self.qnets_target):
                sync_target(target, online)
            sync_target(self.critic_target, self.critic)

    # -- loss assembly ----------------------------------------------------------

    def loss_on_batch(self, episodes, election_mode: str = "straight_through",
                      sg_cache: dict | None = None):
        """Weighted TD loss plus the counterfactual regularizer over a batch of
        complete episodes.

        election_mode:
          * "straight_through" — forward value is the stored hard election,
            backward flows through the recomputed soft relaxation (training);
          * "soft" — the soft relaxation itself is the forward value (used by
            the finite-difference gradient certification, which cannot see
            through the piecewise-constant hard selection).

        sg_cache pins the stop-gradient quantities (TD weights, advantages,
        greedy picks) across repeated evaluations: pass an empty dict when
        finite-differencing so the certified function holds them fixed at the
        base point, exactly as the tape treats them. Training passes None.

        Returns (loss tensor, flat list of TD weights for the alpha update).
        """
        if election_mode not in ("straight_through", "soft"):
            raise ValueError(f"unknown election_mode {election_mode!r}")
        batch = len(episodes)
        horizon = len(episodes[0])
        if any(len(ep) != horizon for ep in episodes):
            raise ValueError("episodes in one batch must share a horizon")
        n, acts = self.n_agents, self.n_actions
        hp = self.hp

        # constants, stacked per step: obs[t] is (B, n, obs_dim) etc.
        obs = np.stack([[ep[t].observations for ep in episodes] for t in range(horizon)])
        actions = np.stack([[ep[t].actions_onehot for ep in episodes] for t in range(horizon)])
        rewards = np.array([[ep[t].reward for ep in episodes] for t in range(horizon)])
        dones = np.array([[ep[t].done for ep in episodes] for t in range(horizon)])
        elected = np.array([[ep[t].elected for ep in episodes] for t in range(horizon)])

        hiddens = [net.initial_hidden(batch) for net in self.qnets]
        hiddens_tgt = [net.initial_hidden(batch) for net in self.qnets_target]
        track_election = hp.lambda_cf != 0.0 and not hp.election_stop_gradient
        enc_hidden = self.election.initial_hidden(batch * n) if track_election else None
        soft_all = None  # (B, n) soft election rows, held between elections

        q_tot_steps = []  # (B, 1) tensors, online Q_tot of the taken action
        tgt_chosen = np.zeros((horizon, batch))  # target Q_tot, same action
        tgt_max = np.zeros((horizon, batch))  # target max Q_tot (per-agent max, summed)
        cf_terms = []

        for t in range(horizon):
            chosen_parts = []
            prev_hiddens = [h for h in hiddens]
            for i in range(n):
                q_i, hiddens[i] = self.qnets[i].q_values(obs[t][:, i, :], hiddens[i])
                chosen_parts.append(tsum(mul(q_i, Tensor(actions[t][:, i, :])), axis=1))
                q_t, hiddens_tgt[i] = self.qnets_target[i].q_values(
                    obs[t][:, i, :], hiddens_tgt[i])
                tgt_chosen[t] += (q_t.data * actions[t][:, i, :]).sum(axis=1)
                tgt_max[t] += q_t.data.max(axis=1)
            q_tot = chosen_parts[0]
            for part in chosen_parts[1:]:
                q_tot = q_tot + part
            q_tot_steps.append(q_tot)

            if hp.lambda_cf != 0.0:
                hard_obs = obs[t][np.arange(batch), elected[t]]  # (B, obs_dim)
                if track_election:
                    last_act = (np.zeros((batch * n, acts)) if t == 0
                                else actions[t - 1].reshape(batch * n, acts))
                    enc_hidden = self.election.encode(
                        obs[t].reshape(batch * n, -1), last_act, enc_hidden)
                    if t % hp.hold_steps == 0:
                        soft_all = self.election.soft_weights_batched(enc_hidden, batch, n)
                    # first-mover observation: soft blend of this step's rows
                    weighted = mul(reshape(soft_all, (batch * n, 1)),
                                   Tensor(obs[t].reshape(batch * n, -1)))
                    blended = matmul(Tensor(self._segment_selector(batch, n)), weighted)
                    if election_mode != "soft":
                        # straight-through: value is the stored elected agent's obs
                        blended = blended + Tensor(hard_obs - blended.data)
                else:
                    blended = Tensor(hard_obs)
                cf_terms.append(self._counterfactual_term(
                    t, obs[t], actions[t], elected[t], prev_hiddens, blended, sg_cache))

        # targets and weights are constants under differentiation
        y = np.zeros((horizon, batch))
        for t in range(horizon):
            next_max = tgt_max[t + 1] if t + 1 < horizon else np.zeros(batch)
            y[t] = rewards[t] + (1.0 - dones[t]) * hp.gamma * next_max

        loss = Tensor(np.zeros((1, 1)))
        batch_weights = []
        for t in range(horizon):
            w_t = _stop_grad(sg_cache, ("w", t), lambda t=t: np.where(
                q_tot_steps[t].data[:, 0] < tgt_chosen[t], 1.0, self.alpha))
            batch_weights.extend(w_t.tolist())
            diff = Tensor(y[t].reshape(-1, 1)) - q_tot_steps[t]
            loss = loss + tsum(mul(square(diff), Tensor(w_t.reshape(-1, 1))))

        if cf_terms:
            cf_total = cf_terms[0]
            for term in cf_terms[1:]:
                cf_total = cf_total + term
            loss = loss + hp.lambda_cf * cf_total
        return loss, batch_weights

    def _segment_selector(self, batch: int, n: int) -> np.ndarray:
        """(batch, batch*n) block matrix summing each episode's n weighted rows."""
        key = (batch, n)
        if key not in self._segment_cache:
            sel = np.zeros((batch, batch * n))
            for b in range(batch):
                sel[b, b * n : (b + 1) * n] = 1.0
            self._segment_cache[key] = sel
        return self._segment_cache[key]

    def _counterfactual_term(self, t, obs_t, actions_t, elected_t,
                             prev_hiddens, blended, sg_cache):
        """sum_b A_f(b) * log pi_f(greedy | o_f) at one step, A_f detached."""
        term = Tensor(np.zeros((1, 1)))
        for f in np.unique(elected_t):
            group = np.flatnonzero(elected_t == f)
            f = int(f)
            obs_f = take_rows(blended, group)
            h_prev = take_rows(prev_hiddens[f], group)
            q_f, _ = self.qnets[f].q_values(obs_f, h_prev)

            greedy = _stop_grad(sg_cache, ("greedy", t, f),
                                lambda: q_f.data.argmax(axis=1))
            pick = _onehot_rows(greedy, self.n_actions)
            log_pi = tsum(mul(log_softmax(q_f), Tensor(pick)), axis=1)  # (|G|, 1)

            def compute_adv():
                act_idx = actions_t[group].argmax(axis=2)
                feats = self.critic.features_batch(
                    obs_t[group], act_idx, np.full(len(group), f))
                critic_q = self.critic.q_vector(feats).data
                return np.array([
                    counterfactual_advantage(critic_q[k], _softmax_np(q_f.data[k]),
                                             int(act_idx[k, f]))
                    for k in range(len(group))
                ])

            adv = _stop_grad(sg_cache, ("adv", t, f), compute_adv)
            term = term + tsum(mul(log_pi, Tensor(adv.reshape(-1, 1))))
        return term

    # -- critic ---------------------------------------------------------------

    def critic_update(self, episodes) -> float:
        """1-step TD regression of the online critic toward the target critic."""
        cur, nxt = [], []
        rewards, boot = [], []
        for ep in episodes:
            for t, tr in enumerate(ep):
                cur.append((tr.observations, tr.action_indices, tr.elected))
                rewards.append(tr.reward)
                terminal = tr.done or t + 1 >= len(ep)
                boot.append(0.0 if terminal else 1.0)
                follow = ep[t + 1] if not terminal else tr
                nxt.append((follow.observations, follow.action_indices, follow.elected))

        def batch_features(rows):
            obs = np.stack([r[0] for r in rows])
            acts = np.stack([r[1] for r in rows])
            elec = np.array([r[2] for r in rows])
            return self.critic.features_batch(obs, acts, elec), acts, elec

        feats, cur_acts, cur_elec = batch_features(cur)
        next_feats, nxt_acts, nxt_elec = batch_features(nxt)
        taken = cur_acts[np.arange(len(cur)), cur_elec]
        next_taken = nxt_acts[np.arange(len(nxt)), nxt_elec]
        q_next = self.critic_target.q_vector(next_feats).data[
            np.arange(len(nxt)), next_taken]
        targets = np.asarray(rewards) + np.asarray(boot) * self.hp.gamma * q_next
        pick = _onehot_rows(np.asarray(taken, dtype=np.intp), self.n_actions)
        q = tsum(mul(self.critic.q_vector(feats), Tensor(pick)), axis=1)
        diff = Tensor(np.asarray(targets).reshape(-1, 1)) - q
        loss = tsum(square(diff)) * (1.0 / len(targets))
        backward(loss)
        rmsprop_step(self.critic.parameters(), self.hp.lr, self.hp.rms_decay)
        return loss.item()
