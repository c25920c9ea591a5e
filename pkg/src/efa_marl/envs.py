"""Deterministic 2-D continuous particle worlds.

Two scenarios:

* ``coop_nav`` — n agents cover n landmarks; shared reward is the negative
  sum over landmarks of the distance to the nearest agent, minus 1 per
  colliding agent pair per step.
* ``deception`` — n good agents, one adversary (last index), n landmarks of
  which one is the target. Good reward = -min over good agents of distance
  to target + adversary distance to target; adversary reward = -its distance
  to target. The adversary cannot tell which landmark is the target: good
  agents see landmark displacements with the target listed first, the
  adversary sees them in fixed index order.

Dynamics per step: acceleration = force * unit direction (stop = zero),
v <- (1 - damping) * v + a * dt, p <- p + v * dt, positions clamped to the
arena. Landmarks are static within an episode.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .numerics.rng import SeededRng

SCENARIOS = ("coop_nav", "deception")

# action index -> unit direction; [up, down, left, right, stop]
ACTION_DIRECTIONS = np.array(
    [[0.0, 1.0], [0.0, -1.0], [-1.0, 0.0], [1.0, 0.0], [0.0, 0.0]]
)
N_ACTIONS = 5

DT = 0.1
DAMPING = 0.25
FORCE = 5.0
AGENT_RADIUS = 0.15
LANDMARK_RADIUS = 0.05
EPISODE_LENGTH = 25
ARENA_HALF_WIDTH = 1.5


@dataclass
class WorldState:
    agent_pos: np.ndarray  # n x 2
    agent_vel: np.ndarray  # n x 2
    landmark_pos: np.ndarray  # L x 2
    target_index: int | None  # deception only
    t: int = 0


@dataclass
class StepResult:
    observations: list[np.ndarray]
    reward: float  # shared (coop_nav) or good-team (deception)
    done: bool
    adversary_reward: float | None = None  # deception only


class ParticleEnv:
    """Stateless simulator: reset/step take and return explicit WorldState."""

    def __init__(self, scenario: str, n_agents: int, episode_length: int = EPISODE_LENGTH):
        if scenario not in SCENARIOS:
            raise ValueError(f"unsupported scenario {scenario!r}; expected one of {SCENARIOS}")
        if n_agents < 1:
            raise ValueError(f"n_agents must be >= 1, got {n_agents}")
        self.scenario = scenario
        self.n_agents = n_agents  # good agents in deception
        self.episode_length = episode_length
        # deception appends one adversary after the good agents
        self.n_total = n_agents + 1 if scenario == "deception" else n_agents
        self.n_landmarks = n_agents
        self.obs_dim = 4 + 2 * self.n_landmarks + 2 * (self.n_total - 1)

    # -- lifecycle ---------------------------------------------------------

    def reset(self, rng: SeededRng) -> tuple[WorldState, list[np.ndarray]]:
        """Positions i.i.d. uniform on [-1, 1]^2, velocities zero."""
        agent_pos = rng.uniform(-1.0, 1.0, size=(self.n_total, 2))
        landmark_pos = rng.uniform(-1.0, 1.0, size=(self.n_landmarks, 2))
        target = int(rng.integers(self.n_landmarks)) if self.scenario == "deception" else None
        state = WorldState(
            agent_pos=agent_pos,
            agent_vel=np.zeros((self.n_total, 2)),
            landmark_pos=landmark_pos,
            target_index=target,
            t=0,
        )
        return state, self.observations(state)

    def step(self, state: WorldState, joint_action) -> tuple[WorldState, StepResult]:
        actions = np.asarray(joint_action, dtype=np.intp)
        if actions.shape != (self.n_total,):
            raise ValueError(
                f"expected {self.n_total} actions for scenario {self.scenario!r}, "
                f"got {actions.shape}"
            )
        if np.any(actions < 0) or np.any(actions >= N_ACTIONS):
            raise ValueError("action index out of range [0, 5)")
        accel = FORCE * ACTION_DIRECTIONS[actions]
        vel = (1.0 - DAMPING) * state.agent_vel + accel * DT
        pos = np.clip(state.agent_pos + vel * DT, -ARENA_HALF_WIDTH, ARENA_HALF_WIDTH)
        new_state = replace(state, agent_pos=pos, agent_vel=vel, t=state.t + 1)

        if self.scenario == "coop_nav":
            reward = reward_coop_nav(new_state)
            adv_reward = None
        else:
            reward, adv_reward = reward_deception(new_state)
        done = new_state.t >= self.episode_length
        return new_state, StepResult(self.observations(new_state), reward, done, adv_reward)

    # -- observations ------------------------------------------------------

    def observation_of(self, state: WorldState, agent_index: int) -> np.ndarray:
        """[own_vel, own_pos, landmark displacements, other-agent displacements]."""
        if not 0 <= agent_index < self.n_total:
            raise ValueError(f"agent index {agent_index} out of range [0, {self.n_total})")
        own_pos = state.agent_pos[agent_index]
        parts = [state.agent_vel[agent_index], own_pos]
        for li in self._landmark_order(state, agent_index):
            parts.append(state.landmark_pos[li] - own_pos)
        for j in range(self.n_total):
            if j != agent_index:
                parts.append(state.agent_pos[j] - own_pos)
        return np.concatenate(parts)

    def observations(self, state: WorldState) -> list[np.ndarray]:
        return [self.observation_of(state, i) for i in range(self.n_total)]

    def _landmark_order(self, state: WorldState, agent_index: int) -> list[int]:
        if self.scenario == "deception" and agent_index < self.n_agents:
            # good agents see the target landmark first; the adversary does not
            tgt = state.target_index
            return [tgt] + [i for i in range(self.n_landmarks) if i != tgt]
        return list(range(self.n_landmarks))


# -- rewards ---------------------------------------------------------------


def reward_coop_nav(state: WorldState) -> float:
    """-sum over landmarks of min-agent distance, -1 per colliding pair."""
    diffs = state.landmark_pos[:, None, :] - state.agent_pos[None, :, :]
    dists = np.sqrt((diffs**2).sum(axis=2))  # L x n
    coverage = -dists.min(axis=1).sum()
    return float(coverage - _collision_pairs(state.agent_pos))


def reward_deception(state: WorldState) -> tuple[float, float]:
    """(good team reward, adversary reward); adversary is the last agent."""
    target = state.landmark_pos[state.target_index]
    good_pos = state.agent_pos[:-1]
    adv_pos = state.agent_pos[-1]
    good_dist = np.sqrt(((good_pos - target) ** 2).sum(axis=1)).min()
    adv_dist = float(np.sqrt(((adv_pos - target) ** 2).sum()))
    return float(-good_dist + adv_dist), -adv_dist


def _collision_pairs(agent_pos: np.ndarray) -> int:
    n = agent_pos.shape[0]
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            if np.sqrt(((agent_pos[i] - agent_pos[j]) ** 2).sum()) < 2.0 * AGENT_RADIUS:
                count += 1
    return count


# -- trajectory export -----------------------------------------------------


def trajectory_record(state: WorldState, actions, result: StepResult) -> dict:
    """One JSONL record per step; field order is stable."""
    rec = {
        "t": state.t,
        "agent_pos": [[float(x) for x in row] for row in state.agent_pos],
        "agent_vel": [[float(x) for x in row] for row in state.agent_vel],
        "landmark_pos": [[float(x) for x in row] for row in state.landmark_pos],
        "actions": [int(a) for a in actions],
        "reward": result.reward,
    }
    if result.adversary_reward is not None:
        rec["adversary_reward"] = result.adversary_reward
    return rec
