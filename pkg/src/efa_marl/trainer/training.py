"""End-to-end training, greedy evaluation, and the random-policy baseline.

One optimizer step per environment episode once the replay buffer holds more
than one batch of episodes. Everything is driven by named random streams
derived from the run seed, so repeated runs produce byte-identical metrics.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from ..envs import N_ACTIONS, ParticleEnv, trajectory_record
from ..numerics.rng import SeededRng, named_streams
from ..qlearn.adversary import AdversaryLearner
from ..qlearn.checkpoint import load_checkpoint, save_checkpoint
from ..qlearn.learner import Learner, epsilon_at
from .config import RunConfig
from .metrics import MetricsRecord, write_metrics


def build_learners(config: RunConfig) -> tuple[ParticleEnv, Learner, AdversaryLearner | None]:
    env = ParticleEnv(config.scenario, config.n_agents, config.episode_length)
    hp = config.effective_hyperparams()
    rng_init = SeededRng(config.seed, "init")
    learner = Learner(
        n_agents=config.n_agents,
        obs_dim=env.obs_dim,
        n_actions=N_ACTIONS,
        hp=hp,
        rng_init=rng_init,
        fixed_first_mover=config.fixed_first_mover(),
    )
    adversary = None
    if config.scenario == "deception":
        adversary = AdversaryLearner(env.obs_dim, N_ACTIONS, hp, rng_init)
    return env, learner, adversary


def write_config_snapshot(config: RunConfig, path) -> None:
    lines = [f"{key} = {value}" for key, value in sorted(config.to_flat_dict().items())]
    Path(path).write_text("\n".join(lines) + "\n")


def run_training(config: RunConfig, quiet: bool = True) -> list[MetricsRecord]:
    config.validate()
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_config_snapshot(config, out_dir / "config.snapshot")

    env, learner, adversary = build_learners(config)
    streams = named_streams(config.seed)
    hp = learner.hp
    n_good = config.n_agents

    records: list[MetricsRecord] = []
    traj_lines: list[str] = []

    for episode in range(1, config.total_episodes + 1):
        t_start = time.perf_counter()
        state, obs = env.reset(streams["env"])
        rollout = learner.begin_episode()
        adv_rollout = adversary.begin_episode() if adversary else None
        ep_reward = 0.0
        ep_adv_reward = 0.0
        elected_counts = [0] * n_good

        for t in range(config.episode_length):
            eps = epsilon_at(learner.env_steps, hp)
            good_obs = np.stack(obs[:n_good])
            actions, election, _ = learner.act(
                good_obs, t, rollout, eps, streams["exploration"], streams["election-noise"])
            joint = list(actions)
            if adversary:
                joint.append(adversary.act(obs[-1], adv_rollout, eps, streams["exploration"]))
            state, result = env.step(state, joint)
            next_good_obs = np.stack(result.observations[:n_good])
            learner.store_step(
                rollout, good_obs, actions, result.reward, next_good_obs,
                result.done, election)
            if adversary:
                adversary.store_step(
                    adv_rollout, obs[-1], joint[-1], result.adversary_reward,
                    result.observations[-1], result.done)
            elected_counts[election.elected] += 1
            ep_reward += result.reward
            if adversary:
                ep_adv_reward += result.adversary_reward
            if config.dump_trajectories:
                traj_lines.append(json.dumps(trajectory_record(state, joint, result)))
            obs = result.observations

        learner.end_episode(rollout)
        if adversary:
            adversary.end_episode(adv_rollout)

        td_loss = critic_loss = None
        if learner.ready_to_train():
            td_loss, critic_loss = learner.train_step(streams["replay"])
            if adversary and adversary.ready_to_train():
                adversary.train_step(streams["replay"])

        records.append(MetricsRecord(
            episode=episode,
            reward=ep_reward,
            td_loss=td_loss,
            critic_loss=critic_loss,
            alpha=learner.alpha,
            epsilon=epsilon_at(learner.env_steps, hp),
            elected_counts=elected_counts,
            adversary_reward=ep_adv_reward if adversary else None,
            wall_ms=(time.perf_counter() - t_start) * 1e3,
        ))
        if not quiet and episode % 100 == 0:
            tail = records[-100:]
            mean_r = sum(r.reward for r in tail) / len(tail)
            print(f"episode {episode}: mean reward (last 100) = {mean_r:.3f}")

        if episode % config.checkpoint_period == 0:
            save_checkpoint(
                out_dir / f"checkpoint_{episode:06d}.json", learner,
                config.scenario, config.n_agents, config.variant,
                adversary=adversary, episode_length=config.episode_length)

    save_checkpoint(
        out_dir / "checkpoint_final.json", learner, config.scenario,
        config.n_agents, config.variant, adversary=adversary,
        episode_length=config.episode_length)
    write_metrics(out_dir / "metrics.jsonl", records)
    if config.dump_trajectories:
        (out_dir / "trajectory.jsonl").write_text("".join(l + "\n" for l in traj_lines))
    return records


def evaluate(checkpoint_path, episodes: int, seed: int) -> tuple[float, list[float]]:
    """Greedy rollouts (epsilon = 0), elections active, no learning."""
    learner, adversary, doc = load_checkpoint(checkpoint_path)
    env = ParticleEnv(doc["scenario"], doc["n_agents"], doc["episode_length"])
    streams = named_streams(seed)
    rewards = []
    for _ in range(episodes):
        state, obs = env.reset(streams["env"])
        rollout = learner.begin_episode()
        adv_rollout = adversary.begin_episode() if adversary else None
        total = 0.0
        for t in range(env.episode_length):
            good_obs = np.stack(obs[: learner.n_agents])
            actions, _, _ = learner.act(
                good_obs, t, rollout, 0.0, streams["exploration"], streams["election-noise"])
            joint = list(actions)
            if adversary:
                joint.append(adversary.act(obs[-1], adv_rollout, 0.0, streams["exploration"]))
            state, result = env.step(state, joint)
            total += result.reward
            obs = result.observations
        rewards.append(total)
    return sum(rewards) / len(rewards), rewards


def random_baseline(
    scenario: str, n_agents: int, episodes: int, seed: int,
    episode_length: int = 25,
) -> tuple[float, list[float]]:
    """Mean episode reward of the uniform-random policy, measured by the same
    harness dynamics and reward code as training."""
    env = ParticleEnv(scenario, n_agents, episode_length)
    streams = named_streams(seed)
    rewards = []
    for _ in range(episodes):
        state, _ = env.reset(streams["env"])
        total = 0.0
        for _ in range(episode_length):
            joint = streams["exploration"].integers(N_ACTIONS, size=env.n_total)
            state, result = env.step(state, joint)
            total += result.reward
        rewards.append(total)
    return sum(rewards) / len(rewards), rewards
