"""Versioned JSON checkpoints that round-trip bit-exactly.

Float64 values survive the trip because JSON serialization uses shortest
round-trip repr. The file stores every parameter tensor (online and target,
including optimizer accumulators), the hyperparameters, and the counters.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..numerics.rng import SeededRng
from .adversary import AdversaryLearner
from .learner import Hyperparams, Learner

FORMAT = "efa-marl-checkpoint"
VERSION = 1


def _dump_params(params) -> list[dict]:
    return [
        {
            "shape": list(p.shape),
            "data": p.data.reshape(-1).tolist(),
            "step_state": getattr(p, "step_state", np.zeros_like(p.data)).reshape(-1).tolist(),
        }
        for p in params
    ]


def _load_params(params, blobs) -> None:
    if len(params) != len(blobs):
        raise ValueError(
            f"checkpoint parameter count mismatch: file has {len(blobs)}, "
            f"model expects {len(params)}"
        )
    for p, blob in zip(params, blobs):
        shape = tuple(blob["shape"])
        if shape != p.shape:
            raise ValueError(f"checkpoint shape {shape} does not match model {p.shape}")
        p.data[...] = np.asarray(blob["data"]).reshape(shape)
        if hasattr(p, "step_state"):
            p.step_state[...] = np.asarray(blob["step_state"]).reshape(shape)


def _components(learner: Learner, adversary: AdversaryLearner | None) -> dict:
    comps = {}
    for i, (net, tgt) in enumerate(zip(learner.qnets, learner.qnets_target)):
        comps[f"agent_{i}"] = net.parameters()
        comps[f"agent_{i}_target"] = tgt.parameters()
    comps["critic"] = learner.critic.parameters()
    comps["critic_target"] = learner.critic_target.parameters()
    comps["election"] = learner.election.parameters()
    if adversary is not None:
        comps["adversary"] = adversary.net.parameters()
        comps["adversary_target"] = adversary.net_target.parameters()
    return comps


def save_checkpoint(
    path,
    learner: Learner,
    scenario: str,
    n_agents: int,
    variant: str,
    adversary: AdversaryLearner | None = None,
    episode_length: int = 25,
) -> None:
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "scenario": scenario,
        "n_agents": n_agents,
        "variant": variant,
        "episode_length": episode_length,
        "obs_dim": learner.obs_dim,
        "n_actions": learner.n_actions,
        "fixed_first_mover": learner.fixed_first_mover,
        "hyperparams": learner.hp.to_dict(),
        "counters": {
            "env_steps": learner.env_steps,
            "optimizer_steps": learner.optimizer_steps,
            "episodes": learner.episodes,
            "alpha": learner.alpha,
        },
        "components": {name: _dump_params(ps) for name, ps in _components(learner, adversary).items()},
    }
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path) -> tuple[Learner, AdversaryLearner | None, dict]:
    """Rebuild the learner(s) from a checkpoint; returns (learner, adversary, doc)."""
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != FORMAT:
        raise ValueError(f"not a checkpoint file: {path}")
    if doc.get("version") != VERSION:
        raise ValueError(
            f"checkpoint version {doc.get('version')} unsupported (expected {VERSION})")
    hp = Hyperparams(**doc["hyperparams"])
    # initializer values are irrelevant: every parameter is overwritten below
    scratch = SeededRng(0, "init")
    learner = Learner(
        n_agents=doc["n_agents"],
        obs_dim=doc["obs_dim"],
        n_actions=doc["n_actions"],
        hp=hp,
        rng_init=scratch,
        fixed_first_mover=doc["fixed_first_mover"],
    )
    adversary = None
    if "adversary" in doc["components"]:
        adversary = AdversaryLearner(doc["obs_dim"], doc["n_actions"], hp, scratch)
    for name, params in _components(learner, adversary).items():
        _load_params(params, doc["components"][name])
    counters = doc["counters"]
    learner.env_steps = counters["env_steps"]
    learner.optimizer_steps = counters["optimizer_steps"]
    learner.episodes = counters["episodes"]
    learner.alpha = counters["alpha"]
    return learner, adversary, doc
