"""Per-agent recurrent Q-networks, additive mixing, the weighted TD operator
with a dynamic penalty factor, the counterfactual first-mover constraint,
episode replay, target networks, and exploration."""

from .adversary import AdversaryLearner
from .checkpoint import load_checkpoint, save_checkpoint
from .learner import (
    Hyperparams,
    Learner,
    RolloutState,
    counterfactual_advantage,
    epsilon_at,
    mix,
    select_action,
    td_target,
    update_alpha,
    weighting,
)
from .nets import AgentQNet, CentralCritic, make_target, sync_target
from .replay import EpisodeBuffer, Transition

__all__ = [
    "AdversaryLearner",
    "AgentQNet",
    "CentralCritic",
    "EpisodeBuffer",
    "Hyperparams",
    "Learner",
    "RolloutState",
    "Transition",
    "counterfactual_advantage",
    "epsilon_at",
    "load_checkpoint",
    "make_target",
    "mix",
    "save_checkpoint",
    "select_action",
    "sync_target",
    "td_target",
    "update_alpha",
    "weighting",
]
