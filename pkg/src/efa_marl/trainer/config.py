"""Run configuration: scenario, variant, schedule, and hyperparameters."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

from ..envs import SCENARIOS
from ..qlearn.learner import Hyperparams

VARIANTS = ("efa-dqn", "efa-naive", "vdn")


@dataclass
class RunConfig:
    scenario: str = "coop_nav"
    n_agents: int = 2
    variant: str = "efa-dqn"
    total_episodes: int = 3000
    seed: int = 0
    out: str = "runs/latest"
    episode_length: int = 25
    eval_episodes: int = 20
    checkpoint_period: int = 500
    ablation_seeds: int = 5
    dump_trajectories: bool = False
    pin_first_mover: int = -1  # >= 0 fixes the election to that agent
    hp: Hyperparams = field(default_factory=Hyperparams)

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.n_agents < 1:
            raise ValueError(f"n_agents must be >= 1, got {self.n_agents}")
        if self.total_episodes < 1:
            raise ValueError(f"total_episodes must be >= 1, got {self.total_episodes}")
        for name in ("episode_length", "eval_episodes", "checkpoint_period", "ablation_seeds"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.pin_first_mover >= self.n_agents:
            raise ValueError(
                f"pin_first_mover {self.pin_first_mover} out of range for "
                f"{self.n_agents} agents")
        self.hp.validate()

    def effective_hyperparams(self) -> Hyperparams:
        """Variant-resolved hyperparameters. The ablation arms neutralize the
        two tricks: efa-naive pins alpha at 1 and drops the regularizer;
        vdn additionally fixes agent 0 as the formal first-mover."""
        hp = Hyperparams(**asdict(self.hp))
        if self.variant in ("efa-naive", "vdn"):
            hp.alpha0 = 1.0
            hp.lambda_cf = 0.0
        return hp

    def fixed_first_mover(self) -> int | None:
        if self.variant == "vdn":
            return 0
        return self.pin_first_mover if self.pin_first_mover >= 0 else None

    def to_flat_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "hp"}
        out.update(self.hp.to_dict())
        return out

    @classmethod
    def from_flat_dict(cls, values: dict) -> "RunConfig":
        hp_names = {f.name for f in fields(Hyperparams)}
        own_names = {f.name for f in fields(cls)} - {"hp"}
        hp_kwargs, own_kwargs = {}, {}
        for key, value in values.items():
            if key in hp_names:
                hp_kwargs[key] = value
            elif key in own_names:
                own_kwargs[key] = value
            else:
                raise ValueError(f"unknown config field {key!r}")
        config = cls(hp=Hyperparams(**hp_kwargs), **own_kwargs)
        config.validate()
        return config
