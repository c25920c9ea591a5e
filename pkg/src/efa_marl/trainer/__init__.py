"""Training orchestration, greedy evaluation, ablations, metrics plumbing,
and the leader-follower enumeration oracle."""

from .ablation import run_ablation
from .config import VARIANTS, RunConfig
from .metrics import (
    MetricsRecord,
    export_plot_data,
    final_window_mean,
    read_metrics,
    rolling_mean_rows,
    write_metrics,
)
from .stackelberg import stackelberg_enumerate
from .training import build_learners, evaluate, random_baseline, run_training, write_config_snapshot

__all__ = [
    "MetricsRecord",
    "RunConfig",
    "VARIANTS",
    "build_learners",
    "evaluate",
    "export_plot_data",
    "final_window_mean",
    "random_baseline",
    "read_metrics",
    "rolling_mean_rows",
    "run_ablation",
    "run_training",
    "stackelberg_enumerate",
    "write_config_snapshot",
    "write_metrics",
]
