"""Per-episode metrics records and their JSONL / CSV serializations.

The JSONL field order is stable and documented in the README. Wall-clock
timing is tracked in memory only: serialized metrics must be byte-identical
across re-runs with the same seed, so nondeterministic fields stay out of
the files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass
class MetricsRecord:
    episode: int
    reward: float
    td_loss: float | None
    critic_loss: float | None
    alpha: float
    epsilon: float
    elected_counts: list[int]
    adversary_reward: float | None = None
    wall_ms: float = 0.0  # in-memory only, never serialized

    def to_json_line(self) -> str:
        doc = {"episode": self.episode, "reward": self.reward}
        if self.adversary_reward is not None:
            doc["adversary_reward"] = self.adversary_reward
        doc["td_loss"] = self.td_loss
        doc["critic_loss"] = self.critic_loss
        doc["alpha"] = self.alpha
        doc["epsilon"] = self.epsilon
        doc["elected_counts"] = self.elected_counts
        return json.dumps(doc)


def write_metrics(path, records: list[MetricsRecord]) -> None:
    Path(path).write_text("".join(r.to_json_line() + "\n" for r in records))


def read_metrics(path) -> list[dict]:
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: malformed metrics line {lineno}: {exc}") from exc
    return out


def rolling_mean_rows(rewards: list[float], window: int) -> list[tuple[int, float]]:
    """(episode, trailing mean over `window` episodes) rows, 1-indexed episodes."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    rows = []
    acc = 0.0
    for i, r in enumerate(rewards):
        acc += r
        if i >= window:
            acc -= rewards[i - window]
        count = min(i + 1, window)
        rows.append((i + 1, acc / count))
    return rows


def export_plot_data(metrics_path, out_path, window: int = 100) -> None:
    """CSV of (episode, rolling-mean reward) from a metrics JSONL file."""
    records = read_metrics(metrics_path)
    rewards = [float(r["reward"]) for r in records]
    lines = ["episode,reward_rolling_mean"]
    for episode, mean in rolling_mean_rows(rewards, window):
        lines.append(f"{episode},{mean}")
    Path(out_path).write_text("\n".join(lines) + "\n")


def final_window_mean(records: list[dict], window: int = 100) -> float:
    rewards = [float(r["reward"]) for r in records]
    tail = rewards[-window:] if len(rewards) >= window else rewards
    return sum(tail) / len(tail)
