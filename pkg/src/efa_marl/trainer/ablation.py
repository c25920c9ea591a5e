"""Variant comparison runs: efa-dqn versus the neutralized arms.

Each (variant, seed) run is fully independent; results merge in a fixed
order. The summary CSV reports per-run final-window mean reward and the best
greedy evaluation across saved checkpoints; the comparison table reports the
per-variant median (ties broken by mean).
"""

from __future__ import annotations

import time
from dataclasses import replace
from pathlib import Path

from .config import RunConfig, VARIANTS
from .metrics import final_window_mean, read_metrics
from .training import evaluate, run_training


def _median(values: list[float]) -> float:
    ordered = sorted(values)
    mid = len(ordered) // 2
    if len(ordered) % 2:
        return ordered[mid]
    return 0.5 * (ordered[mid - 1] + ordered[mid])


def run_ablation(
    base: RunConfig,
    variants: tuple[str, ...] = VARIANTS,
    seeds: list[int] | None = None,
    window: int = 100,
    quiet: bool = True,
) -> dict:
    """Train every (variant, seed) pair and summarize.

    Returns {"runs": [...], "table": [...]}; also writes ablation.csv and
    ablation_table.csv under base.out.
    """
    base.validate()
    for variant in variants:
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
    if seeds is None:
        seeds = [base.seed + i for i in range(base.ablation_seeds)]
    out_root = Path(base.out)
    out_root.mkdir(parents=True, exist_ok=True)

    runs = []
    for variant in variants:
        for seed in seeds:
            run_dir = out_root / f"{variant}_seed{seed}"
            config = replace(base, variant=variant, seed=seed, out=str(run_dir))
            started = time.perf_counter()
            run_training(config, quiet=quiet)
            records = read_metrics(run_dir / "metrics.jsonl")
            final_mean = final_window_mean(records, window)
            best_eval = max(
                evaluate(ckpt, base.eval_episodes, seed)[0]
                for ckpt in sorted(run_dir.glob("checkpoint_*.json"))
            )
            runs.append({
                "variant": variant,
                "seed": seed,
                "final_window_mean": final_mean,
                "best_eval": best_eval,
                "wall_seconds": time.perf_counter() - started,  # never serialized
            })

    table = []
    for variant in variants:
        finals = [r["final_window_mean"] for r in runs if r["variant"] == variant]
        table.append({
            "variant": variant,
            "median_final": _median(finals),
            "mean_final": sum(finals) / len(finals),
            "seeds": len(finals),
        })
    # totally ordered: median descending, ties broken by mean
    table.sort(key=lambda row: (-row["median_final"], -row["mean_final"]))

    csv_lines = ["variant,seed,final_window_mean,best_eval"]
    for r in runs:
        csv_lines.append(
            f"{r['variant']},{r['seed']},{r['final_window_mean']},{r['best_eval']}")
    (out_root / "ablation.csv").write_text("\n".join(csv_lines) + "\n")

    table_lines = ["variant,median_final,mean_final,seeds"]
    for row in table:
        table_lines.append(
            f"{row['variant']},{row['median_final']},{row['mean_final']},{row['seeds']}")
    (out_root / "ablation_table.csv").write_text("\n".join(table_lines) + "\n")

    return {"runs": runs, "table": table}
