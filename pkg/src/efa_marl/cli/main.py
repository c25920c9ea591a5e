"""Command-line front end.

Subcommands: train, evaluate, ablate, selftest, stackelberg, export-plot.
Exit codes: 0 success, 1 runtime failure, 2 usage error. The default output
directory comes from --out, then the EFA_MARL_OUT environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from ..trainer.ablation import run_ablation
from ..trainer.metrics import export_plot_data, final_window_mean, read_metrics
from ..trainer.stackelberg import stackelberg_enumerate
from ..trainer.training import evaluate, run_training
from .config import ConfigError, parse_config
from .selftest import run_selftest

USAGE_ERROR = 2
RUNTIME_ERROR = 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="efa-marl",
        description="Multi-agent RL workbench: first-mover election + value-decomposition Q-learning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override one config field (repeatable)")
        p.add_argument("--seed", type=int, help="root random seed")
        p.add_argument("--out", help="output directory (default: $EFA_MARL_OUT or config)")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    p_train = sub.add_parser("train", help="run one training configuration")
    add_common(p_train)

    p_eval = sub.add_parser("evaluate", help="greedy rollouts from a checkpoint")
    p_eval.add_argument("checkpoint", help="checkpoint file")
    p_eval.add_argument("--episodes", type=int, default=100)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--quiet", action="store_true")

    p_ablate = sub.add_parser("ablate", help="compare efa-dqn / efa-naive / vdn arms")
    add_common(p_ablate)

    p_self = sub.add_parser("selftest", help="run the hermetic invariant suite")
    p_self.add_argument("--quiet", action="store_true")

    p_stack = sub.add_parser("stackelberg", help="solve a small leader/follower matrix game")
    p_stack.add_argument("game", help="game matrix file (leader:/follower: sections)")

    p_plot = sub.add_parser("export-plot", help="rolling-mean reward CSV from metrics")
    p_plot.add_argument("metrics", help="metrics.jsonl file")
    p_plot.add_argument("--window", type=int, default=100)
    p_plot.add_argument("--out", default="plot_data.csv")
    return parser


def _collect_overrides(args) -> dict:
    overrides: dict = {}
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = value.strip()
    if args.seed is not None:
        overrides["seed"] = args.seed
    out = args.out or os.environ.get("EFA_MARL_OUT")
    if out:
        overrides["out"] = str(out)
    return overrides


def read_game_file(path) -> tuple[np.ndarray, np.ndarray]:
    """Two payoff matrices introduced by 'leader:' and 'follower:' lines."""
    sections: dict[str, list[list[float]]] = {}
    current = None
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.endswith(":"):
            current = stripped[:-1].lower()
            sections[current] = []
            continue
        if current is None:
            raise ConfigError(f"{path}:{lineno}: payoff row before a section header")
        try:
            sections[current].append([float(v) for v in stripped.split()])
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    if set(sections) != {"leader", "follower"}:
        raise ConfigError(f"{path}: expected 'leader:' and 'follower:' sections")
    return np.array(sections["leader"]), np.array(sections["follower"])


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


def _dispatch(args) -> int:
    if args.command == "train":
        config = parse_config(args.config, _collect_overrides(args))
        records = run_training(config, quiet=args.quiet)
        mean = final_window_mean([{"reward": r.reward} for r in records])
        if not args.quiet:
            print(f"trained {len(records)} episodes; final-window mean reward {mean:.3f}")
            print(f"outputs in {config.out}")
        return 0

    if args.command == "evaluate":
        mean, rewards = evaluate(args.checkpoint, args.episodes, args.seed)
        print(f"mean reward over {len(rewards)} episodes: {mean}")
        if not args.quiet:
            for i, r in enumerate(rewards, start=1):
                print(f"episode {i}: {r}")
        return 0

    if args.command == "ablate":
        config = parse_config(args.config, _collect_overrides(args))
        result = run_ablation(config, quiet=args.quiet)
        print("variant,median_final,mean_final,seeds")
        for row in result["table"]:
            print(f"{row['variant']},{row['median_final']},{row['mean_final']},{row['seeds']}")
        return 0

    if args.command == "selftest":
        return run_selftest(quiet=args.quiet)

    if args.command == "stackelberg":
        leader, follower = read_game_file(args.game)
        action, response, value = stackelberg_enumerate(leader, follower)
        print(f"leader action {action}, follower response {response}, leader value {value}")
        return 0

    if args.command == "export-plot":
        read_metrics(args.metrics)  # surfaces malformed lines with line numbers
        export_plot_data(args.metrics, args.out, args.window)
        print(f"wrote {args.out}")
        return 0

    raise ConfigError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
