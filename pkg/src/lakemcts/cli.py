"""Command-line entry point: ``run``, ``compare`` and ``oracle`` subcommands.

Exit codes: 0 success, 2 configuration error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from lakemcts.agents import PolicyMctsConfig, QLearnConfig
from lakemcts.bench import ALGORITHMS, RunConfig, compare, run_benchmark, summary_table, write_run
from lakemcts.env import Action, MalformedMap, load_map
from lakemcts.oracle import build_mdp, finite_horizon_success, value_iteration
from lakemcts.search import SearchConfig

log = logging.getLogger("lakemcts")

ARROWS = {Action.LEFT: "<", Action.DOWN: "v", Action.RIGHT: ">", Action.UP: "^"}


class ConfigError(Exception):
    pass


def _add_map_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--map", default="4x4", help="built-in map name (4x4, 8x8) or map file path")
    p.add_argument("--no-slippery", action="store_true", help="deterministic moves")
    p.add_argument("--step-cap", type=int, default=0, help="max steps per episode (0: map default)")


def _add_learning_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--episodes", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--c", type=float, default=1.4, help="UCT exploration weight")
    p.add_argument("--sims-per-move", type=int, default=100)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=0.99)
    p.add_argument("--epsilon-start", type=float, default=1.0)
    p.add_argument("--epsilon-end", type=float, default=0.01)
    p.add_argument("--epsilon-decay", type=int, default=50_000)
    p.add_argument("--window", type=int, default=1000, help="smoothing window (episodes)")
    p.add_argument("--out", type=Path, required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lakemcts", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train one algorithm and write metrics")
    run.add_argument("--algo", required=True, choices=[a.replace("_", "-") for a in ALGORITHMS])
    _add_map_args(run)
    _add_learning_args(run)

    cmp_ = sub.add_parser("compare", help="run all three algorithms on the same map and seed")
    _add_map_args(cmp_)
    _add_learning_args(cmp_)

    orc = sub.add_parser("oracle", help="exact optimal values, policy and success probability")
    _add_map_args(orc)
    orc.add_argument("--gamma", type=float, default=0.99)
    orc.add_argument("--horizon", type=int, default=100)
    orc.add_argument("--csv", type=Path, help="also write state,value,action rows here")
    return parser


def _run_config(args: argparse.Namespace, algorithm: str) -> RunConfig:
    try:
        cfg = RunConfig(
            algorithm=algorithm,
            episodes=args.episodes,
            map=args.map,
            slippery=not args.no_slippery,
            seed=args.seed,
            smoothing_window=args.window,
            step_cap=args.step_cap,
            search=SearchConfig(args.c),
            qlearn=QLearnConfig(
                args.alpha, args.gamma, args.epsilon_start, args.epsilon_end, args.epsilon_decay
            ),
            policy_mcts=PolicyMctsConfig(args.sims_per_move),
            out=args.out,
        )
        cfg.env_config()
        return cfg
    except (ValueError, MalformedMap) as exc:
        raise ConfigError(str(exc)) from exc


def cmd_run(args: argparse.Namespace) -> None:
    cfg = _run_config(args, args.algo.replace("-", "_"))
    log.info("running %s for %d episodes (seed %d)", cfg.algorithm, cfg.episodes, cfg.seed)
    result = run_benchmark(cfg)
    write_run(result, args.out)
    sys.stdout.write(summary_table([result.summary]))


def cmd_compare(args: argparse.Namespace) -> None:
    cfgs = [_run_config(args, algo) for algo in ALGORITHMS]
    report, _ = compare(cfgs, args.out)
    sys.stdout.write(report)


def cmd_oracle(args: argparse.Namespace) -> None:
    try:
        grid = load_map(args.map)
        if args.horizon < 1:
            raise ValueError("horizon must be positive")
        mdp = build_mdp(grid, not args.no_slippery)
        vf, policy = value_iteration(mdp, args.gamma)
    except (ValueError, MalformedMap) as exc:
        raise ConfigError(str(exc)) from exc
    p_star = finite_horizon_success(mdp, policy, args.horizon)

    print("optimal values:")
    for r in range(grid.rows):
        print(" ".join(f"{vf.values[r * grid.cols + c]:.4f}" for c in range(grid.cols)))
    print("optimal policy:")
    for r in range(grid.rows):
        line = []
        for c in range(grid.cols):
            s = r * grid.cols + c
            line.append(grid.cells[s].value if grid.is_terminal(s) else ARROWS[Action(policy[s])])
        print("".join(line))
    print(f"p* (success within {args.horizon} steps): {p_star:.6f}")

    if args.csv is not None:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["state", "value", "action"])
            for s in range(grid.n_states):
                w.writerow([s, f"{vf.values[s]:.6f}", policy.get(s, "")])


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "oracle": cmd_oracle}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
