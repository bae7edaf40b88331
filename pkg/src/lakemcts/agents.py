"""The three benchmarked learners, each exposed as a single-episode function.

Learning state (tables) lives outside the functions and persists across
episodes; the caller owns it along with the environment and random stream.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from lakemcts.env import N_ACTIONS, FrozenLake
from lakemcts.search import QNTables, SearchConfig, backpropagate, select_action


@dataclass(frozen=True)
class EpisodeRecord:
    episode_index: int
    episode_return: float
    steps: int
    success: bool
    wall_time: float = field(default=0.0, compare=False)
    path: tuple[tuple[int, int], ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class QLearnConfig:
    alpha: float = 0.1
    gamma: float = 0.99
    epsilon_start: float = 1.0
    epsilon_end: float = 0.01
    epsilon_decay_episodes: int = 50_000

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        for name in ("epsilon_start", "epsilon_end"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.epsilon_start < self.epsilon_end:
            raise ValueError("epsilon_start must be >= epsilon_end")
        if self.epsilon_decay_episodes < 1:
            raise ValueError("epsilon_decay_episodes must be positive")

    def epsilon(self, episode_index: int) -> float:
        """Linear anneal from start to end over the decay window, then held."""
        frac = min(1.0, episode_index / self.epsilon_decay_episodes)
        return self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac


@dataclass(frozen=True)
class PolicyMctsConfig:
    simulations_per_move: int = 100
    rollout_horizon: int | None = None  # None: the env's step cap

    def __post_init__(self) -> None:
        if self.simulations_per_move < 1 or self.simulations_per_move % N_ACTIONS:
            raise ValueError(
                f"simulations_per_move must be a positive multiple of {N_ACTIONS}, "
                f"got {self.simulations_per_move}"
            )
        if self.rollout_horizon is not None and self.rollout_horizon < 1:
            raise ValueError("rollout_horizon must be positive")


class RolloutTable:
    """Running mean of rollout returns per (state, action)."""

    def __init__(self, n_states: int) -> None:
        self.n_states = n_states
        self.values = [[0.0] * N_ACTIONS for _ in range(n_states)]
        self.counts = [[0] * N_ACTIONS for _ in range(n_states)]

    def add(self, s: int, a: int, ret: float) -> None:
        self.counts[s][a] += 1
        self.values[s][a] += (ret - self.values[s][a]) / self.counts[s][a]


def new_qtable(n_states: int) -> list[list[float]]:
    return [[0.0] * N_ACTIONS for _ in range(n_states)]


def _argmax(values: list[float], rng: random.Random) -> int:
    best = max(values)
    ties = [a for a in range(N_ACTIONS) if values[a] == best]
    return ties[0] if len(ties) == 1 else rng.choice(ties)


def run_episode_optimized_mcts(
    env: FrozenLake,
    tables: QNTables,
    cfg: SearchConfig,
    rng: random.Random,
    episode_index: int = 0,
) -> EpisodeRecord:
    """One episode: UCT-select and step to the end, then credit the whole path."""
    if tables.n_states != env.n_states:
        raise ValueError("tables do not match the environment's map")
    t0 = time.perf_counter()
    s = env.reset()
    path = []
    while True:
        a = select_action(tables, s, cfg, rng)
        path.append((s, a))
        out = env.step(a, rng)
        s = out.next_state
        if out.terminal or out.truncated:
            break
    # the reward observed on entering the terminal cell is the whole return
    ret = out.reward
    backpropagate(tables, path, ret)
    return EpisodeRecord(
        episode_index, ret, env.steps, ret == 1.0, time.perf_counter() - t0, tuple(path)
    )


def run_episode_qlearning(
    env: FrozenLake,
    qtable: list[list[float]],
    cfg: QLearnConfig,
    rng: random.Random,
    episode_index: int,
) -> EpisodeRecord:
    if len(qtable) != env.n_states:
        raise ValueError("qtable does not match the environment's map")
    t0 = time.perf_counter()
    eps = cfg.epsilon(episode_index)
    alpha, gamma = cfg.alpha, cfg.gamma
    s = env.reset()
    path = []
    while True:
        if rng.random() < eps:
            a = rng.randrange(N_ACTIONS)
        else:
            a = _argmax(qtable[s], rng)
        path.append((s, a))
        out = env.step(a, rng)
        s2 = out.next_state
        ended = out.terminal or out.truncated
        bootstrap = 0.0 if ended else max(qtable[s2])
        row = qtable[s]
        row[a] += alpha * (out.reward + gamma * bootstrap - row[a])
        s = s2
        if ended:
            break
    ret = out.reward
    return EpisodeRecord(
        episode_index, ret, env.steps, ret == 1.0, time.perf_counter() - t0, tuple(path)
    )


def run_episode_policy_mcts(
    env: FrozenLake,
    qtable: RolloutTable,
    cfg: PolicyMctsConfig,
    rng: random.Random,
    episode_index: int = 0,
) -> EpisodeRecord:
    """Per real step, roll out every action from a cloned env and act greedily on the means."""
    if qtable.n_states != env.n_states:
        raise ValueError("qtable does not match the environment's map")
    t0 = time.perf_counter()
    per_action = cfg.simulations_per_move // N_ACTIONS
    horizon = cfg.rollout_horizon or env.step_cap
    s = env.reset()
    path = []
    while True:
        for a in range(N_ACTIONS):
            for _ in range(per_action):
                qtable.add(s, a, env.clone().rollout(a, rng, horizon))
        a = _argmax(qtable.values[s], rng)
        path.append((s, a))
        out = env.step(a, rng)
        s = out.next_state
        if out.terminal or out.truncated:
            break
    ret = out.reward
    return EpisodeRecord(
        episode_index, ret, env.steps, ret == 1.0, time.perf_counter() - t0, tuple(path)
    )


def greedy_policy(table: QNTables | RolloutTable | list[list[float]], grid) -> dict[int, int]:
    """Greedy action per non-terminal state; ties go to the lowest action index.

    For :class:`QNTables` only visited actions are ranked by mean return, and a
    state with no visited action maps to ``Action.LEFT`` (0).
    """
    policy = {}
    for s in range(grid.n_states):
        if grid.is_terminal(s):
            continue
        if isinstance(table, QNTables):
            means = [table.mean(s, a) for a in range(N_ACTIONS)]
            scored = [(m, -a) for a, m in enumerate(means) if m is not None]
            policy[s] = -max(scored)[1] if scored else 0
        else:
            values = table.values[s] if isinstance(table, RolloutTable) else table[s]
            policy[s] = max(range(N_ACTIONS), key=lambda a: (values[a], -a))
    return policy
