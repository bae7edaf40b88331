"""Flat Q/N tables and UCT action selection.

The search "tree" over a small discrete state space is just two tables
indexed by (state, action): the summed episode return and the visit count.
The state visit count is derived as the row sum of the visit counts.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from lakemcts.env import N_ACTIONS

#: UCT priority of an action that has never been tried.
UNVISITED = math.inf


class InvalidCounts(ValueError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    c: float = 1.4

    def __post_init__(self) -> None:
        if not (math.isfinite(self.c) and self.c > 0):
            raise ValueError(f"exploration weight must be finite and > 0, got {self.c}")


def uct_value(q_sum: float, n_sa: int, n_s: int, c: float) -> float:
    """Mean return plus ``c * sqrt(ln(n_s) / n_sa)``; :data:`UNVISITED` when ``n_sa == 0``."""
    if n_sa < 0 or n_sa > n_s:
        raise InvalidCounts(f"need 0 <= n_sa <= n_s, got n_sa={n_sa}, n_s={n_s}")
    if n_sa == 0:
        return UNVISITED
    return q_sum / n_sa + c * math.sqrt(math.log(n_s) / n_sa)


class QNTables:
    def __init__(self, n_states: int) -> None:
        if n_states < 1:
            raise ValueError("n_states must be positive")
        self.n_states = n_states
        self.q_sum = [[0.0] * N_ACTIONS for _ in range(n_states)]
        self.n_sa = [[0] * N_ACTIONS for _ in range(n_states)]

    def n_state(self, s: int) -> int:
        return sum(self.n_sa[s])

    def mean(self, s: int, a: int) -> float | None:
        n = self.n_sa[s][a]
        return self.q_sum[s][a] / n if n else None

    def copy(self) -> QNTables:
        other = QNTables(self.n_states)
        other.q_sum = [row[:] for row in self.q_sum]
        other.n_sa = [row[:] for row in self.n_sa]
        return other

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QNTables):
            return NotImplemented
        return self.q_sum == other.q_sum and self.n_sa == other.n_sa

    def dump_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["state", "action", "q_sum", "n_sa"])
            for s in range(self.n_states):
                for a in range(N_ACTIONS):
                    w.writerow([s, a, repr(self.q_sum[s][a]), self.n_sa[s][a]])

    @classmethod
    def load_csv(cls, path: str | Path) -> QNTables:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        tables = cls(max(int(r["state"]) for r in rows) + 1)
        for r in rows:
            s, a = int(r["state"]), int(r["action"])
            tables.q_sum[s][a] = float(r["q_sum"])
            tables.n_sa[s][a] = int(r["n_sa"])
        return tables


def select_action(tables: QNTables, s: int, cfg: SearchConfig, rng: random.Random) -> int:
    """UCT choice at ``s``; untried actions first, all ties broken uniformly via ``rng``."""
    n = tables.n_sa[s]
    unvisited = [a for a in range(N_ACTIONS) if n[a] == 0]
    if unvisited:
        return unvisited[0] if len(unvisited) == 1 else rng.choice(unvisited)
    q = tables.q_sum[s]
    log_ns = math.log(n[0] + n[1] + n[2] + n[3])
    c = cfg.c
    best = -math.inf
    best_actions: list[int] = []
    for a in range(N_ACTIONS):
        v = q[a] / n[a] + c * math.sqrt(log_ns / n[a])
        if v > best:
            best = v
            best_actions = [a]
        elif v == best:
            best_actions.append(a)
    return best_actions[0] if len(best_actions) == 1 else rng.choice(best_actions)


def backpropagate(
    tables: QNTables, path: Iterable[tuple[int, int]], episode_return: float
) -> QNTables:
    """Every-visit credit: each ``(s, a)`` occurrence adds the return and one visit."""
    if episode_return not in (0.0, 1.0):
        raise ValueError(f"episode return must be 0 or 1, got {episode_return}")
    q_sum, n_sa = tables.q_sum, tables.n_sa
    for s, a in path:
        q_sum[s][a] += episode_return
        n_sa[s][a] += 1
    return tables
