"""FrozenLake gridworld with optional slippery dynamics.

States are row-major cell indices. Under slippery dynamics the chosen move
fires with probability 1/3 and each perpendicular move with probability 1/3;
moves that would leave the grid keep the agent in place.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np


class MalformedMap(ValueError):
    pass


class TerminalStateQuery(ValueError):
    pass


class SteppedAfterEpisodeEnd(RuntimeError):
    pass


class Cell(enum.Enum):
    START = "S"
    FROZEN = "F"
    HOLE = "H"
    GOAL = "G"

    @property
    def terminal(self) -> bool:
        return self is Cell.HOLE or self is Cell.GOAL


class Action(enum.IntEnum):
    LEFT = 0
    DOWN = 1
    RIGHT = 2
    UP = 3


N_ACTIONS = len(Action)

# (row delta, col delta) per action
_MOVES = ((0, -1), (1, 0), (0, 1), (-1, 0))

BUILTIN_MAPS = {
    "4x4": "SFFF\nFHFH\nFFFH\nHFFG",
    "8x8": "\n".join(
        [
            "SFFFFFFF",
            "FFFFFFFF",
            "FFFHFFFF",
            "FFFFFHFF",
            "FFFHFFFF",
            "FHHFFFHF",
            "FHFFHFHF",
            "FFFHFFFG",
        ]
    ),
}


@dataclass(frozen=True)
class GridMap:
    rows: int
    cols: int
    cells: tuple[Cell, ...]

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise MalformedMap(f"grid must be at least 1x1, got {self.rows}x{self.cols}")
        if len(self.cells) != self.rows * self.cols:
            raise MalformedMap(f"expected {self.rows * self.cols} cells, got {len(self.cells)}")
        n_start = sum(c is Cell.START for c in self.cells)
        if n_start != 1:
            raise MalformedMap(f"map needs exactly one start cell, found {n_start}")
        if not any(c is Cell.GOAL for c in self.cells):
            raise MalformedMap("map has no goal cell")

    @property
    def n_states(self) -> int:
        return self.rows * self.cols

    @property
    def start(self) -> int:
        return self.cells.index(Cell.START)

    def is_terminal(self, s: int) -> bool:
        return self.cells[s].terminal

    def is_goal(self, s: int) -> bool:
        return self.cells[s] is Cell.GOAL

    def terminal_states(self) -> list[int]:
        return [s for s, c in enumerate(self.cells) if c.terminal]

    def to_text(self) -> str:
        chars = "".join(c.value for c in self.cells)
        return "\n".join(chars[r * self.cols : (r + 1) * self.cols] for r in range(self.rows))


def parse_map(text: str) -> GridMap:
    """Parse rows of ``S``/``F``/``H``/``G`` characters (LF or CRLF separated)."""
    lines = text.replace("\r\n", "\n").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MalformedMap("empty map")
    if any(not line for line in lines):
        raise MalformedMap("map contains an empty row")
    width = len(lines[0])
    if any(len(line) != width for line in lines):
        raise MalformedMap("map rows have unequal lengths")
    cells = []
    for r, line in enumerate(lines):
        for c, ch in enumerate(line):
            try:
                cells.append(Cell(ch))
            except ValueError:
                raise MalformedMap(f"bad character {ch!r} at row {r}, col {c}") from None
    return GridMap(len(lines), width, tuple(cells))


def load_map(source: str) -> GridMap:
    """Return a built-in map by name (``4x4``, ``8x8``) or parse a map file."""
    if source in BUILTIN_MAPS:
        return parse_map(BUILTIN_MAPS[source])
    path = Path(source)
    if not path.is_file():
        raise MalformedMap(f"unknown map {source!r}: not a built-in name or readable file")
    return parse_map(path.read_text())


def _move(grid: GridMap, s: int, a: int) -> int:
    r, c = divmod(s, grid.cols)
    dr, dc = _MOVES[a]
    r2, c2 = r + dr, c + dc
    if 0 <= r2 < grid.rows and 0 <= c2 < grid.cols:
        return r2 * grid.cols + c2
    return s


def _raw_outcomes(grid: GridMap, slippery: bool, s: int, a: int) -> tuple[int, ...]:
    # equiprobable resolved moves, before merging duplicates
    if not slippery:
        return (_move(grid, s, a),)
    return tuple(_move(grid, s, b % N_ACTIONS) for b in (a - 1, a, a + 1))


def transition_distribution(
    grid: GridMap, slippery: bool, s: int, a: int
) -> list[tuple[int, float]]:
    """Next-state distribution for a non-terminal state, duplicates merged.

    Entries are ordered by first appearance among (counter-clockwise
    neighbour, intended, clockwise neighbour).
    """
    if not 0 <= s < grid.n_states:
        raise ValueError(f"state {s} outside grid of {grid.n_states} cells")
    if grid.is_terminal(s):
        raise TerminalStateQuery(f"state {s} is terminal ({grid.cells[s].name})")
    outcomes = _raw_outcomes(grid, slippery, s, int(Action(a)))
    counts: dict[int, int] = {}
    for nxt in outcomes:
        counts[nxt] = counts.get(nxt, 0) + 1
    total = len(outcomes)
    return [(nxt, k / total) for nxt, k in counts.items()]


def default_step_cap(grid: GridMap) -> int:
    return max(100, 25 * grid.rows)


@dataclass(frozen=True)
class EnvConfig:
    map: GridMap
    slippery: bool = True
    step_cap: int = 0  # 0 selects default_step_cap(map)

    def __post_init__(self) -> None:
        if self.step_cap == 0:
            object.__setattr__(self, "step_cap", default_step_cap(self.map))
        if self.step_cap < 1:
            raise ValueError(f"step_cap must be >= 1, got {self.step_cap}")


class StepOutcome(NamedTuple):
    next_state: int
    reward: float
    terminal: bool
    truncated: bool


def episode_rng(root_seed: int, episode: int) -> random.Random:
    """Random stream for one episode, derived only from ``(root_seed, episode)``."""
    seq = np.random.SeedSequence(root_seed & 0xFFFF_FFFF_FFFF_FFFF, spawn_key=(episode,))
    words = seq.generate_state(4, np.uint64)
    return random.Random(int.from_bytes(words.tobytes(), "little"))


@dataclass
class FrozenLake:
    """Mutable episode state over an immutable :class:`EnvConfig`."""

    config: EnvConfig
    state: int = field(init=False)
    steps: int = field(init=False, default=0)
    done: bool = field(init=False, default=False)

    def __post_init__(self) -> None:
        grid = self.config.map
        self._outcomes = [
            [_raw_outcomes(grid, self.config.slippery, s, a) for a in range(N_ACTIONS)]
            for s in range(grid.n_states)
        ]
        self._terminal = [c.terminal for c in grid.cells]
        self._goal = [c is Cell.GOAL for c in grid.cells]
        self.state = grid.start

    @property
    def grid(self) -> GridMap:
        return self.config.map

    @property
    def step_cap(self) -> int:
        return self.config.step_cap

    @property
    def n_states(self) -> int:
        return self.config.map.n_states

    def outcomes(self, s: int, a: int) -> tuple[int, ...]:
        """Equiprobable resolved next states for ``(s, a)``, duplicates kept."""
        return self._outcomes[s][a]

    def reset(self) -> int:
        self.state = self.config.map.start
        self.steps = 0
        self.done = False
        return self.state

    def step(self, a: int, rng: random.Random) -> StepOutcome:
        if self.done:
            raise SteppedAfterEpisodeEnd("episode already ended; call reset()")
        outs = self._outcomes[self.state][a]
        nxt = outs[int(rng.random() * len(outs))] if len(outs) > 1 else outs[0]
        self.state = nxt
        self.steps += 1
        terminal = self._terminal[nxt]
        truncated = not terminal and self.steps >= self.config.step_cap
        self.done = terminal or truncated
        return StepOutcome(nxt, 1.0 if self._goal[nxt] else 0.0, terminal, truncated)

    def clone(self) -> FrozenLake:
        """Independent copy sharing the immutable config and lookup tables."""
        other = object.__new__(FrozenLake)
        other.__dict__.update(self.__dict__)
        return other

    def rollout(self, first_action: int, rng: random.Random, horizon: int) -> float:
        """Take ``first_action`` then uniform-random actions for up to ``horizon`` steps.

        Mutates this instance, so call it on a :meth:`clone`. The step counter
        restarts at zero so the horizon is measured from the current state.
        """
        if self.done:
            raise SteppedAfterEpisodeEnd("episode already ended; call reset()")
        outcomes = self._outcomes
        terminal = self._terminal
        random_ = rng.random
        outs = outcomes[self.state][first_action]
        s = outs[int(random_() * len(outs))]
        t = 1
        while not terminal[s] and t < horizon:
            outs = outcomes[s][int(random_() * N_ACTIONS)]
            s = outs[int(random_() * len(outs))]
            t += 1
        self.state = s
        self.steps = t
        self.done = True
        return 1.0 if self._goal[s] else 0.0
