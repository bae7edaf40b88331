"""Optimized MCTS with global Q/N tables on slippery FrozenLake, plus baselines and an exact DP oracle."""

from lakemcts.env import (
    Action,
    Cell,
    EnvConfig,
    FrozenLake,
    GridMap,
    MalformedMap,
    SteppedAfterEpisodeEnd,
    StepOutcome,
    TerminalStateQuery,
    episode_rng,
    load_map,
    parse_map,
    transition_distribution,
)
from lakemcts.search import QNTables, SearchConfig, backpropagate, select_action, uct_value

__version__ = "0.1.0"

__all__ = [
    "Action",
    "Cell",
    "EnvConfig",
    "FrozenLake",
    "GridMap",
    "MalformedMap",
    "QNTables",
    "SearchConfig",
    "SteppedAfterEpisodeEnd",
    "StepOutcome",
    "TerminalStateQuery",
    "backpropagate",
    "episode_rng",
    "load_map",
    "parse_map",
    "select_action",
    "transition_distribution",
    "uct_value",
]
