"""Exact dynamic programming over the FrozenLake MDP.

Reward is 1 on entering a goal cell and 0 otherwise; terminal cells are
absorbing with no outgoing transitions.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from lakemcts.env import N_ACTIONS, FrozenLake, GridMap, transition_distribution


class NonConvergence(RuntimeError):
    pass


@dataclass(frozen=True)
class Mdp:
    n_states: int
    n_actions: int
    start: int
    transitions: dict[tuple[int, int], list[tuple[int, float]]]
    terminal_reward: np.ndarray
    terminal_mask: np.ndarray

    def dense(self) -> np.ndarray:
        """Transition tensor ``P[s, a, s']``; rows of terminal states are zero."""
        P = np.zeros((self.n_states, self.n_actions, self.n_states))
        for (s, a), dist in self.transitions.items():
            for nxt, p in dist:
                P[s, a, nxt] += p
        return P


@dataclass(frozen=True)
class ValueFunction:
    values: np.ndarray
    residuals: tuple[float, ...] = ()


PolicyVector = Mapping[int, int]


def build_mdp(grid: GridMap, slippery: bool) -> Mdp:
    transitions = {}
    for s in range(grid.n_states):
        if grid.is_terminal(s):
            continue
        for a in range(N_ACTIONS):
            transitions[s, a] = transition_distribution(grid, slippery, s, a)
    reward = np.array([1.0 if grid.is_goal(s) else 0.0 for s in range(grid.n_states)])
    mask = np.array([grid.is_terminal(s) for s in range(grid.n_states)])
    return Mdp(grid.n_states, N_ACTIONS, grid.start, transitions, reward, mask)


def _action_values(mdp: Mdp, P: np.ndarray, values: np.ndarray, gamma: float) -> np.ndarray:
    # entering s' pays terminal_reward[s']; only non-terminal successors continue
    cont = np.where(mdp.terminal_mask, 0.0, values)
    return P @ (mdp.terminal_reward + gamma * cont)


def greedify(mdp: Mdp, values: np.ndarray, gamma: float) -> dict[int, int]:
    """Greedy policy for ``values``; ties resolve to the lowest action index."""
    q = _action_values(mdp, mdp.dense(), values, gamma)
    return {s: int(np.argmax(q[s])) for s in range(mdp.n_states) if not mdp.terminal_mask[s]}


def value_iteration(
    mdp: Mdp, gamma: float, tol: float = 1e-10, max_iter: int = 1_000_000
) -> tuple[ValueFunction, dict[int, int]]:
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must be in [0, 1), got {gamma}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    P = mdp.dense()
    v = np.zeros(mdp.n_states)
    residuals = []
    for _ in range(max_iter):
        q = _action_values(mdp, P, v, gamma)
        v_new = np.where(mdp.terminal_mask, 0.0, q.max(axis=1))
        residual = float(np.max(np.abs(v_new - v)))
        residuals.append(residual)
        v = v_new
        if residual < tol:
            vf = ValueFunction(v, tuple(residuals))
            return vf, greedify(mdp, v, gamma)
    raise NonConvergence(f"value iteration did not reach tol={tol} in {max_iter} sweeps")


def policy_evaluation(mdp: Mdp, policy: PolicyVector, gamma: float) -> np.ndarray:
    """Discounted values of a fixed policy by a direct linear solve."""
    P = mdp.dense()
    n = mdp.n_states
    P_pi = np.zeros((n, n))
    for s, a in policy.items():
        P_pi[s] = P[s, a]
    r_pi = P_pi @ mdp.terminal_reward
    live = np.where(mdp.terminal_mask, 0.0, 1.0)
    return np.linalg.solve(np.eye(n) - gamma * P_pi * live[None, :], r_pi)


def finite_horizon_success(mdp: Mdp, policy: PolicyVector, horizon: int) -> float:
    """Exact probability of entering a goal within ``horizon`` steps from the start state."""
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    missing = [s for s in range(mdp.n_states) if not mdp.terminal_mask[s] and s not in policy]
    if missing:
        raise ValueError(f"policy undefined on non-terminal states {missing}")
    n = mdp.n_states
    P_pi = np.zeros((n, n))
    for s in range(n):
        if not mdp.terminal_mask[s]:
            for nxt, p in mdp.transitions[s, int(policy[s])]:
                P_pi[s, nxt] += p
    # success[k][s]: reached a goal within k steps from s
    success = mdp.terminal_reward.copy()
    for _ in range(horizon):
        success = np.where(mdp.terminal_mask, mdp.terminal_reward, P_pi @ success)
    return float(success[mdp.start])


def optimal_success(grid: GridMap, slippery: bool, gamma: float = 0.99, horizon: int = 100):
    """``(p*, policy, values)``: horizon success of the value-iteration policy."""
    mdp = build_mdp(grid, slippery)
    vf, policy = value_iteration(mdp, gamma)
    return finite_horizon_success(mdp, policy, horizon), policy, vf


def evaluate_policy_empirically(
    env: FrozenLake,
    policy: PolicyVector,
    episodes: int,
    rng: random.Random | np.random.Generator | int,
) -> float:
    """Monte Carlo success rate of ``policy`` with horizon equal to the env's step cap.

    Episodes run in lock-step as numpy arrays, sampling from the environment's
    own equiprobable outcome table rather than from the MDP.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    if isinstance(rng, random.Random):
        rng = np.random.default_rng(rng.getrandbits(64))
    elif not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    grid = env.grid
    n = grid.n_states
    # every (s, a) has the same number of equiprobable outcomes: 1, or 3 when slippery
    k = len(env.outcomes(grid.start, 0))
    table = np.zeros((n, k), dtype=np.int64)
    for s in range(n):
        if grid.is_terminal(s):
            table[s] = s
            continue
        table[s] = env.outcomes(s, int(policy[s]))
    terminal = np.array([grid.is_terminal(s) for s in range(n)])
    goal = np.array([grid.is_goal(s) for s in range(n)])
    state = np.full(episodes, grid.start, dtype=np.int64)
    for _ in range(env.step_cap):
        live = ~terminal[state]
        if not live.any():
            break
        idx = rng.integers(0, k, size=int(live.sum()))
        state[live] = table[state[live], idx]
    return float(goal[state].mean())
