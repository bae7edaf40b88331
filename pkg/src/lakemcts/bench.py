"""Episode-loop driver, smoothed metrics, CSV output and the cross-algorithm comparison."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, NamedTuple, Sequence

from lakemcts.agents import (
    PolicyMctsConfig,
    QLearnConfig,
    RolloutTable,
    new_qtable,
    run_episode_optimized_mcts,
    run_episode_policy_mcts,
    run_episode_qlearning,
)
from lakemcts.env import EnvConfig, FrozenLake, GridMap, episode_rng, load_map
from lakemcts.search import QNTables, SearchConfig

ALGORITHMS = ("optimized_mcts", "policy_mcts", "q_learning")
FINAL_SPAN = 10_000
STABLE_BAND = 0.05

CSV_HEADER = (
    "episode",
    "reward",
    "steps",
    "success",
    "smoothed_reward",
    "smoothed_steps",
    "cumulative_success_rate",
)


@dataclass(frozen=True)
class RunConfig:
    algorithm: str
    episodes: int = 100_000
    map: str = "4x4"
    slippery: bool = True
    seed: int = 0
    smoothing_window: int = 1000
    step_cap: int = 0  # 0: default for the map
    search: SearchConfig = field(default_factory=SearchConfig)
    qlearn: QLearnConfig = field(default_factory=QLearnConfig)
    policy_mcts: PolicyMctsConfig = field(default_factory=PolicyMctsConfig)
    out: Path | None = None

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if self.episodes < 1:
            raise ValueError("episodes must be positive")
        if self.smoothing_window < 1:
            raise ValueError("smoothing_window must be positive")
        if self.smoothing_window > self.episodes:
            object.__setattr__(self, "smoothing_window", self.episodes)

    def grid(self) -> GridMap:
        return load_map(self.map)

    def env_config(self) -> EnvConfig:
        return EnvConfig(self.grid(), self.slippery, self.step_cap)


class MetricsRow(NamedTuple):
    episode: int
    reward: int
    steps: int
    success: int
    smoothed_reward: float
    smoothed_steps: float
    cumulative_success_rate: float


@dataclass(frozen=True)
class Summary:
    algorithm: str
    episodes: int
    final_success_rate: float
    overall_success_rate: float
    mean_reward_final: float
    mean_steps_final: float
    stabilization_episode: int
    wall_time_seconds: float
    seed: int


class RunResult(NamedTuple):
    rows: list[MetricsRow]
    summary: Summary
    learned: Any  # the agent's table after the last episode


def moving_average(series: Sequence[float], window: int) -> list[float]:
    """Trailing mean; the first ``window - 1`` entries average the available prefix."""
    if window < 1:
        raise ValueError("window must be >= 1")
    out = []
    total = 0
    for i, x in enumerate(series):
        total += x
        if i >= window:
            total -= series[i - window]
        out.append(total / min(i + 1, window))
    return out


def stabilization_episode(smoothed: Sequence[float], band: float = STABLE_BAND) -> int:
    """First 1-based episode after which ``smoothed`` stays within ``band`` of its last value."""
    if not smoothed:
        raise ValueError("empty series")
    final = smoothed[-1]
    i = len(smoothed)
    while i > 0 and abs(smoothed[i - 1] - final) <= band:
        i -= 1
    return i + 1


def _episode_loop(cfg: RunConfig, env: FrozenLake):
    n = env.n_states
    if cfg.algorithm == "optimized_mcts":
        table = QNTables(n)
        run = lambda rng, k: run_episode_optimized_mcts(env, table, cfg.search, rng, k)  # noqa: E731
    elif cfg.algorithm == "q_learning":
        table = new_qtable(n)
        run = lambda rng, k: run_episode_qlearning(env, table, cfg.qlearn, rng, k)  # noqa: E731
    else:
        table = RolloutTable(n)
        run = lambda rng, k: run_episode_policy_mcts(env, table, cfg.policy_mcts, rng, k)  # noqa: E731
    return table, run


def run_benchmark(cfg: RunConfig) -> RunResult:
    env = FrozenLake(cfg.env_config())
    table, run = _episode_loop(cfg, env)
    rewards = []
    steps = []
    t0 = time.perf_counter()
    for k in range(cfg.episodes):
        rec = run(episode_rng(cfg.seed, k), k)
        rewards.append(int(rec.episode_return))
        steps.append(rec.steps)
    wall = time.perf_counter() - t0

    rows = metrics_rows(rewards, steps, cfg.smoothing_window)
    span = min(FINAL_SPAN, cfg.episodes)
    tail_r = rewards[-span:]
    summary = Summary(
        algorithm=cfg.algorithm,
        episodes=cfg.episodes,
        final_success_rate=sum(tail_r) / span,
        overall_success_rate=sum(rewards) / cfg.episodes,
        mean_reward_final=sum(float(r) for r in tail_r) / span,
        mean_steps_final=sum(steps[-span:]) / span,
        stabilization_episode=stabilization_episode([r.smoothed_reward for r in rows]),
        wall_time_seconds=wall,
        seed=cfg.seed,
    )
    return RunResult(rows, summary, table)


def metrics_rows(rewards: Sequence[int], steps: Sequence[int], window: int) -> list[MetricsRow]:
    sm_r = moving_average(rewards, window)
    sm_s = moving_average(steps, window)
    rows = []
    wins = 0
    for i, (r, st) in enumerate(zip(rewards, steps)):
        wins += r
        rows.append(MetricsRow(i + 1, r, st, r, sm_r[i], sm_s[i], wins / (i + 1)))
    return rows


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def format_csv(rows: Sequence[MetricsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(
            [
                r.episode,
                r.reward,
                r.steps,
                r.success,
                _fmt(r.smoothed_reward),
                _fmt(r.smoothed_steps),
                _fmt(r.cumulative_success_rate),
            ]
        )
    return buf.getvalue()


def write_csv(rows: Sequence[MetricsRow], path: str | Path) -> None:
    Path(path).write_bytes(format_csv(rows).encode())


def read_csv(path: str | Path) -> list[MetricsRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        return [
            MetricsRow(int(e), int(r), int(st), int(sc), float(a), float(b), float(c))
            for e, r, st, sc, a, b, c in reader
        ]


SUMMARY_COLUMNS = ("algorithm", "final_success_rate", "mean_reward", "mean_steps", "wall_time_s")


def summary_table(summaries: Sequence[Summary]) -> str:
    """Aligned text table, one line per run."""
    cells = [list(SUMMARY_COLUMNS)]
    for s in summaries:
        cells.append(
            [
                s.algorithm,
                f"{s.final_success_rate:.4f}",
                f"{s.mean_reward_final:.4f}",
                f"{s.mean_steps_final:.2f}",
                f"{s.wall_time_seconds:.2f}",
            ]
        )
    widths = [max(len(row[i]) for row in cells) for i in range(len(SUMMARY_COLUMNS))]
    lines = []
    for row in cells:
        first = row[0].ljust(widths[0])
        rest = [v.rjust(w) for v, w in zip(row[1:], widths[1:])]
        lines.append("  ".join([first, *rest]))
    return "\n".join(lines) + "\n"


def summary_csv(summaries: Sequence[Summary]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        [
            "algorithm",
            "episodes",
            "seed",
            "final_success_rate",
            "overall_success_rate",
            "mean_reward_final",
            "mean_steps_final",
            "stabilization_episode",
            "wall_time_seconds",
        ]
    )
    for s in summaries:
        w.writerow(
            [
                s.algorithm,
                s.episodes,
                s.seed,
                _fmt(s.final_success_rate),
                _fmt(s.overall_success_rate),
                _fmt(s.mean_reward_final),
                _fmt(s.mean_steps_final),
                s.stabilization_episode,
                _fmt(s.wall_time_seconds),
            ]
        )
    return buf.getvalue()


def write_run(result: RunResult, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(result.rows, out / "metrics.csv")
    (out / "summary.txt").write_text(summary_table([result.summary]))
    (out / "summary.csv").write_text(summary_csv([result.summary]))
    return out


def compare(cfgs: Sequence[RunConfig], out_dir: str | Path | None = None) -> tuple[str, list[RunResult]]:
    """Run every config in order; return the aligned report and the per-run results.

    All configs must share the map and root seed. With ``out_dir``, each run's
    files go to ``out_dir/<algorithm>/`` and the combined summaries to ``out_dir``.
    """
    if len(cfgs) < 2:
        raise ValueError("compare needs at least two run configs")
    if len({(c.map, c.slippery, c.seed) for c in cfgs}) != 1:
        raise ValueError("compared runs must share map, slipperiness and seed")
    results = []
    for cfg in cfgs:
        try:
            res = run_benchmark(cfg)
        except Exception as exc:
            raise RuntimeError(f"run {cfg.algorithm!r} failed: {exc}") from exc
        results.append(res)
        if out_dir is not None:
            write_run(res, Path(out_dir) / cfg.algorithm)
    summaries = [r.summary for r in results]
    report = summary_table(summaries)
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "summary.txt").write_text(report)
        (Path(out_dir) / "summary.csv").write_text(summary_csv(summaries))
    return report, results
