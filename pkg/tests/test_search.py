import math
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lakemcts.env import Action, episode_rng
from lakemcts.search import (
    UNVISITED,
    InvalidCounts,
    QNTables,
    SearchConfig,
    backpropagate,
    select_action,
    uct_value,
)

# 0.5 + 1.4*sqrt(ln(100)/10), evaluated with mpmath at 40 digits
UCT_REFERENCE = 1.450059659418115651703632619999875895126


def test_uct_hand_value():
    assert uct_value(5, 10, 100, 1.4) == pytest.approx(UCT_REFERENCE, abs=1e-6)
    assert round(uct_value(5, 10, 100, 1.4), 6) == 1.450060


def test_uct_unvisited_marker():
    v = uct_value(0, 0, 7, 1.4)
    assert v is UNVISITED
    assert v > uct_value(1e9, 1, 10**9, 1e9)


def test_uct_zero_exploration_is_mean():
    assert uct_value(3, 3, 3, 0.0) == 1.0


def test_uct_invalid_counts():
    with pytest.raises(InvalidCounts):
        uct_value(1, 5, 4, 1.4)


@pytest.mark.parametrize("c", [0.0, -1.0, math.inf, math.nan])
def test_search_config_rejects_bad_weight(c):
    with pytest.raises(ValueError):
        SearchConfig(c)


def tables_with(s, q, n, n_states=16):
    t = QNTables(n_states)
    t.q_sum[s] = list(map(float, q))
    t.n_sa[s] = list(n)
    return t


def test_select_uniform_over_unvisited():
    tables = QNTables(16)
    rng = random.Random(2024)
    trials = 100_000
    counts = Counter(select_action(tables, 0, SearchConfig(), rng) for _ in range(trials))
    for a in Action:
        assert abs(counts[a] / trials - 0.25) < 0.02


def test_select_prefers_unvisited_over_any_value():
    tables = tables_with(0, [10, 10, 0, 10], [10, 10, 0, 10])
    assert select_action(tables, 0, SearchConfig(), random.Random(0)) == 2


def test_select_largest_mean_with_equal_counts():
    tables = tables_with(0, [9, 1, 1, 1], [10, 10, 10, 10])
    for c in (1e-9, 1.4, 50.0):
        assert select_action(tables, 0, SearchConfig(c), random.Random(0)) == Action.LEFT


def test_select_least_visited_gets_bonus():
    # brute force Eq. values with n_s = 16
    q, n = [0, 0, 0, 0], [1, 5, 5, 5]
    values = [uct_value(q[a], n[a], 16, 1.4) for a in range(4)]
    assert max(range(4), key=values.__getitem__) == 0
    tables = tables_with(0, q, n)
    assert select_action(tables, 0, SearchConfig(1.4), random.Random(0)) == Action.LEFT


def test_select_breaks_exact_ties_uniformly():
    tables = tables_with(0, [2, 2, 0, 2], [4, 4, 4, 4])
    rng = random.Random(3)
    counts = Counter(select_action(tables, 0, SearchConfig(), rng) for _ in range(30_000))
    assert set(counts) == {0, 1, 3}
    for a in (0, 1, 3):
        assert abs(counts[a] / 30_000 - 1 / 3) < 0.02


counts_st = st.lists(st.integers(1, 50), min_size=4, max_size=4)


@settings(max_examples=200, deadline=None)
@given(n=counts_st, data=st.data(), c=st.floats(0.01, 5.0))
def test_select_agrees_with_uct_argmax(n, data, c):
    q = [data.draw(st.integers(0, k)) for k in n]
    tables = tables_with(0, q, n)
    values = [uct_value(q[a], n[a], sum(n), c) for a in range(4)]
    best = max(values)
    a = select_action(tables, 0, SearchConfig(c), random.Random(0))
    assert values[a] == best


@settings(max_examples=200, deadline=None)
@given(n=counts_st, data=st.data(), k=st.integers(2, 20))
def test_exploitation_argmax_scale_invariant(n, data, k):
    q = [data.draw(st.integers(0, m)) for m in n]
    means = [q[a] / n[a] for a in range(4)]
    scaled = [(k * q[a]) / (k * n[a]) for a in range(4)]
    winners = {a for a in range(4) if means[a] == max(means)}
    assert {a for a in range(4) if scaled[a] == max(scaled)} == winners
    t = tables_with(0, [k * x for x in q], [k * x for x in n])
    picked = {select_action(t, 0, SearchConfig(1e-300), random.Random(i)) for i in range(20)}
    assert picked <= winners


@settings(max_examples=200, deadline=None)
@given(
    q=st.integers(0, 100), dq=st.integers(1, 50), n_sa=st.integers(1, 100),
    extra=st.integers(1, 1000), c=st.floats(0.0, 5.0),
)
def test_uct_monotone_in_q_sum(q, dq, n_sa, extra, c):
    n_s = n_sa + extra
    assert uct_value(q + dq, n_sa, n_s, c) > uct_value(q, n_sa, n_s, c)


@settings(max_examples=200, deadline=None)
@given(n_sa=st.integers(1, 100), dn=st.integers(1, 100), extra=st.integers(1, 1000),
       c=st.floats(0.1, 5.0))
def test_uct_exploration_decreases_in_visits(n_sa, dn, extra, c):
    n_s = n_sa + dn + extra
    bonus = lambda n: uct_value(0, n, n_s, c)  # noqa: E731
    assert bonus(n_sa + dn) < bonus(n_sa)


def test_backpropagate_single_update():
    t = backpropagate(QNTables(16), [(0, Action.DOWN), (4, Action.DOWN)], 1.0)
    assert t.q_sum[0][Action.DOWN] == 1 and t.n_sa[0][Action.DOWN] == 1
    assert t.q_sum[4][Action.DOWN] == 1 and t.n_sa[4][Action.DOWN] == 1
    assert sum(map(sum, t.n_sa)) == 2


def test_backpropagate_every_visit():
    t = backpropagate(QNTables(16), [(0, 2), (1, 0), (0, 2)], 1.0)
    assert t.q_sum[0][2] == 2 and t.n_sa[0][2] == 2


def test_backpropagate_zero_return():
    t = backpropagate(QNTables(16), [(0, 2), (1, 0), (0, 2)], 0.0)
    assert all(v == 0.0 for row in t.q_sum for v in row)
    assert t.n_sa[0][2] == 2 and t.n_sa[1][0] == 1


def test_backpropagate_rejects_non_binary_return():
    with pytest.raises(ValueError):
        backpropagate(QNTables(4), [(0, 0)], 0.5)


episode_st = st.tuples(
    st.lists(st.tuples(st.integers(0, 15), st.integers(0, 3)), min_size=1, max_size=30),
    st.sampled_from([0.0, 1.0]),
)


@settings(max_examples=100, deadline=None)
@given(episodes=st.lists(episode_st, max_size=40))
def test_backpropagate_bounds_and_visit_totals(episodes):
    t = QNTables(16)
    for path, ret in episodes:
        backpropagate(t, path, ret)
    for s in range(16):
        for a in range(4):
            assert 0 <= t.q_sum[s][a] <= t.n_sa[s][a]
            if t.n_sa[s][a] == 0:
                assert t.q_sum[s][a] == 0
        occurrences = sum(1 for path, _ in episodes for st_, _a in path if st_ == s)
        assert t.n_state(s) == occurrences


def test_table_csv_round_trip(tmp_path):
    t = backpropagate(QNTables(16), [(0, 1), (4, 2), (0, 1)], 1.0)
    path = tmp_path / "tables.csv"
    t.dump_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "state,action,q_sum,n_sa"
    assert len(lines) == 1 + 16 * 4
    assert QNTables.load_csv(path) == t


def test_select_draws_only_from_supplied_stream():
    t = QNTables(16)
    picks = [select_action(t, 0, SearchConfig(), episode_rng(1, k)) for k in range(50)]
    assert picks == [select_action(t, 0, SearchConfig(), episode_rng(1, k)) for k in range(50)]
