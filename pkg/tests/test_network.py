"""Graphs, switching schedules, delay sampling, and delayed channel reads."""

import numpy as np
import pytest

from manipsim import network as net

RNG = np.random.default_rng(777)


def closure_oracle(weights: np.ndarray) -> np.ndarray:
    """All-pairs reachability by repeated boolean matrix squaring."""
    n = weights.shape[0]
    R = (weights > 0) | np.eye(n, dtype=bool)
    for _ in range(int(np.ceil(np.log2(max(n, 2)))) + 1):
        R = R | (R.astype(int) @ R.astype(int) > 0)
    return R


def spanning_tree_oracle(weights: np.ndarray) -> bool:
    R = closure_oracle(weights)
    return bool(R.all(axis=0).any())  # some column reachable from every row


def test_laplacian_empty_graph():
    g = net.DiGraph(np.zeros((3, 3)))
    np.testing.assert_array_equal(net.laplacian(g), np.zeros((3, 3)))


def test_laplacian_single_edge():
    g = net.graph_from_edges(2, [(0, 1)])
    np.testing.assert_array_equal(net.laplacian(g), [[1.0, -1.0], [0.0, 0.0]])


def test_laplacian_zero_row_sums():
    for _ in range(50):
        w = RNG.uniform(0, 2, size=(6, 6)) * (RNG.random(size=(6, 6)) < 0.4)
        np.fill_diagonal(w, 0.0)
        L = net.laplacian(net.DiGraph(w))
        np.testing.assert_allclose(L @ np.ones(6), np.zeros(6), atol=1e-12)


def test_union_idempotent_and_disjoint():
    a = net.graph_from_edges(4, [(0, 1)])
    b = net.graph_from_edges(4, [(2, 3)])
    uu = net.union([a, a])
    assert set(map(tuple, np.argwhere(uu.weights > 0))) == {(0, 1)}
    ab = net.union([a, b])
    assert set(map(tuple, np.argwhere(ab.weights > 0))) == {(0, 1), (2, 3)}
    with pytest.raises(ValueError):
        net.union([a, net.DiGraph(np.zeros((3, 3)))])


def test_spanning_tree_star_and_isolated():
    # every vertex points at vertex 0: root 0
    star = net.graph_from_edges(4, [(1, 0), (2, 0), (3, 0)])
    # reachability edges are i->j for w[i,j] > 0, i.e. 1->0, 2->0, 3->0
    ok, root = net.has_spanning_tree(star)
    assert ok and root == 0
    isolated = net.graph_from_edges(4, [(1, 0), (2, 0)])
    assert net.has_spanning_tree(isolated) == (False, None)


def test_fixture_triple_union_property():
    triple = net.fixture_triple()
    for g in triple:
        assert not net.has_spanning_tree(g)[0]
    ok, _ = net.has_spanning_tree(net.union(triple))
    assert ok
    # operator-attached robot 3 (index 2) is itself a valid root of the union
    u = net.union(triple)
    R = closure_oracle(u.weights)
    assert R[:, 2].all()


def test_spanning_tree_matches_oracle_random():
    for _ in range(2000):
        n = int(RNG.integers(2, 6))
        w = (RNG.random(size=(n, n)) < 0.3) * 1.0
        np.fill_diagonal(w, 0.0)
        g = net.DiGraph(w)
        assert net.has_spanning_tree(g)[0] == spanning_tree_oracle(w)


def test_schedule_static_connected_passes_any_window():
    ring = net.graph_from_edges(3, [(0, 1), (1, 2), (2, 0)])
    sched = net.static_schedule(ring)
    assert net.schedule_condition_check(sched, window=0.5, horizon=10.0)


def test_schedule_missing_vertex_fails():
    # graphs a and b never involve vertex 5's edges
    sched = net.random_switching_schedule(
        [net.fixture_graph_a(), net.fixture_graph_b()], period=0.15, horizon=5.0, seed=3
    )
    assert not net.schedule_condition_check(sched, window=0.45, horizon=5.0)


def test_schedule_fixture_switching_450ms_window():
    sched = net.random_switching_schedule(
        net.fixture_triple(), period=0.15, horizon=60.0, seed=42
    )
    assert net.schedule_condition_check(sched, window=0.45, horizon=60.0)


def test_schedule_dwell_bounds_validated():
    g = net.fixture_graph_a()
    with pytest.raises(ValueError):
        net.GraphSchedule((g,), np.array([0.0, 0.05]), np.array([0, 0]), 0.1, 0.2)


def test_sample_delay_constant_without_jitter():
    m = net.DelayModel(base=0.2, jitter_max=0.0, resample_period=0.03, seed=1)
    assert net.sample_delay(m, (0, 1), 0.0) == 0.2
    assert net.sample_delay(m, (0, 1), 17.023) == 0.2


def test_sample_delay_deterministic_and_piecewise_constant():
    m = net.DelayModel(seed=9)
    v1 = net.sample_delay(m, (2, 5), 0.301)
    v2 = net.sample_delay(m, (2, 5), 0.301)
    v3 = net.sample_delay(m, (2, 5), 0.329)  # same 30 ms interval
    v4 = net.sample_delay(m, (2, 5), 0.331)  # next interval
    assert v1 == v2 == v3
    assert v4 != v1
    assert net.sample_delay(m, (5, 2), 0.301) != v1  # edge-specific stream


def test_sample_delay_uniform_distribution():
    # KS distance of 1e5 samples against U[0.3, 1.2] below 0.01
    m = net.DelayModel(base=0.3, jitter_max=0.9, resample_period=0.03, seed=123)
    n = 100_000
    vals = np.array(
        [net.sample_delay(m, (0, 1), k * m.resample_period) for k in range(n)]
    )
    assert vals.min() >= 0.3 and vals.max() <= 1.2
    xs = np.sort(vals)
    cdf = (xs - 0.3) / 0.9
    ecdf_hi = np.arange(1, n + 1) / n
    ecdf_lo = np.arange(0, n) / n
    ks = max(np.abs(ecdf_hi - cdf).max(), np.abs(ecdf_lo - cdf).max())
    assert ks < 0.01


def test_delayed_read_zoh_rules():
    ch = net.DelayChannel()
    with pytest.raises(ValueError):
        ch.read(0.0, 0.0)
    v = [np.array([k, -k], dtype=float) for k in range(3)]
    for k, t in enumerate([0.0, 0.005, 0.010]):
        ch.append(t, v[k])
    np.testing.assert_array_equal(ch.read(0.005, 0.0), v[1])  # exact sample time
    np.testing.assert_array_equal(ch.read(0.012, 0.004), v[1])  # hand-traced ZOH
    np.testing.assert_array_equal(ch.read(0.001, 0.5), v[0])  # initial-value hold
    with pytest.raises(ValueError):
        ch.append(0.010, v[0])  # non-increasing timestamp


def test_delayed_read_monotone_lookback():
    ch = net.DelayChannel()
    for k in range(100):
        ch.append(0.01 * k, np.array([float(k)]))
    prev = -1.0
    for lb in np.linspace(0.0, 0.9, 200):
        val = ch.read(0.99, 0.9 - lb)[0]  # lookback time 0.09 + lb, non-decreasing
        assert val >= prev
        prev = val


def test_delay_channel_horizon_trim_keeps_hold_sample():
    ch = net.DelayChannel(horizon=0.05)
    for k in range(20):
        ch.append(0.01 * k, np.array([float(k)]))
    # oldest retained sample must still serve reads at the horizon boundary
    assert ch.read(0.19, 0.05)[0] == 14.0
    assert len(ch) <= 7
