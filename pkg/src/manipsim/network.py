"""Directed interaction graphs, switching schedules, and delayed signal channels.

Conventions
-----------
Weights: ``w[i, j] > 0`` means robot ``i`` receives robot ``j``'s signal
(``j`` is a neighbor of ``i``). For reachability the corresponding directed
edge is taken as ``i -> j``; a graph "has a spanning tree" when some root
vertex can be reached from every other vertex along such edges, i.e. every
robot transitively receives the root's information.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


@dataclass(frozen=True, eq=False)
class DiGraph:
    """Weighted directed graph on n vertices; w[i, j] > 0 iff j is a neighbor of i."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weights must be square, got shape {w.shape}")
        if (w < 0).any():
            raise ValueError("weights must be nonnegative")
        if np.diagonal(w).any():
            raise ValueError("self-weights w[i, i] must be zero")
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def neighbors(self, i: int) -> np.ndarray:
        """Indices j with w[i, j] > 0."""
        return np.flatnonzero(self.weights[i] > 0.0)


def graph_from_edges(n: int, edges, weight: float = 1.0) -> DiGraph:
    """Build a DiGraph from (receiver, source) pairs, all with the same weight."""
    w = np.zeros((n, n))
    for i, j in edges:
        w[i, j] = weight
    return DiGraph(w)


def laplacian(g: DiGraph) -> np.ndarray:
    """Graph Laplacian L with L[i, i] = sum_k w[i, k] and L[i, j] = -w[i, j]."""
    L = -g.weights.copy()
    np.fill_diagonal(L, g.weights.sum(axis=1))
    return L


def union(graphs) -> DiGraph:
    """Edge-set union; weights of shared edges are summed."""
    graphs = list(graphs)
    if not graphs:
        raise ValueError("union of zero graphs is undefined")
    n = graphs[0].n
    if any(g.n != n for g in graphs):
        raise ValueError("all graphs must have the same vertex count")
    return DiGraph(sum(g.weights for g in graphs))


def has_spanning_tree(g: DiGraph) -> tuple[bool, int | None]:
    """Whether some root is reachable from every other vertex; returns a witness root.

    A candidate root k is checked by a reverse reachability sweep: following
    edges backwards from k must visit all vertices.
    """
    n = g.n
    adj_T = g.weights.T > 0.0  # adj_T[k, i): edge i -> k exists
    for root in range(n):
        seen = np.zeros(n, dtype=bool)
        seen[root] = True
        stack = [root]
        while stack:
            v = stack.pop()
            for u in np.flatnonzero(adj_T[v] & ~seen):
                seen[u] = True
                stack.append(u)
        if seen.all():
            return True, root
    return False, None


# Six-robot fixture triple: no single graph has a spanning tree but the union
# (a directed 6-cycle plus a chord) does. Arrows below are information-flow
# arrows source -> receiver, stored as w[receiver, source] = 1.
FIXTURE_N = 6


def fixture_graph_a() -> DiGraph:
    return graph_from_edges(FIXTURE_N, [(0, 1), (1, 2)])  # 2->1, 3->2 (1-based)


def fixture_graph_b() -> DiGraph:
    return graph_from_edges(FIXTURE_N, [(2, 3), (3, 4)])  # 4->3, 5->4


def fixture_graph_c() -> DiGraph:
    return graph_from_edges(FIXTURE_N, [(4, 5), (5, 0), (0, 2)])  # 6->5, 1->6, 3->1


def fixture_triple() -> list[DiGraph]:
    return [fixture_graph_a(), fixture_graph_b(), fixture_graph_c()]


@dataclass(frozen=True, eq=False)
class GraphSchedule:
    """Piecewise-constant graph signal: graphs[indices[k]] is active on [t_k, t_{k+1}).

    The last interval extends beyond switch_times[-1] indefinitely. Dwell
    bounds dwell_min <= t_{k+1} - t_k < dwell_max are validated on
    construction.
    """

    graphs: tuple[DiGraph, ...]
    switch_times: np.ndarray
    indices: np.ndarray
    dwell_min: float
    dwell_max: float

    def __post_init__(self):
        ts = np.asarray(self.switch_times, dtype=float)
        idx = np.asarray(self.indices, dtype=int)
        if ts.shape != idx.shape or ts.ndim != 1 or len(ts) == 0:
            raise ValueError("switch_times and indices must be equal-length 1-d arrays")
        if ts[0] != 0.0:
            raise ValueError("schedule must start at t = 0")
        gaps = np.diff(ts)
        if len(gaps) and ((gaps < self.dwell_min - 1e-12).any() or (gaps >= self.dwell_max).any()):
            raise ValueError("dwell bounds violated by switch_times")
        if (idx < 0).any() or (idx >= len(self.graphs)).any():
            raise ValueError("graph index out of range")
        object.__setattr__(self, "switch_times", ts)
        object.__setattr__(self, "indices", idx)

    @property
    def n(self) -> int:
        return self.graphs[0].n

    def active(self, t: float) -> DiGraph:
        k = np.searchsorted(self.switch_times, t, side="right") - 1
        return self.graphs[self.indices[max(k, 0)]]

    def active_indices_in(self, t0: float, t1: float) -> set[int]:
        """Indices of all graphs active at some point of [t0, t1)."""
        ts = self.switch_times
        lo = max(int(np.searchsorted(ts, t0, side="right")) - 1, 0)
        hi = int(np.searchsorted(ts, t1, side="left"))
        return set(int(i) for i in self.indices[lo:hi])


def static_schedule(g: DiGraph, dwell: float = 1.0) -> GraphSchedule:
    return GraphSchedule((g,), np.array([0.0]), np.array([0]), dwell, np.inf)


def random_switching_schedule(
    graphs, period: float, horizon: float, seed: int
) -> GraphSchedule:
    """Uniformly random switching every `period` seconds.

    Slots are filled in consecutive blocks of len(graphs) slots, each block an
    independent uniform permutation of the graph set. Every slot is uniformly
    distributed, and every aligned window of len(graphs)*period seconds
    activates all graphs, so union connectivity over such windows is
    deterministic rather than merely probable.
    """
    graphs = tuple(graphs)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x5C4ED)))
    n_slots = int(np.ceil(horizon / period)) + 1
    n_blocks = int(np.ceil(n_slots / len(graphs)))
    idx = np.concatenate([rng.permutation(len(graphs)) for _ in range(n_blocks)])[:n_slots]
    times = np.arange(n_slots) * period
    return GraphSchedule(graphs, times, idx, period, period + 1e-9)


def schedule_condition_check(
    sched: GraphSchedule, window: float, horizon: float | None = None
) -> bool:
    """True iff the union of active graphs over every full window has a spanning tree.

    [0, horizon) is partitioned into consecutive windows of the given length;
    a trailing remainder shorter than the window is not checked. Windows
    shorter than the dwell time may legitimately fail even when larger
    windows pass.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    if horizon is None:
        horizon = float(sched.switch_times[-1]) + sched.dwell_min
    n_windows = int(np.floor(horizon / window + 1e-9))
    for k in range(n_windows):
        active = sched.active_indices_in(k * window, (k + 1) * window)
        ok, _ = has_spanning_tree(union(sched.graphs[i] for i in active))
        if not ok:
            return False
    return True


@dataclass(frozen=True)
class DelayModel:
    """Per-edge piecewise-constant delay: base + U(0, jitter_max), redrawn each period."""

    base: float = 0.3
    jitter_max: float = 0.9
    resample_period: float = 0.03
    seed: int = 0

    def __post_init__(self):
        if self.base < 0 or self.jitter_max < 0 or self.resample_period <= 0:
            raise ValueError("invalid delay model parameters")

    @property
    def max_delay(self) -> float:
        return self.base + self.jitter_max


@lru_cache(maxsize=65536)
def _interval_uniform(seed: int, i: int, j: int, k: int) -> float:
    rng = np.random.default_rng(np.random.SeedSequence((seed, i, j, k)))
    return float(rng.uniform())


def sample_delay(model: DelayModel, edge: tuple[int, int], t: float) -> float:
    """Delay on `edge` at time t; constant on each resample interval, deterministic in (seed, edge, k)."""
    if model.jitter_max == 0.0:
        return model.base
    k = int(np.floor(t / model.resample_period + 1e-12))
    return model.base + model.jitter_max * _interval_uniform(model.seed, edge[0], edge[1], k)


class DelayChannel:
    """Timestamped signal buffer with zero-order-hold delayed reads.

    Single writer appends strictly increasing timestamps; reads are
    random-access and never pop (delay resampling can make the effective
    lookback time non-monotone). With a finite horizon, samples older than
    (newest - horizon) are dropped except for the most recent of them, so a
    read at the horizon boundary still resolves.
    """

    def __init__(self, horizon: float | None = None):
        self.horizon = horizon
        self._times: list[float] = []
        self._values: list[np.ndarray] = []

    def __len__(self) -> int:
        return len(self._times)

    def append(self, t: float, value: np.ndarray) -> None:
        if self._times and t <= self._times[-1]:
            raise ValueError(f"timestamps must be strictly increasing, got {t}")
        self._times.append(float(t))
        self._values.append(np.array(value, dtype=float, copy=True))
        if self.horizon is not None:
            cutoff = t - self.horizon
            # keep one sample at or before the cutoff as the hold value
            drop = bisect.bisect_right(self._times, cutoff) - 1
            if drop > 0:
                del self._times[:drop]
                del self._values[:drop]

    def read(self, t: float, delay: float) -> np.ndarray:
        """Sample with the largest timestamp <= t - delay; initial-value hold before that."""
        if not self._times:
            raise ValueError("cannot read from an empty channel")
        idx = bisect.bisect_right(self._times, t - delay) - 1
        return self._values[max(idx, 0)]


def delayed_read(ch: DelayChannel, t: float, delay: float) -> np.ndarray:
    return ch.read(t, delay)
