"""Kuramoto-style synchronization clustering: SynC and its grid variant FSynC.

Both algorithms share one per-point kernel. It receives an ascending list of
candidate ids, keeps those at distance ``0 < dis <= delta`` and accumulates
the sine coupling and the edge statistics in ascending id order. SynC hands
it every point, FSynC only the residents of the point's neighbor cells, so
the two produce bit-identical trajectories.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

import numpy as np
from numba import njit

from .errors import IndexCorruptionError, InvalidInputError, NumericOverflowError
from .geometry import Dataset, write_rows
from .grid import GridIndex, build_grid, build_neighbor_sets, cell_label, relocate_all
from .rbtree import rb_collect, rb_contains

ALGORITHMS = ("sync", "fsync")
TRACE_COLUMNS = ("t", "ave_len", "r_c", "directed_edges", "relocations", "step_ms")


# --------------------------------------------------------------------------
# compiled kernels
# --------------------------------------------------------------------------

@njit(cache=True)
def _point_step(X, i, cand, ncand, delta, new_X, cnt, dsum, esum, acc):
    d = X.shape[1]
    for k in range(d):
        acc[k] = 0.0
    m = 0
    ds = 0.0
    es = 0.0
    for a in range(ncand):
        j = cand[a]
        sq = 0.0
        for k in range(d):
            diff = X[j, k] - X[i, k]
            sq += diff * diff
        dist = math.sqrt(sq)
        if dist > 0.0 and dist <= delta:
            m += 1
            ds += dist
            es += math.exp(-dist)
            for k in range(d):
                acc[k] += math.sin(X[j, k] - X[i, k])
    if m > 0:
        for k in range(d):
            new_X[i, k] = X[i, k] + acc[k] / m
    else:
        for k in range(d):
            new_X[i, k] = X[i, k]
    cnt[i] = m
    dsum[i] = ds
    esum[i] = es


@njit(cache=True)
def _naive_step(X, delta, new_X, cnt, dsum, esum):
    n = X.shape[0]
    cand = np.arange(n)
    acc = np.empty(X.shape[1])
    for i in range(n):
        _point_step(X, i, cand, n, delta, new_X, cnt, dsum, esum, acc)


@njit(cache=True)
def _gather(root, left, right, parent, count, nbr_ptr, nbr_idx, cell, buf):
    """Ascending ids of all residents of ``cell``'s neighbor cells."""
    k = 0
    runs = 0
    for a in range(nbr_ptr[cell], nbr_ptr[cell + 1]):
        c = nbr_idx[a]
        if count[c] > 0:
            k = rb_collect(root, left, right, parent, c, buf, k)
            runs += 1
    if runs > 1:
        buf[:k] = np.sort(buf[:k])
    return k


@njit(cache=True)
def _grid_step(X, delta, new_X, cnt, dsum, esum, root, left, right, parent, count, nbr_ptr, nbr_idx):
    n = X.shape[0]
    buf = np.empty(n, dtype=np.int64)
    members = np.empty(n, dtype=np.int64)
    acc = np.empty(X.shape[1])
    for cell in range(count.shape[0]):
        if count[cell] == 0:
            continue
        ncand = _gather(root, left, right, parent, count, nbr_ptr, nbr_idx, cell, buf)
        nm = rb_collect(root, left, right, parent, cell, members, 0)
        for b in range(nm):
            _point_step(X, members[b], buf, ncand, delta, new_X, cnt, dsum, esum, acc)


@njit(cache=True)
def _filter(X, i, cand, ncand, delta, out, start):
    d = X.shape[1]
    k = start
    for a in range(ncand):
        j = cand[a]
        sq = 0.0
        for c in range(d):
            diff = X[j, c] - X[i, c]
            sq += diff * diff
        dist = math.sqrt(sq)
        if dist > 0.0 and dist <= delta:
            out[k] = j
            k += 1
    return k


@njit(cache=True)
def _grow(out, need):
    if need <= out.shape[0]:
        return out
    bigger = np.empty(max(2 * out.shape[0], need), dtype=out.dtype)
    bigger[: out.shape[0]] = out
    return bigger


@njit(cache=True)
def _naive_lists(X, delta):
    n = X.shape[0]
    cand = np.arange(n)
    ptr = np.zeros(n + 1, dtype=np.int64)
    out = np.empty(max(n, 16), dtype=np.int64)
    k = 0
    for i in range(n):
        out = _grow(out, k + n)
        k = _filter(X, i, cand, n, delta, out, k)
        ptr[i + 1] = k
    return ptr, out[:k].copy()


@njit(cache=True)
def _grid_lists(X, delta, origin, interval, cells, strides, root, left, right, parent, count, home, nbr_ptr, nbr_idx):
    n = X.shape[0]
    ptr = np.zeros(n + 1, dtype=np.int64)
    out = np.empty(max(n, 16), dtype=np.int64)
    buf = np.empty(n, dtype=np.int64)
    k = 0
    for i in range(n):
        c = cell_label(X, i, origin, interval, cells, strides)
        if home[i] != c or not rb_contains(root, left, right, c, i):
            return -(i + 1), ptr, out[:0].copy()
        ncand = _gather(root, left, right, parent, count, nbr_ptr, nbr_idx, c, buf)
        out = _grow(out, k + ncand)
        k = _filter(X, i, buf, ncand, delta, out, k)
        ptr[i + 1] = k
    return 0, ptr, out[:k].copy()


@njit(cache=True)
def _csr_step(X, ptr, idx, new_X, cnt, dsum, esum):
    d = X.shape[1]
    acc = np.empty(d)
    for i in range(X.shape[0]):
        for k in range(d):
            acc[k] = 0.0
        ds = 0.0
        es = 0.0
        m = ptr[i + 1] - ptr[i]
        for a in range(ptr[i], ptr[i + 1]):
            j = idx[a]
            sq = 0.0
            for k in range(d):
                diff = X[j, k] - X[i, k]
                sq += diff * diff
            dist = math.sqrt(sq)
            ds += dist
            es += math.exp(-dist)
            for k in range(d):
                acc[k] += math.sin(X[j, k] - X[i, k])
        for k in range(d):
            new_X[i, k] = X[i, k] + acc[k] / m if m > 0 else X[i, k]
        cnt[i] = m
        dsum[i] = ds
        esum[i] = es


@njit(cache=True)
def _reduce(cnt, dsum, esum):
    n = cnt.shape[0]
    edges = 0
    total = 0.0
    rc = 0.0
    rc_raw = 0.0
    for i in range(n):
        edges += cnt[i]
        total += dsum[i]
        rc_raw += esum[i]
        if cnt[i] > 0:
            rc += esum[i] / cnt[i]
    ave = total / edges if edges > 0 else 0.0
    if n > 0:
        rc /= n
        rc_raw /= n
    return edges, ave, rc, rc_raw


@njit(cache=True)
def _consistent(X, origin, interval, cells, strides, root, left, right, parent, count, home):
    n = X.shape[0]
    nil = left.shape[0] - 1
    if count.sum() != n:
        return False
    for i in range(n):
        c = cell_label(X, i, origin, interval, cells, strides)
        if home[i] != c or not rb_contains(root, left, right, c, i):
            return False
    buf = np.empty(n, dtype=np.int64)
    for c in range(count.shape[0]):
        size = 0 if root[c] == nil else rb_collect(root, left, right, parent, c, buf, 0)
        if size != count[c]:
            return False
    return True


# --------------------------------------------------------------------------
# neighbor queries and metrics
# --------------------------------------------------------------------------

def _positions(snapshot) -> np.ndarray:
    X = snapshot.coords if isinstance(snapshot, Dataset) else snapshot
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidInputError("snapshot must be an (n, d) array")
    return X


def _check_delta(delta) -> float:
    delta = float(delta)
    if not (math.isfinite(delta) and delta > 0):
        raise InvalidInputError("delta must be a positive finite number")
    return delta


class NeighborQuery(Protocol):
    positions: np.ndarray
    delta: float

    def __call__(self, i: int) -> np.ndarray: ...

    def lists(self) -> tuple[np.ndarray, np.ndarray]: ...


class NaiveNeighbors:
    """Brute-force neighbor sets: every point is a candidate."""

    def __init__(self, snapshot, delta: float):
        self.positions = _positions(snapshot)
        self.delta = _check_delta(delta)
        self._csr = None

    def lists(self):
        if self._csr is None:
            self._csr = _naive_lists(self.positions, self.delta)
        return self._csr

    def __call__(self, i: int) -> np.ndarray:
        ptr, idx = self.lists()
        return idx[ptr[i]:ptr[i + 1]]


class GridNeighbors:
    """Neighbor sets read from a grid index that tracks ``snapshot``."""

    def __init__(self, snapshot, index: GridIndex, delta: float):
        self.positions = _positions(snapshot)
        self.delta = _check_delta(delta)
        if self.positions.shape[0] > index.forest.capacity:
            raise InvalidInputError("snapshot has more points than the index")
        if index.neighbor_ptr is None or index.delta != self.delta:
            build_neighbor_sets(index, self.delta)
        self.index = index
        self._csr = None

    def lists(self):
        if self._csr is None:
            f, cfg = self.index.forest, self.index.config
            status, ptr, idx = _grid_lists(
                self.positions, self.delta, *cfg.arrays(),
                f.root, f.left, f.right, f.parent, f.count, f.home,
                self.index.neighbor_ptr, self.index.neighbor_idx,
            )
            if status < 0:
                raise IndexCorruptionError(f"point {-status - 1} is not registered in its covering cell")
            self._csr = (ptr, idx)
        return self._csr

    def __call__(self, i: int) -> np.ndarray:
        ptr, idx = self.lists()
        return idx[ptr[i]:ptr[i + 1]]


def _check_index(X, i) -> int:
    i = int(i)
    if not 0 <= i < X.shape[0]:
        raise InvalidInputError(f"no point {i}")
    return i


def neighbors_naive(snapshot, i: int, delta: float) -> list[int]:
    """Ids ``j`` with ``0 < dis(X_i, X_j) <= delta``, ascending."""
    X = _positions(snapshot)
    i = _check_index(X, i)
    delta = _check_delta(delta)
    out = np.empty(X.shape[0], dtype=np.int64)
    k = _filter(X, i, np.arange(X.shape[0]), X.shape[0], delta, out, 0)
    return out[:k].tolist()


def neighbors_grid(snapshot, index: GridIndex, i: int, delta: float) -> list[int]:
    """Same set as :func:`neighbors_naive`, scanning only neighbor cells."""
    X = _positions(snapshot)
    i = _check_index(X, i)
    return GridNeighbors(X, index, delta)(i).tolist()


def _per_point(query: NeighborQuery):
    X = query.positions
    ptr, idx = query.lists()
    n = X.shape[0]
    new_X = np.empty_like(X)
    cnt = np.empty(n, dtype=np.int64)
    dsum = np.empty(n)
    esum = np.empty(n)
    _csr_step(X, ptr, idx, new_X, cnt, dsum, esum)
    return new_X, cnt, dsum, esum


def kuramoto_step(snapshot, query: NeighborQuery) -> np.ndarray:
    """One synchronous update of every point from the step-t snapshot.

    Each coordinate moves by the mean sine of its differences to the point's
    neighbors; points without neighbors stay where they are.
    """
    if snapshot is not None and not np.array_equal(_positions(snapshot), query.positions):
        raise InvalidInputError("query was built for a different snapshot")
    new_X = _per_point(query)[0]
    if not np.isfinite(new_X).all():
        raise NumericOverflowError("synchronization step produced a non-finite coordinate")
    return new_X


def ave_len(snapshot, query: NeighborQuery) -> float:
    """Mean length over all directed neighbor edges; 0 without edges."""
    _, cnt, dsum, esum = _per_point(query)
    return float(_reduce(cnt, dsum, esum)[1])


def order_parameter(snapshot, query: NeighborQuery, normalized: bool = True) -> float:
    """Cluster order parameter.

    With ``normalized`` (default) each point contributes the mean of
    ``exp(-dis)`` over its neighbors (0 if it has none), so the value lies in
    [0, 1] and tends to 1 under full local synchronization. With
    ``normalized=False`` the per-point sums are used unscaled.
    """
    _, cnt, dsum, esum = _per_point(query)
    _, _, rc, rc_raw = _reduce(cnt, dsum, esum)
    return float(rc if normalized else rc_raw)


# --------------------------------------------------------------------------
# the main loop
# --------------------------------------------------------------------------

@dataclass
class SyncParams:
    delta: float
    max_steps: int = 50
    ave_len_tol: float = 1e-3
    algorithm: str = "sync"
    interval: object = None
    neighbor_method: str = "coordinates-locating"

    def __post_init__(self):
        self.delta = _check_delta(self.delta)
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise InvalidInputError("max_steps must be a positive integer")
        self.max_steps = int(self.max_steps)
        if not self.ave_len_tol >= 0:
            raise InvalidInputError("ave_len_tol must be nonnegative")
        if self.algorithm not in ALGORITHMS:
            raise InvalidInputError(f"algorithm must be one of {ALGORITHMS}")
        if (self.interval is None) == (self.algorithm == "fsync"):
            raise InvalidInputError("interval is required for fsync and only meaningful for it")


@dataclass(frozen=True)
class StepMetrics:
    t: int
    ave_len: float
    r_c: float
    r_c_raw: float
    directed_edges: int
    relocations: int
    step_time: float

    def row(self):
        return (self.t, repr(self.ave_len), repr(self.r_c), self.directed_edges,
                self.relocations, f"{self.step_time * 1e3:.3f}")


@dataclass
class SyncState:
    t: int
    positions: np.ndarray
    trace: list[StepMetrics] = field(default_factory=list)


@dataclass
class ClusteringOutcome:
    positions: np.ndarray
    state: SyncState
    timing: dict
    grid: Optional[GridIndex] = None
    history: Optional[list] = None
    grid_cells: Optional[tuple[int, int]] = None

    @property
    def steps(self) -> int:
        return self.state.t

    @property
    def final(self) -> StepMetrics:
        return self.state.trace[-1]


StepHook = Callable[[int, np.ndarray, Optional[GridIndex]], None]


def run(ds: Dataset, params: SyncParams, on_step: StepHook | None = None,
        keep_history: bool = False) -> ClusteringOutcome:
    """Iterate the synchronization until AveLen drops below tolerance or the
    step budget runs out.

    Each iteration builds all neighbor sets from the step-t snapshot, updates
    every point, relocates moved points in the grid (fsync), and records the
    metrics of snapshot t. ``on_step(t, positions, grid)`` is called before
    each iteration with the grid consistent with ``positions``.
    """
    if ds.n == 0:
        raise InvalidInputError("cannot cluster an empty dataset")
    t_start = time.perf_counter()
    X = np.array(ds.coords, dtype=np.float64, order="C")
    new_X = np.empty_like(X)
    n = X.shape[0]
    cnt = np.empty(n, dtype=np.int64)
    dsum = np.empty(n)
    esum = np.empty(n)
    timing = {"grid_build": 0.0, "neighbor_sets": 0.0}

    index = None
    if params.algorithm == "fsync":
        t0 = time.perf_counter()
        index = build_grid(ds, params.interval)
        t1 = time.perf_counter()
        build_neighbor_sets(index, params.delta, params.neighbor_method)
        timing["grid_build"] = t1 - t0
        timing["neighbor_sets"] = time.perf_counter() - t1
        f = index.forest
        grid_arrays = index.config.arrays()
        grid_cells = (index.n_cells, index.nonempty_count)
    else:
        grid_cells = None

    state = SyncState(0, X)
    history = [X.copy()] if keep_history else None
    t_loop = time.perf_counter()
    while state.t < params.max_steps:
        if on_step is not None:
            on_step(state.t, X, index)
        ts = time.perf_counter()
        moved = 0
        if index is None:
            _naive_step(X, params.delta, new_X, cnt, dsum, esum)
        else:
            _grid_step(X, params.delta, new_X, cnt, dsum, esum, f.root, f.left, f.right,
                       f.parent, f.count, index.neighbor_ptr, index.neighbor_idx)
        if not np.isfinite(new_X).all():
            raise NumericOverflowError("synchronization step produced a non-finite coordinate")
        if index is not None:
            moved = relocate_all(new_X, *grid_arrays, f.root, f.left, f.right, f.parent,
                                 f.color, f.count, f.home)
            if moved < 0:
                raise IndexCorruptionError(f"point {-moved - 1} went missing from its grid cell")
        edges, ave, rc, rc_raw = _reduce(cnt, dsum, esum)
        metrics = StepMetrics(state.t, float(ave), float(rc), float(rc_raw), int(edges),
                              int(moved), time.perf_counter() - ts)
        state.trace.append(metrics)
        X, new_X = new_X, X
        state.positions = X
        state.t += 1
        if keep_history:
            history.append(X.copy())
        if ave < params.ave_len_tol:
            break
    t_end = time.perf_counter()
    timing["iterations"] = t_end - t_loop
    timing["total"] = t_end - t_start
    return ClusteringOutcome(X, state, timing, index, history, grid_cells)


def check_grid_consistency(state, index: GridIndex) -> bool:
    """True iff every point sits in the tree of its covering cell and the
    per-cell counts agree with the trees and sum to n."""
    X = _positions(state.positions if isinstance(state, SyncState) else state)
    f = index.forest
    if X.shape[0] != f.capacity:
        return False
    return bool(_consistent(X, *index.config.arrays(), f.root, f.left, f.right, f.parent, f.count, f.home))


def write_trace(trace, path) -> None:
    write_rows(path, TRACE_COLUMNS, (m.row() for m in trace))


def warmup() -> None:
    """Compile every kernel on a toy problem so timings exclude JIT cost."""
    ds = Dataset(np.array([[0.0, 0.0], [0.5, 0.0], [3.0, 3.0]]))
    run(ds, SyncParams(delta=1.0, max_steps=2))
    run(ds, SyncParams(delta=1.0, max_steps=2, algorithm="fsync", interval=1.0))
