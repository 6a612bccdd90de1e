"""Uniform grid over the data bounding box with per-cell ordered point sets.

Cells are addressed densely by a row-major label (last dimension fastest).
Each cell keeps its resident point ids in a red-black tree; the neighbor
cell sets needed for a radius-``delta`` search are precomputed once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .errors import IndexCorruptionError, InvalidInputError
from .geometry import Dataset
from .rbtree import RBForest, rb_contains, rb_delete, rb_insert

MAX_CELLS = 20_000_000
MAX_NEIGHBOR_ENTRIES = 300_000_000

METHODS = ("coordinates-locating", "simple")


def _as_interval(interval, d: int) -> np.ndarray:
    r = np.atleast_1d(np.asarray(interval, dtype=np.float64))
    if r.size == 1 and d > 1:
        r = np.full(d, r[0])
    if r.shape != (d,):
        raise InvalidInputError(f"interval needs 1 or {d} components, got {r.size}")
    if not (np.isfinite(r).all() and (r > 0).all()):
        raise InvalidInputError("interval components must be positive and finite")
    return r


def neighbor_reach(delta: float, r: float) -> int:
    """Largest cell offset ``o`` along one axis that can still hold a neighbor.

    Points in cells ``o`` apart are separated by more than ``(o - 1) * r``
    along that axis, so offset ``o`` matters iff ``(o - 1) * r < delta``.
    This is ``ceil(delta / r)``, computed so it agrees exactly with the
    floating-point gap test used by the simple method.
    """
    if not delta > 0:
        raise InvalidInputError("delta must be positive")
    o = max(1, math.ceil(delta / r))
    while o * r < delta:
        o += 1
    while o > 1 and (o - 1) * r >= delta:
        o -= 1
    return o


@dataclass(frozen=True)
class GridConfig:
    origin: tuple[float, ...]
    interval: tuple[float, ...]
    cells_per_dim: tuple[int, ...]

    @classmethod
    def from_bounds(cls, lo, hi, interval) -> "GridConfig":
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        r = _as_interval(interval, lo.size)
        if (hi < lo).any():
            raise InvalidInputError("upper bounds must not be below lower bounds")
        cells = tuple(max(1, math.ceil(e / ri)) for e, ri in zip((hi - lo).tolist(), r.tolist()))
        if math.prod(cells) > MAX_CELLS:
            raise InvalidInputError(
                f"grid would have {math.prod(cells)} cells (limit {MAX_CELLS}); use a larger interval"
            )
        return cls(tuple(lo.tolist()), tuple(r.tolist()), cells)

    @property
    def d(self) -> int:
        return len(self.origin)

    @property
    def n_cells(self) -> int:
        return math.prod(self.cells_per_dim)

    @property
    def strides(self) -> tuple[int, ...]:
        s, out = 1, []
        for c in reversed(self.cells_per_dim):
            out.append(s)
            s *= c
        return tuple(reversed(out))

    def arrays(self):
        return (
            np.asarray(self.origin, dtype=np.float64),
            np.asarray(self.interval, dtype=np.float64),
            np.asarray(self.cells_per_dim, dtype=np.int64),
            np.asarray(self.strides, dtype=np.int64),
        )

    def check_label(self, label: int) -> int:
        label = int(label)
        if not 0 <= label < self.n_cells:
            raise InvalidInputError(f"no cell {label} in a grid of {self.n_cells}")
        return label

    def label_of(self, coords: Sequence[int]) -> int:
        if len(coords) != self.d:
            raise InvalidInputError("cell coordinate tuple has the wrong length")
        for c, n in zip(coords, self.cells_per_dim):
            if not 0 <= c < n:
                raise InvalidInputError(f"cell coordinates {tuple(coords)} outside the grid")
        return sum(int(c) * s for c, s in zip(coords, self.strides))

    def coords_of(self, label: int) -> tuple[int, ...]:
        label = self.check_label(label)
        return tuple((label // s) % n for s, n in zip(self.strides, self.cells_per_dim))

    def center(self, label: int) -> tuple[float, ...]:
        return tuple(o + (c + 0.5) * r for o, c, r in zip(self.origin, self.coords_of(label), self.interval))

    def cell_range(self, label: int) -> tuple[tuple[float, float], ...]:
        return tuple((p - r / 2, p + r / 2) for p, r in zip(self.center(label), self.interval))

    def covering_cell(self, pos) -> int:
        pos = np.asarray(pos, dtype=np.float64).reshape(1, -1)
        if pos.shape[1] != self.d:
            raise InvalidInputError("position has the wrong dimension")
        return int(cells_of(pos, *self.arrays())[0])


@njit(cache=True)
def cell_label(X, i, origin, interval, cells, strides):
    label = 0
    for k in range(X.shape[1]):
        c = math.floor((X[i, k] - origin[k]) / interval[k])
        if c < 0:
            c = 0
        elif c >= cells[k]:
            c = cells[k] - 1
        label += c * strides[k]
    return label


@njit(cache=True)
def cells_of(X, origin, interval, cells, strides):
    """Covering cell of every row; half-open per axis, clamped into the grid."""
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        out[i] = cell_label(X, i, origin, interval, cells, strides)
    return out


@njit(cache=True)
def _register(labels, root, left, right, parent, color, count, home):
    for i in range(labels.shape[0]):
        c = labels[i]
        rb_insert(root, left, right, parent, color, c, i)
        count[c] += 1
        home[i] = c


@njit(cache=True)
def relocate_all(X, origin, interval, cells, strides, root, left, right, parent, color, count, home):
    """Move every point whose covering cell changed; return the move count.

    Returns ``-(i + 1)`` if point ``i`` is missing from the tree it is
    recorded in.
    """
    moved = 0
    for i in range(X.shape[0]):
        new = cell_label(X, i, origin, interval, cells, strides)
        old = home[i]
        if new == old:
            continue
        if old < 0 or not rb_contains(root, left, right, old, i):
            return -(i + 1)
        rb_delete(root, left, right, parent, color, old, i)
        count[old] -= 1
        rb_insert(root, left, right, parent, color, new, i)
        count[new] += 1
        home[i] = new
        moved += 1
    return moved


@njit(cache=True)
def relocate_ids(X, ids, origin, interval, cells, strides, root, left, right, parent, color, count, home):
    """Like :func:`relocate_all` but only for the points listed in ``ids``."""
    moved = 0
    for a in range(ids.shape[0]):
        i = ids[a]
        new = cell_label(X, i, origin, interval, cells, strides)
        old = home[i]
        if new == old:
            continue
        if old < 0 or not rb_contains(root, left, right, old, i):
            return -(i + 1)
        rb_delete(root, left, right, parent, color, old, i)
        count[old] -= 1
        rb_insert(root, left, right, parent, color, new, i)
        count[new] += 1
        home[i] = new
        moved += 1
    return moved


@njit(cache=True)
def _coordinates_locating(cells, strides, reach, ptr, out):
    d = cells.shape[0]
    n_cells = ptr.shape[0] - 1
    lo = np.empty(d, dtype=np.int64)
    hi = np.empty(d, dtype=np.int64)
    cur = np.empty(d, dtype=np.int64)
    k = 0
    for label in range(n_cells):
        ptr[label] = k
        for a in range(d):
            c = (label // strides[a]) % cells[a]
            lo[a] = max(c - reach[a], 0)
            hi[a] = min(c + reach[a], cells[a] - 1)
            cur[a] = lo[a]
        while True:
            lab = 0
            for a in range(d):
                lab += cur[a] * strides[a]
            out[k] = lab
            k += 1
            a = d - 1
            while a >= 0:
                cur[a] += 1
                if cur[a] <= hi[a]:
                    break
                cur[a] = lo[a]
                a -= 1
            if a < 0:
                break
    ptr[n_cells] = k


@njit(cache=True)
def _simple_pairs(origin, interval, cells, strides, delta, ptr, out):
    d = cells.shape[0]
    n_cells = ptr.shape[0] - 1
    centers = np.empty((n_cells, d))
    for label in range(n_cells):
        for a in range(d):
            c = (label // strides[a]) % cells[a]
            centers[label, a] = origin[a] + (c + 0.5) * interval[a]
    k = 0
    for p in range(n_cells):
        ptr[p] = k
        for q in range(n_cells):
            ok = True
            for a in range(d):
                off = np.round(abs(centers[p, a] - centers[q, a]) / interval[a])
                if off >= 1 and (off - 1) * interval[a] >= delta:
                    ok = False
                    break
            if ok:
                if k < out.shape[0]:
                    out[k] = q
                k += 1
    ptr[n_cells] = k


def _neighbor_total(cells: Sequence[int], reach: Sequence[int]) -> int:
    total = 1
    for n, e in zip(cells, reach):
        total *= sum(min(c + e, n - 1) - max(c - e, 0) + 1 for c in range(n))
    return total


@dataclass(frozen=True)
class GridCell:
    grid_label: int
    grid_position: tuple[float, ...]
    grid_range: tuple[tuple[float, float], ...]
    point_number: int
    points_set: np.ndarray


@dataclass(frozen=True)
class Relocation:
    moved: bool
    from_cell: int
    to_cell: int


class GridIndex:
    """Dense cell store plus ordered point sets and neighbor-cell lists.

    Point ids are row positions ``0..n-1`` of the indexed dataset. Since a
    :class:`Dataset` keeps rows sorted by label, ascending id order is
    ascending label order.
    """

    def __init__(self, config: GridConfig, capacity: int):
        self.config = config
        self.forest = RBForest(config.n_cells, capacity)
        self.delta: float | None = None
        self.neighbor_ptr: np.ndarray | None = None
        self.neighbor_idx: np.ndarray | None = None

    @property
    def n_cells(self) -> int:
        return self.config.n_cells

    @property
    def counts(self) -> np.ndarray:
        return self.forest.count

    @property
    def n_points(self) -> int:
        return int(self.forest.count.sum())

    @property
    def nonempty_count(self) -> int:
        return int(np.count_nonzero(self.forest.count))

    def cell(self, label: int) -> GridCell:
        label = self.config.check_label(label)
        return GridCell(
            grid_label=label,
            grid_position=self.config.center(label),
            grid_range=self.config.cell_range(label),
            point_number=int(self.forest.count[label]),
            points_set=self.forest.keys(label),
        )

    def cell_points(self, label: int) -> list[int]:
        return self.forest.keys(self.config.check_label(label)).tolist()

    def point_cell(self, pid: int) -> int:
        return int(self.forest.home[pid])

    def insert(self, label: int, pid: int) -> None:
        self.forest.insert(self.config.check_label(label), pid)

    def remove(self, label: int, pid: int) -> None:
        self.forest.remove(self.config.check_label(label), pid)

    def neighbor_set(self, label: int) -> np.ndarray:
        label = self.config.check_label(label)
        if self.neighbor_ptr is None:
            raise InvalidInputError("neighbor sets not built; call build_neighbor_sets first")
        return self.neighbor_idx[self.neighbor_ptr[label]:self.neighbor_ptr[label + 1]]

    def relocate(self, pid: int, old_pos, new_pos) -> Relocation:
        src = self.config.covering_cell(old_pos)
        if not self.forest.contains(src, pid):
            raise IndexCorruptionError(f"point {pid} is not registered in cell {src}")
        dst = self.config.covering_cell(new_pos)
        if dst == src:
            return Relocation(False, src, dst)
        self.forest.remove(src, pid)
        self.forest.insert(dst, pid)
        return Relocation(True, src, dst)


def build_grid(ds: Dataset, interval, bounds=None) -> GridIndex:
    """Partition the bounding box (or explicit ``bounds``) and register every point.

    Args:
        ds: points to index.
        interval: cell edge length, one value or one per dimension.
        bounds: optional ``(lo, hi)`` pair overriding the data bounding box.
    """
    if ds.n == 0:
        raise InvalidInputError("cannot grid an empty dataset")
    lo, hi = ds.bounds if bounds is None else bounds
    lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), (ds.d,))
    hi = np.broadcast_to(np.asarray(hi, dtype=np.float64), (ds.d,))
    config = GridConfig.from_bounds(lo, hi, interval)
    index = GridIndex(config, ds.n)
    labels = cells_of(ds.coords, *config.arrays())
    f = index.forest
    _register(labels, f.root, f.left, f.right, f.parent, f.color, f.count, f.home)
    return index


def neighbor_cells(index: GridIndex, cell_label: int, delta: float) -> list[int]:
    """Cells within per-axis reach ``ceil(delta / r_i)`` of ``cell_label``, clipped."""
    cfg = index.config
    coords = cfg.coords_of(cell_label)
    reach = [neighbor_reach(delta, r) for r in cfg.interval]
    axes = [range(max(c - e, 0), min(c + e, n - 1) + 1) for c, e, n in zip(coords, reach, cfg.cells_per_dim)]
    labels = [0]
    for ax, s in zip(axes, cfg.strides):
        labels = [base + c * s for base in labels for c in ax]
    return labels


def build_neighbor_sets(index: GridIndex, delta: float, method: str = "coordinates-locating") -> GridIndex:
    """Precompute every cell's neighbor-cell list (CSR, ascending labels).

    ``"coordinates-locating"`` enumerates index offsets per cell;
    ``"simple"`` compares every pair of cell centers. Both give the same sets.
    """
    if method not in METHODS:
        raise InvalidInputError(f"unknown method {method!r}; choose from {METHODS}")
    cfg = index.config
    reach = [neighbor_reach(delta, r) for r in cfg.interval]
    total = _neighbor_total(cfg.cells_per_dim, reach)
    if total > MAX_NEIGHBOR_ENTRIES:
        raise InvalidInputError(
            f"neighbor-cell lists would hold {total} entries; use a larger interval"
        )
    origin, r, cells, strides = cfg.arrays()
    ptr = np.empty(cfg.n_cells + 1, dtype=np.int64)
    out = np.empty(total, dtype=np.int64)
    if method == "simple":
        _simple_pairs(origin, r, cells, strides, float(delta), ptr, out)
    else:
        _coordinates_locating(cells, strides, np.asarray(reach, dtype=np.int64), ptr, out)
    if ptr[-1] != total:
        raise IndexCorruptionError(f"expected {total} neighbor entries, produced {ptr[-1]}")
    index.delta = float(delta)
    index.neighbor_ptr = ptr
    index.neighbor_idx = out
    return index
