"""Array-backed red-black trees, one per grid cell, sharing a node pool.

Every point lives in exactly one cell, so node ``i`` *is* point ``i`` and its
key is ``i`` itself. All trees of a grid share the ``left``/``right``/
``parent``/``color`` arrays; ``root[c]`` is the root node of cell ``c``.
Index ``nil = capacity`` is the shared black sentinel (CLRS style), so the
arrays hold ``capacity + 1`` entries.

The kernels are numba-compiled so the synchronization loop can walk and
update the trees without leaving native code.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .errors import IndexCorruptionError, InvalidInputError

BLACK = np.uint8(0)
RED = np.uint8(1)


@njit(cache=True)
def _rotate_left(root, left, right, parent, cell, x):
    nil = left.shape[0] - 1
    y = right[x]
    right[x] = left[y]
    if left[y] != nil:
        parent[left[y]] = x
    parent[y] = parent[x]
    px = parent[x]
    if px == nil:
        root[cell] = y
    elif x == left[px]:
        left[px] = y
    else:
        right[px] = y
    left[y] = x
    parent[x] = y


@njit(cache=True)
def _rotate_right(root, left, right, parent, cell, x):
    nil = left.shape[0] - 1
    y = left[x]
    left[x] = right[y]
    if right[y] != nil:
        parent[right[y]] = x
    parent[y] = parent[x]
    px = parent[x]
    if px == nil:
        root[cell] = y
    elif x == right[px]:
        right[px] = y
    else:
        left[px] = y
    right[y] = x
    parent[x] = y


@njit(cache=True)
def rb_insert(root, left, right, parent, color, cell, z):
    nil = left.shape[0] - 1
    y = nil
    x = root[cell]
    while x != nil:
        y = x
        x = left[x] if z < x else right[x]
    parent[z] = y
    if y == nil:
        root[cell] = z
    elif z < y:
        left[y] = z
    else:
        right[y] = z
    left[z] = nil
    right[z] = nil
    color[z] = 1

    while color[parent[z]] == 1:
        p = parent[z]
        g = parent[p]
        if p == left[g]:
            u = right[g]
            if color[u] == 1:
                color[p] = 0
                color[u] = 0
                color[g] = 1
                z = g
            else:
                if z == right[p]:
                    z = p
                    _rotate_left(root, left, right, parent, cell, z)
                    p = parent[z]
                    g = parent[p]
                color[p] = 0
                color[g] = 1
                _rotate_right(root, left, right, parent, cell, g)
        else:
            u = left[g]
            if color[u] == 1:
                color[p] = 0
                color[u] = 0
                color[g] = 1
                z = g
            else:
                if z == left[p]:
                    z = p
                    _rotate_right(root, left, right, parent, cell, z)
                    p = parent[z]
                    g = parent[p]
                color[p] = 0
                color[g] = 1
                _rotate_left(root, left, right, parent, cell, g)
    color[root[cell]] = 0


@njit(cache=True)
def _transplant(root, left, right, parent, cell, u, v):
    nil = left.shape[0] - 1
    pu = parent[u]
    if pu == nil:
        root[cell] = v
    elif u == left[pu]:
        left[pu] = v
    else:
        right[pu] = v
    parent[v] = pu


@njit(cache=True)
def _tree_min(left, x):
    nil = left.shape[0] - 1
    while left[x] != nil:
        x = left[x]
    return x


@njit(cache=True)
def rb_delete(root, left, right, parent, color, cell, z):
    nil = left.shape[0] - 1
    y = z
    y_color = color[y]
    if left[z] == nil:
        x = right[z]
        _transplant(root, left, right, parent, cell, z, right[z])
    elif right[z] == nil:
        x = left[z]
        _transplant(root, left, right, parent, cell, z, left[z])
    else:
        y = _tree_min(left, right[z])
        y_color = color[y]
        x = right[y]
        if parent[y] == z:
            parent[x] = y
        else:
            _transplant(root, left, right, parent, cell, y, right[y])
            right[y] = right[z]
            parent[right[y]] = y
        _transplant(root, left, right, parent, cell, z, y)
        left[y] = left[z]
        parent[left[y]] = y
        color[y] = color[z]

    if y_color == 0:
        while x != root[cell] and color[x] == 0:
            p = parent[x]
            if x == left[p]:
                w = right[p]
                if color[w] == 1:
                    color[w] = 0
                    color[p] = 1
                    _rotate_left(root, left, right, parent, cell, p)
                    w = right[p]
                if color[left[w]] == 0 and color[right[w]] == 0:
                    color[w] = 1
                    x = p
                else:
                    if color[right[w]] == 0:
                        color[left[w]] = 0
                        color[w] = 1
                        _rotate_right(root, left, right, parent, cell, w)
                        w = right[p]
                    color[w] = color[p]
                    color[p] = 0
                    color[right[w]] = 0
                    _rotate_left(root, left, right, parent, cell, p)
                    x = root[cell]
            else:
                w = left[p]
                if color[w] == 1:
                    color[w] = 0
                    color[p] = 1
                    _rotate_right(root, left, right, parent, cell, p)
                    w = left[p]
                if color[right[w]] == 0 and color[left[w]] == 0:
                    color[w] = 1
                    x = p
                else:
                    if color[left[w]] == 0:
                        color[right[w]] = 0
                        color[w] = 1
                        _rotate_left(root, left, right, parent, cell, w)
                        w = left[p]
                    color[w] = color[p]
                    color[p] = 0
                    color[left[w]] = 0
                    _rotate_right(root, left, right, parent, cell, p)
                    x = root[cell]
        color[x] = 0

    left[z] = nil
    right[z] = nil
    parent[z] = nil
    color[z] = 0
    # the sentinel must come out of every operation clean
    parent[nil] = nil
    color[nil] = 0


@njit(cache=True)
def rb_contains(root, left, right, cell, key):
    nil = left.shape[0] - 1
    x = root[cell]
    while x != nil and x != key:
        x = left[x] if key < x else right[x]
    return x == key


@njit(cache=True)
def rb_first(root, left, cell):
    nil = left.shape[0] - 1
    x = root[cell]
    if x == nil:
        return nil
    return _tree_min(left, x)


@njit(cache=True)
def rb_next(left, right, parent, x):
    """In-order successor of node ``x`` (``nil`` past the last key)."""
    nil = left.shape[0] - 1
    if right[x] != nil:
        return _tree_min(left, right[x])
    y = parent[x]
    while y != nil and x == right[y]:
        x = y
        y = parent[y]
    return y


@njit(cache=True)
def rb_collect(root, left, right, parent, cell, out, start):
    """Append the keys of ``cell`` to ``out[start:]`` in ascending order."""
    nil = left.shape[0] - 1
    k = start
    x = rb_first(root, left, cell)
    while x != nil:
        out[k] = x
        k += 1
        x = rb_next(left, right, parent, x)
    return k


@njit(cache=True)
def rb_height(root, left, right, cell):
    nil = left.shape[0] - 1
    if root[cell] == nil:
        return 0
    best = 0
    stack = np.empty((128, 2), dtype=np.int64)
    stack[0, 0] = root[cell]
    stack[0, 1] = 1
    top = 1
    while top > 0:
        top -= 1
        x = stack[top, 0]
        h = stack[top, 1]
        if h > best:
            best = h
        if left[x] != nil:
            stack[top, 0] = left[x]
            stack[top, 1] = h + 1
            top += 1
        if right[x] != nil:
            stack[top, 0] = right[x]
            stack[top, 1] = h + 1
            top += 1
    return best


class RBForest:
    """Ordered label sets for ``n_cells`` cells over point ids ``0..capacity-1``.

    ``home[i]`` caches the cell currently holding point ``i`` (-1 if none);
    ``count[c]`` is the cell's point number.
    """

    def __init__(self, n_cells: int, capacity: int):
        if n_cells < 1 or capacity < 0:
            raise InvalidInputError("need at least one cell and a nonnegative capacity")
        nil = capacity
        self.capacity = capacity
        self.nil = nil
        self.root = np.full(n_cells, nil, dtype=np.int64)
        self.count = np.zeros(n_cells, dtype=np.int64)
        self.left = np.full(capacity + 1, nil, dtype=np.int64)
        self.right = np.full(capacity + 1, nil, dtype=np.int64)
        self.parent = np.full(capacity + 1, nil, dtype=np.int64)
        self.color = np.zeros(capacity + 1, dtype=np.uint8)
        self.home = np.full(capacity, -1, dtype=np.int64)

    @property
    def n_cells(self) -> int:
        return self.root.shape[0]

    def _check_cell(self, cell: int) -> int:
        cell = int(cell)
        if not 0 <= cell < self.n_cells:
            raise InvalidInputError(f"no cell {cell}")
        return cell

    def _check_key(self, key: int) -> int:
        key = int(key)
        if not 0 <= key < self.capacity:
            raise InvalidInputError(f"point id {key} outside 0..{self.capacity - 1}")
        return key

    def insert(self, cell: int, key: int) -> None:
        cell, key = self._check_cell(cell), self._check_key(key)
        if self.home[key] != -1:
            raise InvalidInputError(f"point {key} already resides in cell {self.home[key]}")
        rb_insert(self.root, self.left, self.right, self.parent, self.color, cell, key)
        self.home[key] = cell
        self.count[cell] += 1

    def remove(self, cell: int, key: int) -> None:
        cell, key = self._check_cell(cell), self._check_key(key)
        if not rb_contains(self.root, self.left, self.right, cell, key):
            raise IndexCorruptionError(f"point {key} not found in cell {cell}")
        rb_delete(self.root, self.left, self.right, self.parent, self.color, cell, key)
        self.home[key] = -1
        self.count[cell] -= 1

    def contains(self, cell: int, key: int) -> bool:
        cell, key = self._check_cell(cell), self._check_key(key)
        return bool(rb_contains(self.root, self.left, self.right, cell, key))

    def keys(self, cell: int) -> np.ndarray:
        cell = self._check_cell(cell)
        out = np.empty(self.count[cell], dtype=np.int64)
        k = rb_collect(self.root, self.left, self.right, self.parent, cell, out, 0)
        if k != out.shape[0]:
            raise IndexCorruptionError(f"cell {cell} holds {k} keys, count says {out.shape[0]}")
        return out

    def height(self, cell: int) -> int:
        return int(rb_height(self.root, self.left, self.right, self._check_cell(cell)))

    def validate(self, cell: int) -> int:
        """Check BST order, parent links and red-black rules; return black height."""
        cell = self._check_cell(cell)
        nil = self.nil
        L, R, P, C = self.left, self.right, self.parent, self.color
        if C[nil] != BLACK:
            raise IndexCorruptionError("sentinel turned red")
        r = int(self.root[cell])
        if r == nil:
            return 0
        if C[r] != BLACK or P[r] != nil:
            raise IndexCorruptionError("root must be black and parentless")

        def walk(x, lo, hi):
            if x == nil:
                return 1
            if not lo < x < hi:
                raise IndexCorruptionError(f"key {x} breaks search order")
            for child in (L[x], R[x]):
                if child != nil and P[child] != x:
                    raise IndexCorruptionError(f"bad parent link under {x}")
                if C[x] == RED and child != nil and C[child] == RED:
                    raise IndexCorruptionError(f"red node {x} has a red child")
            hl = walk(int(L[x]), lo, x)
            hr = walk(int(R[x]), x, hi)
            if hl != hr:
                raise IndexCorruptionError(f"unequal black heights below {x}")
            return hl + (C[x] == BLACK)

        return walk(r, -1, self.capacity)
