"""Points, datasets, Euclidean distance, standardization and CSV I/O."""
from __future__ import annotations

import csv
import math
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError, ParseError

TRUTH_COLUMN = "truth"


@dataclass(frozen=True)
class Point:
    label: int
    coords: tuple[float, ...]

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        if not all(math.isfinite(c) for c in coords):
            raise InvalidInputError(f"point {self.label} has non-finite coordinates")
        object.__setattr__(self, "coords", coords)

    @property
    def d(self) -> int:
        return len(self.coords)


@dataclass(frozen=True, eq=False)
class Dataset:
    """An immutable n x d point set.

    Points are kept sorted by label so that row order and ascending label
    order coincide; every algorithm in the package iterates in row order.
    ``truth`` optionally carries generator ground truth (-1 marks noise).
    """

    coords: np.ndarray
    labels: np.ndarray = None
    truth: np.ndarray | None = None
    d: int = field(default=None)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.ndim == 1 and coords.size == 0:
            coords = coords.reshape(0, self.d or 0)
        if coords.ndim != 2:
            raise InvalidInputError("coords must be an (n, d) array")
        n, d = coords.shape
        if self.d is not None and self.d != d:
            raise InvalidInputError(f"expected dimension {self.d}, got {d}")
        if not np.isfinite(coords).all():
            raise InvalidInputError("coordinates must be finite")
        labels = np.arange(1, n + 1) if self.labels is None else np.asarray(self.labels)
        labels = labels.astype(np.int64)
        if labels.shape != (n,):
            raise InvalidInputError("one label per point required")
        if np.unique(labels).size != n:
            raise InvalidInputError("point labels must be unique")
        truth = None if self.truth is None else np.asarray(self.truth, dtype=np.int64)
        if truth is not None and truth.shape != (n,):
            raise InvalidInputError("one ground-truth entry per point required")

        order = np.argsort(labels, kind="stable")
        if not np.array_equal(order, np.arange(n)):
            coords, labels = coords[order], labels[order]
            truth = None if truth is None else truth[order]
        coords = np.ascontiguousarray(coords)
        for arr in (coords, labels, truth):
            if arr is not None:
                arr.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "truth", truth)
        object.__setattr__(self, "d", d)

    @classmethod
    def from_points(cls, points: Sequence[Point], d: int | None = None) -> "Dataset":
        if not points:
            return cls(np.zeros((0, d or 0)), d=d)
        dims = {p.d for p in points}
        if len(dims) != 1:
            raise InvalidInputError("all points must share one dimension")
        return cls(np.array([p.coords for p in points]), labels=[p.label for p in points])

    def __len__(self) -> int:
        return self.coords.shape[0]

    @property
    def n(self) -> int:
        return len(self)

    @property
    def points(self) -> list[Point]:
        return [Point(int(l), tuple(c)) for l, c in zip(self.labels, self.coords)]

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-dimension (min, max) of the data."""
        if self.n == 0:
            raise InvalidInputError("empty dataset has no bounds")
        return self.coords.min(axis=0), self.coords.max(axis=0)

    def with_coords(self, coords) -> "Dataset":
        return Dataset(coords, labels=self.labels, truth=self.truth)


def _as_vector(p) -> np.ndarray:
    if isinstance(p, Point):
        return np.asarray(p.coords, dtype=np.float64)
    return np.asarray(p, dtype=np.float64).reshape(-1)


def distance(a, b) -> float:
    """Euclidean distance between two points or coordinate vectors.

    Summation runs over dimensions in order, matching the compiled kernels
    bit for bit.
    """
    x, y = _as_vector(a), _as_vector(b)
    if x.shape != y.shape:
        raise InvalidInputError(f"dimension mismatch: {x.size} vs {y.size}")
    sq = 0.0
    for u, v in zip(x.tolist(), y.tolist()):
        diff = v - u
        sq += diff * diff
    return math.sqrt(sq)


def standardize(ds: Dataset, target_max: float = 600.0) -> Dataset:
    """Affinely map every dimension onto ``[0, target_max]``.

    Dimensions with zero extent collapse to 0.
    """
    if ds.n == 0:
        raise InvalidInputError("cannot standardize an empty dataset")
    if not target_max > 0:
        raise InvalidInputError("target_max must be positive")
    lo, hi = ds.bounds
    extent = hi - lo
    out = np.zeros_like(ds.coords)
    live = extent > 0
    out[:, live] = (ds.coords[:, live] - lo[live]) / extent[live] * target_max
    return ds.with_coords(out)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(path) -> Dataset:
    """Read one point per row; labels are assigned by row order from 1.

    A first row whose first field is non-numeric is taken as a header. If the
    header names a ``truth`` column, that column is kept as ground truth
    instead of a coordinate.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1)]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    rows = [(i, [f.strip() for f in r]) for i, r in rows if any(f.strip() for f in r)]

    truth_col = None
    if rows and not _is_number(rows[0][1][0]):
        header = [h.lower() for h in rows[0][1]]
        if TRUTH_COLUMN in header:
            truth_col = header.index(TRUTH_COLUMN)
        width = len(header)
        rows = rows[1:]
    else:
        width = len(rows[0][1]) if rows else 0

    values, truth = [], []
    for lineno, fields in rows:
        if len(fields) != width:
            raise ParseError(f"expected {width} fields, found {len(fields)}", row=lineno)
        try:
            nums = [float(f) for f in fields]
        except ValueError as exc:
            raise ParseError(f"non-numeric field ({exc})", row=lineno) from None
        if not all(math.isfinite(v) for v in nums):
            raise ParseError("non-finite field", row=lineno)
        if truth_col is not None:
            truth.append(int(nums.pop(truth_col)))
        values.append(nums)

    d = width - (truth_col is not None)
    coords = np.array(values, dtype=np.float64).reshape(len(values), d)
    return Dataset(coords, truth=truth if truth_col is not None else None)


def format_float(v: float) -> str:
    return repr(float(v))


@contextmanager
def open_sink(path):
    """Text handle for ``path``; ``"-"`` means standard output."""
    if path == "-":
        yield sys.stdout
    else:
        with Path(path).open("w", newline="") as fh:
            yield fh


def write_rows(path, header: Iterable[str], rows: Iterable[Iterable]) -> None:
    with open_sink(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        w.writerows(rows)


def write_csv(ds: Dataset, path, with_truth: bool = False) -> None:
    """Write ``ds`` with a header row ``x1..xd`` (plus ``truth`` if asked)."""
    if with_truth and ds.truth is None:
        raise InvalidInputError("dataset carries no ground truth")
    header = [f"x{k + 1}" for k in range(ds.d)]
    if with_truth:
        header.append(TRUTH_COLUMN)
    rows = ([format_float(v) for v in row] + ([int(ds.truth[i])] if with_truth else [])
            for i, row in enumerate(ds.coords))
    write_rows(path, header, rows)
