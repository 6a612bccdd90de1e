"""Timing harness comparing SynC and FSynC on equal work."""
from __future__ import annotations

import statistics
import time
from dataclasses import astuple, dataclass, fields
from typing import Callable, Iterable, Sequence

import numpy as np

from .datagen import DatasetSpec, generate
from .engine import SyncParams, run, warmup
from .extract import extract_clusters
from .errors import IndexCorruptionError, InvalidInputError
from .geometry import Dataset, write_rows
from .grid import build_grid, cells_of, relocate_ids


@dataclass(frozen=True)
class BenchRow:
    dataset: str
    n: int
    d: int
    delta: float
    interval: str
    N_total: int | str
    m_nonempty: int | str
    algorithm: str
    wall_time: float
    steps_run: int
    final_ave_len: float
    final_r_c: float
    cluster_count: int

    def result_key(self):
        return (self.steps_run, self.final_ave_len, self.final_r_c, self.cluster_count)


BENCH_COLUMNS = tuple(f.name for f in fields(BenchRow))


def _interval_text(interval) -> str:
    vals = [float(v) for v in np.atleast_1d(interval)]
    if len(set(vals)) == 1:
        return f"{vals[0]:g}"
    return ";".join(f"{v:g}" for v in vals)


def time_run(ds: Dataset, dataset_id: str, algorithm: str, delta: float, interval=None,
             repeats: int = 3, steps: int = 50, epsilon: float | None = None) -> BenchRow:
    """Median wall time of ``repeats`` fixed-length runs of one algorithm.

    The tolerance is zero so every run performs exactly ``steps`` iterations.
    Wall time covers grid and neighbor-set construction but not data loading.
    """
    params = SyncParams(delta=delta, max_steps=steps, ave_len_tol=0.0, algorithm=algorithm,
                        interval=interval if algorithm == "fsync" else None)
    times, outcome = [], None
    for _ in range(max(1, repeats)):
        outcome = run(ds, params)
        times.append(outcome.timing["total"])
    eps = delta / 100 if epsilon is None else epsilon
    clusters = extract_clusters(outcome.positions, eps).cluster_count
    N, m = outcome.grid_cells if outcome.grid_cells else ("", "")
    return BenchRow(
        dataset=dataset_id, n=ds.n, d=ds.d, delta=delta,
        interval=_interval_text(interval) if interval is not None else "",
        N_total=N, m_nonempty=m, algorithm=algorithm,
        wall_time=statistics.median(times), steps_run=outcome.steps,
        final_ave_len=outcome.final.ave_len, final_r_c=outcome.final.r_c,
        cluster_count=clusters,
    )


def bench(datasets: Iterable[tuple[str, Dataset]], deltas: Sequence[float], intervals: Sequence,
          repeats: int = 3, steps: int = 50, epsilon: float | None = None) -> list[BenchRow]:
    """Time sync and fsync on every (dataset, delta, interval) combination.

    SynC does not depend on the interval, so it is timed once per
    (dataset, delta) and its row repeated alongside each fsync row.
    """
    warmup()
    rows = []
    for name, ds in datasets:
        for delta in deltas:
            base = time_run(ds, name, "sync", delta, None, repeats, steps, epsilon)
            for interval in intervals:
                rows.append(base)
                rows.append(time_run(ds, name, "fsync", delta, interval, repeats, steps, epsilon))
    return rows


def generated(ns: Sequence[int], ds_: Sequence[int], make_spec: Callable[[int, int], DatasetSpec]):
    for n in ns:
        for d in ds_:
            spec = make_spec(n, d)
            yield f"gen-n{n}-d{d}-s{spec.seed}", generate(spec)


def sweep_interval(ds: Dataset, dataset_id: str, delta: float, intervals: Sequence,
                   repeats: int = 3, steps: int = 50, baseline: bool = False,
                   epsilon: float | None = None) -> list[BenchRow]:
    """fsync at fixed data and delta across grid intervals (optionally plus a sync row)."""
    warmup()
    rows = [time_run(ds, dataset_id, "sync", delta, None, repeats, steps, epsilon)] if baseline else []
    for interval in intervals:
        rows.append(time_run(ds, dataset_id, "fsync", delta, interval, repeats, steps, epsilon))
    return rows


def paired_mismatches(rows: Sequence[BenchRow]) -> list[tuple[BenchRow, BenchRow]]:
    """(sync, fsync) row pairs of one combination whose non-timing results differ."""
    sync = {(r.dataset, r.delta): r for r in rows if r.algorithm == "sync"}
    bad = []
    for r in rows:
        if r.algorithm == "fsync":
            s = sync.get((r.dataset, r.delta))
            if s is not None and s.result_key() != r.result_key():
                bad.append((s, r))
    return bad


def write_report(rows: Iterable[BenchRow], path) -> None:
    write_rows(path, BENCH_COLUMNS, (astuple(r) for r in rows))


def grid_build_time(ds: Dataset, interval, repeats: int = 5) -> float:
    """Best-of-``repeats`` seconds to build a grid and register every point."""
    build_grid(ds, interval)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        build_grid(ds, interval)
        best = min(best, time.perf_counter() - t0)
    return best


def relocation_cost(ds: Dataset, interval, moves: int = 200_000, seed: int = 0, repeats: int = 3) -> float:
    """Seconds per point relocation (tree delete plus insert) on a grid over ``ds``.

    Random points jump to random positions in a different cell of the
    bounding box, so every move touches two cells of typical occupancy.
    """
    rng = np.random.default_rng(seed)
    lo, hi = ds.bounds
    best = float("inf")
    for _ in range(repeats):
        index = build_grid(ds, interval)
        if index.n_cells < 2:
            raise InvalidInputError("relocation cost needs a grid of at least two cells")
        f = index.forest
        arrays = index.config.arrays()
        X = np.array(ds.coords)
        batch = min(ds.n, max(1, moves // 20))
        done, elapsed = 0, 0.0
        while done < moves:
            who = np.sort(rng.choice(ds.n, size=batch, replace=False))
            dest = rng.uniform(lo, hi, (batch, ds.d))
            stay = cells_of(dest, *arrays) == f.home[who]
            while stay.any():
                dest[stay] = rng.uniform(lo, hi, (int(stay.sum()), ds.d))
                stay = cells_of(dest, *arrays) == f.home[who]
            X[who] = dest
            t0 = time.perf_counter()
            moved = relocate_ids(X, who, *arrays, f.root, f.left, f.right, f.parent, f.color, f.count, f.home)
            elapsed += time.perf_counter() - t0
            if moved != batch:
                raise IndexCorruptionError(f"expected {batch} relocations, saw {moved}")
            done += moved
        best = min(best, elapsed / done)
    return best
