import csv

import numpy as np

from synclust.bench import (BENCH_COLUMNS, bench, grid_build_time, paired_mismatches,
                            relocation_cost, sweep_interval, time_run, write_report)
from synclust.datagen import DatasetSpec, generate
from synclust.geometry import Dataset


def small(n=300, seed=0):
    return generate(DatasetSpec(n=n, nc=5, cs=0.2, range=(0.0, 12.0), seed=seed))


def test_matrix_shape_and_pairing(tmp_path):
    data = [("a", small()), ("b", small(seed=1))]
    rows = bench(data, [1.0, 0.5], [0.5, 1.0, 2.0], repeats=1, steps=5)
    assert len(rows) == 2 * 2 * 3 * 2
    assert {r.algorithm for r in rows[0::2]} == {"sync"}
    assert {r.algorithm for r in rows[1::2]} == {"fsync"}
    assert paired_mismatches(rows) == []
    for r in rows:
        assert r.steps_run == 5
        if r.algorithm == "sync":
            assert r.N_total == "" and r.m_nonempty == "" and r.interval == ""
        else:
            assert 1 <= r.m_nonempty <= r.N_total
    path = tmp_path / "bench.csv"
    write_report(rows, path)
    table = list(csv.reader(path.open()))
    assert tuple(table[0]) == BENCH_COLUMNS and len(table) == len(rows) + 1


def test_mismatch_detected():
    rows = bench([("a", small())], [1.0], [1.0], repeats=1, steps=3)
    s, f = rows
    forged = type(f)(**{**f.__dict__, "cluster_count": f.cluster_count + 1})
    assert paired_mismatches([s, forged]) == [(s, forged)]


def test_sweep_cell_count_falls():
    rows = sweep_interval(small(), "s", 1.0, [0.1, 0.5, 1.0, 4.0], repeats=1, steps=3, baseline=True)
    assert rows[0].algorithm == "sync"
    N = [r.N_total for r in rows[1:]]
    assert all(b < a for a, b in zip(N, N[1:]))


def test_single_point_row():
    row = time_run(Dataset(np.array([[1.0, 1.0]])), "one", "fsync", 1.0, 1.0, repeats=1)
    assert row.N_total == 1 and row.m_nonempty == 1 and row.steps_run == 50
    assert row.cluster_count == 0 and row.final_ave_len == 0.0


def test_huge_interval_degenerates_to_one_cell():
    ds = small()
    row = time_run(ds, "x", "fsync", 1.0, 1000.0, repeats=1, steps=3)
    ref = time_run(ds, "x", "sync", 1.0, None, repeats=1, steps=3)
    assert row.N_total == 1 and row.result_key() == ref.result_key()


def test_cost_helpers_positive():
    ds = small(2000)
    assert grid_build_time(ds, 1.0, repeats=2) > 0
    assert relocation_cost(ds, 1.0, moves=2000, repeats=1) > 0
