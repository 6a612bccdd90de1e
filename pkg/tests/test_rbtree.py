import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from synclust.errors import IndexCorruptionError, InvalidInputError
from synclust.rbtree import RBForest


def test_ordering_contract():
    f = RBForest(2, 10)
    assert f.keys(0).tolist() == []
    for k in (7, 3, 5):
        f.insert(0, k)
    assert f.keys(0).tolist() == [3, 5, 7]
    f.insert(0, 4)
    f.remove(0, 4)
    assert f.keys(0).tolist() == [3, 5, 7]
    assert f.count[0] == 3 and f.count[1] == 0


def test_errors():
    f = RBForest(2, 4)
    f.insert(1, 2)
    with pytest.raises(InvalidInputError):
        f.insert(0, 2)
    with pytest.raises(IndexCorruptionError):
        f.remove(0, 2)
    with pytest.raises(InvalidInputError):
        f.insert(5, 0)
    with pytest.raises(InvalidInputError):
        f.insert(0, 4)


ops = st.lists(st.tuples(st.integers(0, 63), st.integers(0, 2)), max_size=400)


@settings(max_examples=200, deadline=None)
@given(ops)
def test_matches_sorted_set_model(seq):
    f = RBForest(3, 64)
    model = [set(), set(), set()]
    for key, cell in seq:
        home = int(f.home[key])
        if home == -1:
            f.insert(cell, key)
            model[cell].add(key)
        else:
            f.remove(home, key)
            model[home].discard(key)
        for c in range(3):
            f.validate(c)
    for c in range(3):
        assert f.keys(c).tolist() == sorted(model[c])
        assert f.count[c] == len(model[c])
        for key in range(64):
            assert f.contains(c, key) == (key in model[c])


def test_height_is_logarithmic():
    rng = np.random.default_rng(1)
    f = RBForest(1, 1 << 14)
    for size in (1 << 8, 1 << 11, 1 << 14):
        for k in rng.permutation(size):
            if f.home[k] == -1:
                f.insert(0, k)
        # remove a random half and put it back to exercise deletes
        half = rng.choice(size, size // 2, replace=False)
        for k in half:
            f.remove(0, k)
        for k in half:
            f.insert(0, k)
        f.validate(0)
        assert f.height(0) <= 2 * math.log2(size + 1)
    # sequential inserts are the worst case for an unbalanced tree
    g = RBForest(1, 4096)
    for k in range(4096):
        g.insert(0, k)
    assert g.height(0) <= 2 * math.log2(4097)
