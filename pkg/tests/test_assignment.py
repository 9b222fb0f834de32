import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_force_assignment, brute_force_thresholded
from storesight.assignment import associate, partition_by_score, solve_assignment
from storesight.errors import InvalidThresholds, NonFiniteCost
from storesight.geometry import BBox, Detection, iou_distance_matrix


def check_partition(res, n, m):
    rows = [i for i, _ in res.matches] + res.unmatched_rows
    cols = [j for _, j in res.matches] + res.unmatched_cols
    assert sorted(rows) == list(range(n))
    assert sorted(cols) == list(range(m))


def test_examples():
    r = solve_assignment([[0, 1], [1, 0]])
    assert r.matches == [(0, 0), (1, 1)] and r.total_cost([[0, 1], [1, 0]]) == 0
    r = solve_assignment([[4, 1], [2, 8]])
    assert r.matches == [(0, 1), (1, 0)] and r.total_cost([[4, 1], [2, 8]]) == 3
    assert brute_force_assignment([[4, 1], [2, 8]]) == 3
    r = solve_assignment([[1, 2, 3], [3, 1, 2]])
    assert r.matches == [(0, 0), (1, 1)] and r.unmatched_cols == [2]
    assert brute_force_assignment([[1, 2, 3], [3, 1, 2]]) == 2


def test_empty_and_tall():
    r = solve_assignment(np.zeros((0, 3)))
    assert r.matches == [] and r.unmatched_cols == [0, 1, 2]
    r = solve_assignment(np.zeros((2, 0)))
    assert r.unmatched_rows == [0, 1]
    c = np.array([[5.0], [1.0], [3.0]])
    r = solve_assignment(c)
    assert r.matches == [(1, 0)] and r.unmatched_rows == [0, 2]


def test_non_finite_rejected():
    with pytest.raises(NonFiniteCost):
        solve_assignment([[0, np.nan]])
    with pytest.raises(NonFiniteCost):
        solve_assignment([[np.inf]])


def test_deterministic_on_ties():
    c = np.ones((4, 4))
    assert solve_assignment(c).matches == solve_assignment(c.copy()).matches


@pytest.mark.parametrize("seed", range(3))
def test_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    for _ in range(100):
        n, m = (int(v) for v in rng.integers(1, 8, 2))
        c = rng.random((n, m)) * 10
        r = solve_assignment(c)
        check_partition(r, n, m)
        assert len(r.matches) == min(n, m)
        assert r.total_cost(c) == pytest.approx(brute_force_assignment(c), abs=1e-9)


@given(st.integers(1, 6), st.floats(-100, 100), st.integers(0, 2**32 - 1))
def test_uniform_shift_invariance(n, shift, seed):
    c = np.random.default_rng(seed).random((n, n))
    a = solve_assignment(c)
    b = solve_assignment(c + shift)
    # continuous random costs have a unique optimum with probability 1
    assert a.matches == b.matches
    assert b.total_cost(c) == pytest.approx(brute_force_assignment(c), abs=1e-9)


def test_integer_costs_exact():
    rng = np.random.default_rng(4)
    for _ in range(50):
        c = rng.integers(0, 5, size=(5, 6)).astype(float)
        assert solve_assignment(c).total_cost(c) == brute_force_assignment(c)


def dets(scores):
    return [Detection(1, BBox(i, 0, 1, 1), s) for i, s in enumerate(scores)]


def test_partition_examples():
    high, low, gone = partition_by_score(dets([0.9, 0.3, 0.05]), 0.6, 0.1)
    assert [d.score for d in high] == [0.9]
    assert [d.score for d in low] == [0.3]
    assert [d.score for d in gone] == [0.05]
    high, low, gone = partition_by_score(dets([0.7, 0.8]), 0.6, 0.1)
    assert len(high) == 2 and low == gone == []
    assert partition_by_score([], 0.6, 0.1) == ([], [], [])
    with pytest.raises(InvalidThresholds):
        partition_by_score([], 0.2, 0.5)


@given(st.lists(st.floats(0, 1), max_size=30), st.floats(0, 1), st.floats(0, 1))
def test_partition_is_disjoint_cover(scores, a, b):
    lo, hi = sorted((a, b))
    ds = dets(scores)
    high, low, gone = partition_by_score(ds, hi, lo)
    assert sorted(map(id, high + low + gone)) == sorted(map(id, ds))
    assert all(d.score >= hi for d in high)
    assert all(lo <= d.score < hi for d in low)
    assert all(d.score < lo for d in gone)


def test_associate_examples():
    b = BBox(0, 0, 10, 10)
    assert associate([b], [b], 0.8).matches == [(0, 0)]
    r = associate([b], [BBox(50, 50, 10, 10)], 0.8)
    assert r.matches == [] and r.unmatched_rows == [0] and r.unmatched_cols == [0]


def test_associate_ambiguous_layout_matches_brute_force():
    tracks = [BBox(0, 0, 10, 10), BBox(6, 0, 10, 10), BBox(40, 0, 10, 10)]
    detections = [BBox(3, 0, 10, 10), BBox(9, 1, 10, 10), BBox(70, 0, 10, 10)]
    for max_cost in (0.3, 0.5, 0.8):
        got = associate(tracks, detections, max_cost)
        want = brute_force_thresholded(iou_distance_matrix(tracks, detections), max_cost)
        assert set(got.matches) == want
        check_partition(got, 3, 3)


def test_associate_random_layouts_match_brute_force():
    rng = np.random.default_rng(12)
    for _ in range(100):
        n, m = (int(v) for v in rng.integers(1, 5, 2))
        tr = [BBox(*rng.uniform(0, 40, 2), *rng.uniform(5, 20, 2)) for _ in range(n)]
        de = [BBox(*rng.uniform(0, 40, 2), *rng.uniform(5, 20, 2)) for _ in range(m)]
        cost = iou_distance_matrix(tr, de)
        try:
            want = brute_force_thresholded(cost, 0.8)
        except AssertionError:
            continue  # tied optimum, e.g. several all-disjoint pairings
        assert set(associate(tr, de, 0.8).matches) == want
