import pytest
from hypothesis import given, settings, strategies as st

from quasiloc.lattice import (Box, BoxDifference, LRectangle, SiteSet, Strip, are_disjoint, boundary,
                              centered_box, enumerate_rectangles, inner_points_at_distance, strips)


def brute_boundary(sites, d, ambient=None):
    inside = {tuple(s) for s in sites}
    pairs = set()
    for u in inside:
        for axis in range(d):
            for step in (-1, 1):
                v = list(u)
                v[axis] += step
                v = tuple(v)
                if v not in inside and (ambient is None or ambient.contains(v)[0]):
                    pairs.add((u, v))
    return sorted(pairs)


def test_box_basics():
    b = Box(((0, 2), (1, 3)))
    assert b.d == 2 and b.shape == (3, 3) and b.size == 9
    assert b.sites()[0].tolist() == [0, 1] and b.sites()[1].tolist() == [0, 2]
    assert list(b.index_of(b.sites())) == list(range(9))
    with pytest.raises(ValueError):
        Box(((2, 1),))


def test_boundary_interval():
    bd = boundary(Box(((0, 2),)))
    assert bd.pairs == (((0,), (-1,)), ((2,), (3,)))
    assert bd.inner == [(0,), (2,)]


def test_boundary_single_site_2d():
    assert len(boundary([[0, 0]])) == 4


def test_boundary_ambient_filter():
    bd = boundary(Box(((0, 1), (0, 1))), ambient=Box(((0, 3), (0, 1))))
    assert len(bd) == 2
    assert all(v[0] == 2 for _, v in bd)


def test_boundary_empty_region():
    with pytest.raises(ValueError, match="empty region"):
        boundary(BoxDifference(Box(((0, 1),)), Box(((0, 1),))))


def test_inner_points():
    assert len(inner_points_at_distance(Box(((0, 10),)), 0)) == 11
    assert inner_points_at_distance(Box(((0, 10),)), 4)[:, 0].tolist() == [4, 5, 6]
    assert len(inner_points_at_distance(Box(((0, 4), (0, 4))), 3)) == 0


def test_are_disjoint_examples():
    assert are_disjoint(Box(((0, 1),)), Box(((2, 3),)))
    assert not are_disjoint(Box(((0, 2),)), Box(((2, 4),)))
    assert are_disjoint(Box(((0, 1), (0, 5))), Box(((2, 3), (4, 9))))


def test_enumerate_rectangles_1d():
    assert [r.box.to_list() for r in enumerate_rectangles(Box(((0, 10),)), 10)] == [[[0, 10]]]
    rs = enumerate_rectangles(Box(((0, 12),)), 10)
    assert [r.box.to_list() for r in rs] == [[[0, 10]], [[1, 11]], [[2, 12]]]


def test_enumerate_rectangles_2d_matches_double_loop():
    window, L, stride = Box(((0, 6), (0, 6))), 2, 2
    got = {(r.short_axis, r.box) for r in enumerate_rectangles(window, L, stride)}
    want = set()
    for axis in range(2):
        sides = [2 * L + 1, 2 * L + 1]
        sides[axis] = L + 1
        for x in range(0, 7, stride):
            for y in range(0, 7, stride):
                b = Box.from_corner((x, y), sides)
                if window.contains_box(b):
                    want.add((axis, b))
    assert got == want
    for r in enumerate_rectangles(window, L, stride):
        assert sorted(r.box.shape) == [L + 1, 2 * L + 1]


def test_enumerate_rectangles_too_small_warns():
    with pytest.warns(RuntimeWarning):
        assert enumerate_rectangles(Box(((0, 3),)), 10) == []


def test_lrectangle_validation():
    LRectangle.at((0, 0), 3, short_axis=1)
    with pytest.raises(ValueError):
        LRectangle(Box(((0, 6), (0, 6))), 3, 0)


def test_strips():
    parent = Box(((0, 5), (0, 3)))
    ss = list(strips(parent, 2, stride=2, axes=[0]))
    assert [s.box.to_list() for s in ss] == [[[0, 1], [0, 3]], [[2, 3], [0, 3]], [[4, 5], [0, 3]]]
    with pytest.raises(ValueError):
        Strip(parent, Box(((0, 1), (0, 2))), 0, 2)


def test_box_difference_and_siteset():
    diff = BoxDifference(Box(((0, 4), (0, 4))), Box(((1, 2), (1, 2))))
    assert diff.size == 21 == len(diff.sites())
    s = SiteSet([[1, 1], [0, 0], [1, 1]])
    assert s.size == 2 and s.sites()[0].tolist() == [0, 0]
    assert s.contains([[1, 1], [2, 2]]).tolist() == [True, False]


boxes = st.integers(1, 2).flatmap(
    lambda d: st.lists(st.tuples(st.integers(-5, 5), st.integers(1, 8)), min_size=d, max_size=d)
).map(lambda ivs: Box(tuple((a, a + n - 1) for a, n in ivs)))


@settings(max_examples=60, deadline=None)
@given(boxes)
def test_boundary_matches_brute_force(b):
    assert list(boundary(b).pairs) == brute_boundary(b.sites().tolist(), b.d)
    inner = {u for u, _ in boundary(b)}
    # perimeter bound from the geometry
    assert len(inner) <= 2 * b.d * max(b.shape) ** (b.d - 1) * b.d


@settings(max_examples=60, deadline=None)
@given(st.integers(-4, 4), st.integers(1, 6), st.integers(-4, 4), st.integers(1, 6),
       st.integers(-4, 4), st.integers(1, 6), st.integers(-4, 4), st.integers(1, 6))
def test_are_disjoint_matches_site_sets(a0, an, a1, am, b0, bn, b1, bm):
    a = Box(((a0, a0 + an - 1), (a1, a1 + am - 1)))
    b = Box(((b0, b0 + bn - 1), (b1, b1 + bm - 1)))
    sa = {tuple(p) for p in a.sites().tolist()}
    sb = {tuple(p) for p in b.sites().tolist()}
    assert are_disjoint(a, b) == (not sa & sb) == are_disjoint(b, a)


def test_centered_box():
    assert centered_box(3, 2).to_list() == [[-3, 3], [-3, 3]]
