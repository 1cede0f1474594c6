from __future__ import annotations

import itertools
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torus_pwi.gallery import DiagonalBandLocator, flip_isolated
from torus_pwi.isometry import exchange, flip, identity, semigroup_closure, translation
from torus_pwi.partition import (BoundarySet, Interval, Partition, PartitionError, Polygon, boundary_set,
                                 interior_sample, locate, pullback_boundary, refine_by_semigroup,
                                 region_from_json, region_measure, validate_partition)
from torus_pwi.system import PwiSystem

HALF = F(1, 2)


def halves():
    return Partition.intervals([0, HALF])


def box(x0, y0, x1, y1, **kw):
    return Polygon(((x0, y0), (x1, y0), (x1, y1), (x0, y1)), **kw)


def vertical_split():
    return Partition(2, (box(0, 0, HALF, 1), box(HALF, 0, 1, 1)))


# -------------------------------------------------------------- validation

def test_validate_halves():
    diag = validate_partition(halves())
    assert diag.ok
    assert diag.measures == [HALF, HALF] and diag.total == 1


def test_validate_dyadic_strips():
    flags = (True, True, False, False)   # bottom, right; left and top excluded
    regions = [box(1 - F(2, 2 ** n), 0, 1 - F(1, 2 ** n), 1, include_edges=flags) for n in range(1, 21)]
    regions.append(box(1 - F(1, 2 ** 20), 0, 1, 1, include_edges=flags))
    diag = validate_partition(Partition(2, regions))
    assert diag.ok, diag.problems
    assert diag.total == 1


def test_validate_overlap_witness():
    p = Partition(1, (Interval(0, F(6, 10)), Interval(F(5, 10), 1)))
    diag = validate_partition(p)
    assert not diag.ok
    pr = diag.problems[0]
    assert pr.kind == "overlap" and pr.witness == (F(55, 100),)
    with pytest.raises(PartitionError) as info:
        diag.raise_for_problems()
    assert info.value.witness == (F(55, 100),)


def test_validate_gap():
    diag = validate_partition(Partition(1, (Interval(0, F(1, 4)), Interval(HALF, 1))))
    assert [p.kind for p in diag.problems] == ["gap"]
    assert diag.problems[0].witness == (F(3, 8),)


def test_validate_double_claimed():
    p = Partition(1, (Interval(0, HALF, True, True), Interval(HALF, 1, True, False)))
    kinds = {pr.kind for pr in validate_partition(p).problems}
    assert kinds == {"double-claimed"}


def test_validate_diagonal_split():
    lower = Polygon(((0, 0), (1, 0), (1, 1)))
    upper = Polygon(((0, 0), (1, 1), (0, 1)))
    assert validate_partition(Partition(2, (lower, upper))).ok


# ----------------------------------------------------------------- locate

def test_locate_half_open():
    assert locate(halves(), (HALF,)) == 1
    assert locate(halves(), (F(0),)) == 0


def test_locate_diagonal_band_origin():
    p = Partition(2, locator=DiagonalBandLocator(2))
    assert locate(p, (F(0), F(0))) == 1
    assert locate(p, (F(1, 2), F(1, 2))) == 2
    assert p.locate_many(np.array([[0.0, 0.0], [0.5, 0.5], [0.9, 0.9]])).tolist() == [1, 2, 10]


def test_locate_flip_example():
    p = flip_isolated().partition
    assert locate(p, (F(1, 4),)) == 1
    assert locate(p, (F(3, 4),)) == 2
    assert locate(p, (F(0),)) == 0


def test_locate_many_matches_exact(rng):
    p = vertical_split()
    x = rng.random((200, 2))
    x[:5, 0] = 0.5
    got = p.locate_many(x)
    want = [locate(p, tuple(F(c) for c in row)) for row in x]
    assert got.tolist() == want


def test_locate_many_edge_lifts():
    # points on x = 0 belong to the region owning the x = 1 side
    p = Partition(2, (box(0, 0, HALF, 1, include_edges=(True, True, False, False)),
                      box(HALF, 0, 1, 1, include_edges=(True, True, False, False))))
    assert p.locate_many(np.array([[0.0, 0.3]])).tolist() == [1]
    assert locate(p, (F(0), F(3, 10))) == 1


# --------------------------------------------------------------- boundary

def test_boundary_set_points():
    assert boundary_set(halves()).points == (F(0), HALF)
    assert boundary_set(flip_isolated().partition).points == (0, F(1, 4), HALF, F(3, 4))


def test_boundary_set_diagonal():
    lower = Polygon(((0, 0), (1, 0), (1, 1)))
    upper = Polygon(((0, 0), (1, 1), (0, 1)))
    g = boundary_set(Partition(2, (lower, upper)))
    segs = {tuple(sorted(s)) for s in g.square_segments()}
    square = {((0, 0), (1, 0)), ((1, 0), (1, 1)), ((0, 1), (1, 1)), ((0, 0), (0, 1))}
    assert square <= segs
    assert ((0, 0), (1, 1)) in segs
    assert len(segs) == 5


def test_pullback_points():
    g = pullback_boundary(BoundarySet(1, points=(F(0), HALF)), translation((F(1, 4),)))
    assert set(g.points) == {F(3, 4), F(1, 4)}
    assert pullback_boundary(BoundarySet(1, points=(F(0),)), flip(0, 1)).points == (0,)


def test_pullback_diagonal_exchange():
    diag = BoundarySet(2, segments=(((F(0), F(0)), (F(1), F(1))),))
    assert pullback_boundary(diag, exchange(0, 1, 2)).segments == diag.segments


def test_pullback_splits_at_seam_and_keeps_length():
    seg = BoundarySet(2, segments=(((F(1, 4), F(1, 8)), (F(3, 4), F(1, 8))),))
    moved = pullback_boundary(seg, translation((F(1, 2), F(0))))
    assert len(moved.segments) == 2
    assert moved.total_length() == pytest.approx(seg.total_length())


@settings(max_examples=40, deadline=None)
@given(st.fractions(0, 1, max_denominator=10).filter(lambda f: f < 1),
       st.fractions(0, 1, max_denominator=10).filter(lambda f: f < 1),
       st.sampled_from(["t", "f0", "f1", "x"]))
def test_pullback_preserves_length(a, b, kind):
    g = {"t": translation((a, b)), "f0": flip(0, 2), "f1": flip(1, 2), "x": exchange(0, 1, 2)}[kind]
    tri = Partition(2, (Polygon(((0, 0), (1, 0), (1, 1))), Polygon(((0, 0), (1, 1), (0, 1)))))
    gamma = boundary_set(tri)
    assert pullback_boundary(gamma, g).total_length() == pytest.approx(gamma.total_length())


# -------------------------------------------------------------- refinement

def test_refine_halves_by_quarter_turn():
    cl = semigroup_closure([translation((F(1, 4),))])
    gt, regions = refine_by_semigroup(halves(), cl)
    assert gt.points == (0, F(1, 4), HALF, F(3, 4))
    assert len(regions) == 4


def test_refine_trivial_partition():
    trivial = Partition.intervals([0])
    gt, regions = refine_by_semigroup(trivial, semigroup_closure([identity(1)]))
    assert gt.points == (0,)
    assert len(regions) == 1 and regions[0].measure == 1
    # pullbacks of the seam point by a rotation cut the circle into arcs
    gt, regions = refine_by_semigroup(trivial, semigroup_closure([translation((F(1, 3),))]))
    assert gt.points == (0, F(1, 3), F(2, 3))
    assert len(regions) == 3


def test_refine_vertical_split_2d():
    cl = semigroup_closure([translation((F(1, 4), F(0)))])
    gt, regions = refine_by_semigroup(vertical_split(), cl)
    assert len(regions) == 4
    xs = sorted({min(v[0] for v in r.vertices) for r in regions})
    assert xs == [0, F(1, 4), HALF, F(3, 4)]
    assert all(r.measure == F(1, 4) for r in regions)


def test_refine_rejects_unsaturated():
    cl = semigroup_closure([translation((F(1, 97),))], cap=5)
    with pytest.raises(ValueError):
        refine_by_semigroup(halves(), cl)


def test_refine_is_idempotent():
    cl = semigroup_closure([translation((F(1, 3), F(1, 4))), flip(0, 2)])
    _, regions = refine_by_semigroup(vertical_split(), cl)
    _, again = refine_by_semigroup(Partition(2, regions), cl)
    key = lambda rs: sorted(tuple(sorted(r.vertices)) for r in rs)
    assert key(again) == key(regions)
    assert sum(r.measure for r in regions) == 1


def test_refined_regions_share_itineraries(rng):
    part = vertical_split()
    maps = [translation((F(1, 3), F(1, 4))), flip(0, 2)]
    sys = PwiSystem(part, maps)
    cl = semigroup_closure(maps)
    _, regions = refine_by_semigroup(part, cl)
    steps = cl.size
    for r in regions:
        pts = [interior_sample(r)]
        # a second interior point: pull the centroid towards a vertex
        c, v = r.sample(), r.vertices[0]
        pts.append(tuple(F(3, 4) * a + F(1, 4) * b for a, b in zip(c, v)))
        its = []
        for x in pts:
            it = []
            for _ in range(steps):
                k = sys.locate(x)
                it.append(k)
                x = sys.apply(x)
            its.append(it)
        assert its[0] == its[1]


# ------------------------------------------------------------ measures etc

def test_region_measure_examples():
    assert region_measure(Interval(F(1, 4), HALF)) == F(1, 4)
    assert region_measure(Polygon(((0, 0), (1, 0), (0, 1)))) == HALF
    assert region_measure(box(0, 0, F(1, 3), F(1, 3))) == F(1, 9)


def test_interior_sample_examples():
    assert interior_sample(Interval(F(1, 4), HALF)).coords == (F(3, 8),)
    assert interior_sample(Polygon(((0, 0), (1, 0), (0, 1)))).coords == (F(1, 3), F(1, 3))
    assert interior_sample(box(0, 0, F(1, 4), 1)).coords == (F(1, 8), HALF)


def test_polygon_rejects_clockwise_and_degenerate():
    with pytest.raises(ValueError):
        Polygon(((0, 0), (0, 1), (1, 0)))
    with pytest.raises(ValueError):
        Polygon(((0, 0), (HALF, HALF), (1, 1)))


def test_region_json_round_trip():
    for r in (Interval(F(1, 4), HALF, False, True), box(0, 0, F(1, 3), F(2, 3))):
        assert region_from_json(r.to_json()) == r


@settings(max_examples=30, deadline=None)
@given(st.lists(st.fractions(0, 1, max_denominator=16).filter(lambda f: 0 < f < 1), max_size=6, unique=True))
def test_random_interval_partitions_sum_to_one(cuts):
    p = Partition.intervals(sorted(cuts))
    diag = validate_partition(p)
    assert diag.ok and diag.total == 1
