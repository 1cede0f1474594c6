from __future__ import annotations

import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torus_pwi import gallery, rotation
from torus_pwi.dynamics import (ESCAPED, PERIODIC, GridMeasure, focusing_estimate, isolation_probe, iterate_many,
                                orbit, push_forward, return_time_profile)
from torus_pwi.isometry import identity, translation
from torus_pwi.partition import Interval, Partition
from torus_pwi.system import PwiSystem
from torus_pwi.torus import torus_distance


def rotation1(alpha):
    return PwiSystem(Partition.intervals([0]), [translation((alpha,))])


# ------------------------------------------------------------------ orbits

def test_quarter_rotation_orbit_numeric():
    rec = orbit(rotation1(F(1, 4)), [0.1], 8)
    assert rec.status == PERIODIC and rec.period == 4 and rec.preperiod == 0
    assert not rec.exact


def test_flip_example_two_periodic():
    rec = orbit(gallery.flip_isolated(), [F(1, 4)], 6)
    assert rec.exact
    assert rec.status == PERIODIC and rec.period == 2 and rec.preperiod == 0
    assert {p.coords[0] for p in rec.points} == {F(1, 4), F(3, 4)}


def test_flip_example_escape_in_three_steps():
    rec = orbit(gallery.flip_isolated(), [F(3, 10)], 10)
    xs = [p.coords[0] for p in rec.points[:5]]
    assert xs == [F(3, 10), F(7, 10), F(1, 5), F(19, 20), F(19, 20)]
    assert rec.status == ESCAPED and rec.preperiod == 3


def test_orbit_record_invariants(rng):
    sys = gallery.build("rot-pi-over-e")
    rec = orbit(sys, rng.random(2), 50)
    for k, idx in enumerate(rec.itinerary):
        assert idx == sys.locate(rec.points[k])
        nxt = sys.apply(rec.points[k])
        assert torus_distance(nxt, rec.points[k + 1]) < 1e-12
    rows = list(rec.to_rows())
    assert len(rows) == 51 and rows[0][0] == 0


def test_orbit_rejects_negative_steps():
    with pytest.raises(ValueError):
        orbit(rotation1(F(1, 4)), [0.1], -1)


def test_iterate_many_matches_orbit(rng):
    sys = gallery.itm_focusing()
    x = rng.random((20, 1))
    y, its = iterate_many(sys, x, 7, record_index=True)
    for i in range(20):
        rec = orbit(sys, [float(x[i, 0])], 7)
        assert rec.points[-1].coords[0] == pytest.approx(y[i, 0], abs=1e-12)
        assert rec.itinerary == its[:, i].tolist()


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True),
       st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
def test_local_isometry(a, b, c, d):
    # inside one cell the map is a single rigid motion of the square
    sys = gallery.build("rot-pi-over-e")
    x = np.array([[a, b], [c, d]])
    k = sys.partition.locate_many(x)
    if k[0] != k[1]:
        return
    t = sys.step_many(x)
    assert np.linalg.norm(t[0] - t[1]) == pytest.approx(np.linalg.norm(x[0] - x[1]), abs=1e-12)


# ----------------------------------------------------------- push-forward

def test_push_identity_unchanged(rng):
    sys = PwiSystem(Partition.intervals([0, 0.5]), [identity(1, False)] * 2)
    gm = GridMeasure((40,), rng.integers(0, 9, 40))
    assert push_forward(sys, gm, 3) == gm


def test_push_half_translation_rolls():
    gm = GridMeasure((10,), np.arange(10))
    out = push_forward(rotation1(F(1, 2)), gm)
    assert out.counts.tolist() == np.roll(np.arange(10), 5).tolist()


def test_push_conserves_mass(rng):
    sys = gallery.build("rot-pi-over-e")
    gm = GridMeasure((32, 32), rng.integers(0, 5, (32, 32)))
    out = push_forward(sys, gm, 5)
    assert out.total == gm.total
    assert out.counts.dtype == np.int64


def test_push_exact_matches_numeric_for_rational_rotation():
    sys = rotation1(F(3, 8))
    gm = GridMeasure.uniform((16,))
    gm.counts[:4] = 7
    assert push_forward(sys, gm, 5, exact=True) == push_forward(sys, gm, 5)


def test_strip_escape_concentrates():
    sys = gallery.strip_escape()
    out = push_forward(sys, GridMeasure.uniform((1024, 1)), 30, exact=True)
    left = out.mass_where(lambda c: c[:, 0] < 1 - 2.0 ** -10)
    assert left < 1e-3


def test_push_dimension_check():
    with pytest.raises(ValueError):
        push_forward(rotation1(F(1, 2)), GridMeasure.uniform((4, 4)))


def test_grid_measure_rejects_negative():
    with pytest.raises(ValueError):
        GridMeasure((2,), [1, -1])


# ---------------------------------------------------------------- focusing

def test_focusing_identity_everything_persists():
    sys = PwiSystem(Partition.intervals([0]), [identity(1, False)])
    fe = focusing_estimate(sys, 500, horizon=20)
    assert fe.estimated_measure == 1.0
    assert fe.intervals() == [(0.0, 1.0)]


def test_focusing_itm_example():
    fe = focusing_estimate(gallery.itm_focusing(4, F(1, 100)), 10_000)
    assert fe.estimated_measure == pytest.approx(0.02, abs=2e-4)
    (lo, hi), = fe.intervals()
    assert lo == pytest.approx(0.24, abs=2e-4) and hi == pytest.approx(0.26, abs=2e-4)


def test_focusing_telescoping():
    fe = focusing_estimate(gallery.itm_telescoping(4), 10_000)
    assert fe.estimated_measure == pytest.approx(0.25, abs=2e-4)


def test_focusing_requires_window():
    with pytest.raises(ValueError):
        focusing_estimate(rotation1(F(1, 2)), 10, burn_in=5, horizon=5)


# --------------------------------------------------------------------- Kac

def test_kac_third_rotation():
    prof = return_time_profile(rotation1(F(1, 3)), Interval(0, F(1, 3)), 1 / 3, samples=2000)
    assert prof.histogram == {3: 2000}
    assert prof.bound == 3 and prof.fraction_within == 1.0 and not prof.flagged


def test_kac_golden():
    prof = return_time_profile(rotation1(0.6180339887), Interval(0, F(1, 5)), 0.2, samples=5000)
    assert prof.bound == 5
    assert prof.fraction_within > 0


def test_kac_whole_space():
    prof = return_time_profile(rotation1(0.3), Interval(0, 1), 1.0, samples=500)
    assert prof.histogram == {1: 500} and prof.fraction_within == 1.0


def test_kac_flags_non_returning_samples():
    # points of [0, 1/4) of the flip example never come back once absorbed in (3/4, 1)
    prof = return_time_profile(gallery.flip_isolated(), Interval(F(1, 4) + F(1, 100), F(1, 2)), 0.24,
                               samples=500, horizon=50)
    assert prof.flagged and prof.not_returned == 500


def test_kac_rejects_bad_mu():
    with pytest.raises(ValueError):
        return_time_profile(rotation1(0.3), Interval(0, 1), 0.0)


def test_kac_deterministic_given_seed():
    a = return_time_profile(rotation1(0.37), Interval(0, F(1, 10)), 0.1, samples=300, seed=7)
    b = return_time_profile(rotation1(0.37), Interval(0, F(1, 10)), 0.1, samples=300, seed=7)
    assert a == b


# --------------------------------------------------------------- isolation

def test_isolation_inside_clearance_is_rigid():
    spec = rotation.PlaneIsometrySpec(1, math.pi / math.e, (0.0, 0.0))
    hunt = rotation.hunt_periodic(spec, 30, 100)
    cand = next(c for c in hunt.candidates if c.clearance and c.clearance > 0)
    sys = rotation.build_rotation_system(spec)
    inside, outside = isolation_probe(sys, cand.z, [cand.clearance / 2, cand.clearance * 2], n=200)
    assert inside.inside_clearance and inside.itineraries_agree and inside.constant
    assert not outside.inside_clearance


def test_isolation_origin_of_rotation_lies_on_gamma():
    # the origin is a corner of the fundamental square, so its clearance is zero
    sys = gallery.build("rot-pi-over-e")
    res, = isolation_probe(sys, (0.0, 0.0), [0.01], n=200)
    assert not res.inside_clearance
    assert res.tail_min_distance > 0


def test_isolation_quarter_turn_corner():
    sys = gallery.build("rotation:phi=pi/4")
    res, = isolation_probe(sys, (0.0, 0.0), [0.02], n=400)
    assert res.tail_min_distance > 0.01


def test_isolation_flip_example():
    sys = gallery.flip_isolated()
    for r in isolation_probe(sys, (0.25,), [0.01, 0.1, 0.2], n=100):
        assert r.tail_min_distance > 0
        assert not r.itineraries_agree
