from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torus_pwi.torus import TorusPoint, reduce_mod1, reduce_mod1_array, torus_distance, torus_distance_array

unit = st.floats(min_value=0.0, max_value=1.0, exclude_max=True, allow_nan=False)
points2 = st.tuples(unit, unit)
metrics = st.sampled_from([1, 2, 3, math.inf])


def test_reduce_numeric():
    p = reduce_mod1([1.25, -0.5])
    assert p.coords == (0.25, 0.5)
    assert not p.exact


def test_reduce_zero():
    assert reduce_mod1([0.0, 0.0]).coords == (0.0, 0.0)


def test_reduce_exact():
    p = reduce_mod1([Fraction(7, 3), Fraction(-1, 4)])
    assert p.coords == (Fraction(1, 3), Fraction(3, 4))
    assert p.exact


def test_reduce_rejects_non_finite():
    with pytest.raises(ValueError):
        reduce_mod1([math.nan])
    with pytest.raises(ValueError):
        reduce_mod1([math.inf, 0.0])


def test_snap_near_one():
    x = np.array([[1 - 1e-14, -1e-14, 0.5]])
    assert reduce_mod1_array(x).tolist() == [[0.0, 0.0, 0.5]]
    # snapping can be switched off
    assert reduce_mod1_array(np.array([[1 - 2.0 ** -40]]), snap=0.0)[0, 0] == 1 - 2.0 ** -40


def test_distance_examples():
    assert torus_distance((0.9, 0.0), (0.1, 0.0), 2) == pytest.approx(0.2)
    assert torus_distance((0.0, 0.0), (0.5, 0.5), 2) == pytest.approx(math.sqrt(2) / 2)
    assert torus_distance((0.0, 0.0), (0.5, 0.5), math.inf) == pytest.approx(0.5)


def test_distance_dimension_mismatch():
    with pytest.raises(ValueError):
        torus_distance((0.1,), (0.1, 0.2))


@given(points2, points2, metrics)
def test_distance_symmetric(x, y, p):
    assert torus_distance(x, y, p) == pytest.approx(torus_distance(y, x, p), abs=1e-15)
    assert torus_distance(x, x, p) == 0


@given(points2, points2, points2, metrics)
def test_triangle_inequality(x, y, w, p):
    assert torus_distance(x, y, p) <= torus_distance(x, w, p) + torus_distance(w, y, p) + 1e-12


@settings(max_examples=200)
@given(points2, points2, metrics)
def test_offsets_beyond_one_never_win(x, y, p):
    best = min(np.linalg.norm(np.subtract(x, z) - np.asarray(y), ord=p)
               for z in itertools.product(range(-2, 3), repeat=2))
    assert torus_distance(x, y, p) == pytest.approx(best, abs=1e-14)


def test_distance_array_matches_scalar(rng):
    x, y = rng.random((50, 2)), rng.random((50, 2))
    for p in (1, 2, math.inf):
        arr = torus_distance_array(x, y, p)
        assert np.allclose(arr, [torus_distance(a, b, p) for a, b in zip(x, y)])


def test_point_invariants():
    with pytest.raises(ValueError):
        TorusPoint((Fraction(1, 2), 0.5), True)
    with pytest.raises(ValueError):
        TorusPoint((1.0,), False)
