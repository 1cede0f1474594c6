from __future__ import annotations

import math

import numpy as np
import pytest

from torus_pwi.rotation import (PHI0, PlaneIsometrySpec, build_rotation_system, clearance_and_disks, fixed_points,
                                hunt_periodic, line_fixed_point, solve_period_n)
from torus_pwi.torus import torus_distance

PI_E = math.pi / math.e


def spec(phi, b=(0.0, 0.0), j=1):
    return PlaneIsometrySpec(j, phi, b)


def coords(points):
    return sorted(tuple(round(float(c), 9) for c in p.coords) for p in points)


# ------------------------------------------------------------- the system

def test_zero_angle_single_identity_cell():
    sys = build_rotation_system(spec(0.0))
    assert list(sys.cells) == [(0, 0)]
    x = np.random.default_rng(0).random((50, 2))
    assert np.allclose(sys.step_many(x), x)


def test_half_turn_single_cell():
    sys = build_rotation_system(spec(math.pi))
    assert list(sys.cells) == [(1, 1)]
    assert sys.interior_lines() == []
    y = sys.step_many(np.array([[0.2, 0.7]]))[0]
    assert np.allclose(y, [0.8, 0.3])


def test_pi_over_e_partition():
    sys = build_rotation_system(spec(PI_E))
    assert 4 <= len(sys.cells) <= 6
    assert len(sys.partition_lines()) == 2
    total = sum(float(p.measure) for p in sys.cell_polygons())
    assert total == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("phi,b,j", [(0.3, (0.1, 0.9), 1), (2.5, (0.95, 0.97), -1), (PI_E, (0.5, 0.25), 1)])
def test_cells_agree_with_locator(phi, b, j, rng):
    sys = build_rotation_system(spec(phi, b, j))
    assert len(sys.cells) <= 16
    x = rng.random((400, 2))
    xi = sys.partition.locator.xi_many(x)
    for p, v in zip(x, xi):
        owners = [key for key, poly in sys.cells.items()
                  if _inside(poly, p)]
        assert tuple(int(c) for c in v) in owners
    # the map sends each point into the square
    y = sys.step_many(x)
    assert np.all((y >= 0) & (y < 1))


def _inside(poly, p, eps=1e-12):
    n = len(poly)
    for i in range(n):
        (x0, y0), (x1, y1) = poly[i], poly[(i + 1) % n]
        if (x1 - x0) * (p[1] - y0) - (y1 - y0) * (p[0] - x0) < -eps:
            return False
    return True


def test_spec_validation():
    with pytest.raises(ValueError):
        PlaneIsometrySpec(2, 0.1, (0, 0))
    s = PlaneIsometrySpec(1, -math.pi / 2, (1.25, -0.5))
    assert s.phi == pytest.approx(1.5 * math.pi) and s.b == (0.25, 0.5)


# ---------------------------------------------------------- fixed points

def test_origin_always_fixed(rng):
    for phi in rng.uniform(0.05, 2 * math.pi - 0.05, 20):
        pts = fixed_points(spec(phi))
        assert (0.0, 0.0) in coords(pts)


def test_half_turn_four_fixed_points():
    assert coords(fixed_points(spec(math.pi))) == [(0.0, 0.0), (0.0, 0.5), (0.5, 0.0), (0.5, 0.5)]


def test_minus_quarter_turn():
    assert (0.5, 0.5) in coords(fixed_points(spec(-math.pi / 2)))


def test_fixed_points_validate(rng):
    for _ in range(30):
        phi = rng.uniform(0.2, 2 * math.pi - 0.2)
        s = spec(phi, tuple(rng.random(2)), int(rng.choice([1, -1])))
        if abs(np.linalg.det(np.eye(2) - s.matrix)) < 1e-3:
            continue
        sys = build_rotation_system(s)
        for z in fixed_points(s, sys=sys):
            assert torus_distance(sys.apply(z), z) < 1e-12


def test_fixed_points_singular():
    assert fixed_points(spec(0.0)) == "continuum"
    assert fixed_points(spec(0.0, (0.3, 0.0))) == []


def test_half_turn_with_offset():
    assert (0.65, 0.85) in coords(fixed_points(spec(math.pi, (0.3, 0.7))))


# -------------------------------------------------------- line fixed point

def test_line_fixed_point_quarter_turn():
    z = line_fixed_point(-math.pi / 2)
    assert z.coords == pytest.approx((0.5, 0.5))


def test_line_fixed_point_band():
    assert line_fixed_point(0.1) is None
    assert line_fixed_point(PHI0 * 0.99) is None
    assert PHI0 == pytest.approx(0.9273, abs=1e-4)


def test_line_fixed_point_outside_band(rng):
    for phi in rng.uniform(PHI0 + 0.01, 2 * math.pi - PHI0 - 0.01, 20):
        z = line_fixed_point(phi)
        assert z is not None and 0.5 in z.coords
        assert z.coords[0] == 0.5 or phi > math.pi
        sys = build_rotation_system(spec(phi))
        assert torus_distance(sys.apply(z), z) < 1e-12


# ------------------------------------------------------- period equations

def test_solve_period_one_origin():
    c = solve_period_n(spec(PI_E), [(0, 0)])
    assert c is not None and np.allclose(c.z, 0) and c.period == 1


def test_solve_quarter_turn_orbit():
    s = spec(math.pi / 2)
    sys = build_rotation_system(s)
    pts, xis = sys.xi_sequence((0.1, 0.2), 4)
    assert np.allclose(pts[:5], [[0.1, 0.2], [0.8, 0.1], [0.9, 0.8], [0.2, 0.9], [0.1, 0.2]])
    c = solve_period_n(s, xis)
    assert c is not None and c.period == 4
    assert c.residual <= 1e-9
    # the recovered point lies on the same period-4 cell structure
    assert sys.xi_sequence(c.z, 4)[1] == xis


def test_solve_rejects_inconsistent_itinerary():
    # the listed corrections are not the map's own for this orbit
    assert solve_period_n(spec(math.pi / 2), [(1, 0), (1, 1), (0, 1), (0, 0)]) is None


def test_random_length_three_mostly_rejected():
    s = spec(PI_E)
    sys = build_rotation_system(s)
    vals = (-1, 0, 1, 2)
    tried = accepted = 0
    import itertools
    for xi in itertools.product(itertools.product(vals, vals), repeat=3):
        tried += 1
        c = solve_period_n(s, list(xi), sys=sys)
        if c is not None:
            accepted += 1
            assert sys.xi_sequence(c.z, len(xi))[1][:c.period] == list(c.xi)
    assert tried == 4096
    assert accepted / tried < 0.05


def test_candidates_reproduce_itinerary():
    s = spec(PI_E)
    sys = build_rotation_system(s)
    for c in hunt_periodic(s, 30, 60):
        _, xis = sys.xi_sequence(c.z, c.period)
        assert xis == [tuple(v) for v in c.xi]
        assert c.residual <= 1e-9


# ---------------------------------------------------------------- hunting

def test_hunt_pi_over_e():
    res = hunt_periodic(spec(PI_E), 30, 100)
    periods = [c.period for c in res]
    assert 1 in periods
    assert any(p > 1 for p in periods)
    zs = [c.z for c in res if c.period == 1]
    assert any(np.allclose(z, 0) for z in zs)


def test_hunt_quarter_turn_dense():
    res = hunt_periodic(spec(math.pi / 2), 12, 200)
    assert res.seed_success(4) >= 0.95


def test_hunt_half_turn_offset():
    res = hunt_periodic(spec(math.pi, (0.3, 0.7)), 4, 20)
    assert any(np.allclose(c.z, (0.65, 0.85)) for c in res)


def test_hunt_irrational_never_closes_bit_exact():
    res = hunt_periodic(spec(PI_E), 30, 60)
    sys = build_rotation_system(spec(PI_E))
    for c in res:
        if c.period > 1:
            pts, _ = sys.xi_sequence(c.z, c.period)
            assert not np.array_equal(pts[-1], pts[0]) or c.residual == 0.0


def test_hunt_deduplicates():
    res = hunt_periodic(spec(PI_E), 30, 100)
    for i, a in enumerate(res.candidates):
        for b in res.candidates[i + 1:]:
            if a.period == b.period:
                d = min(torus_distance(a.z, p) for p in b.orbit)
                assert d >= 1e-8


# ------------------------------------------------------------------ disks

def test_disks_nontrivial_orbit():
    s = spec(PI_E)
    sys = build_rotation_system(s)
    for c in hunt_periodic(s, 30, 100):
        rep = clearance_and_disks(sys, c)
        if c.clearance > 0:
            assert not rep.skipped and rep.passed and rep.max_error < 1e-10
        else:
            assert rep.skipped and not rep.passed


def test_disks_skip_when_radius_too_large():
    s = spec(PI_E)
    sys = build_rotation_system(s)
    c = next(c for c in hunt_periodic(s, 30, 100) if c.clearance > 0)
    rep = clearance_and_disks(sys, c, r=2 * c.clearance)
    assert rep.skipped and not rep.passed


def test_disks_quarter_turn_orbit():
    s = spec(math.pi / 2)
    sys = build_rotation_system(s)
    _, xis = sys.xi_sequence((0.1, 0.2), 4)
    c = solve_period_n(s, xis)
    rep = clearance_and_disks(sys, c)
    assert rep.clearance > 0 and rep.passed
