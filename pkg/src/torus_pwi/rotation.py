"""Torus restrictions of plane isometries T x = j R(phi) x + b (mod 1).

The map is a PWI whose cells are the pieces of the unit square on which the
integer correction xi(x) = -floor(j R x + b) is constant.  Only numeric
arithmetic is possible here (the matrix entries are irrational), so every
candidate orbit is re-simulated before it is accepted.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .partition import Locator, Partition, Polygon, segment_distance_many
from .system import AffineMap, PwiSystem
from .torus import TorusPoint, reduce_mod1, reduce_mod1_array

logger = logging.getLogger(__name__)

__all__ = [
    "DiskReport",
    "PeriodicOrbitCandidate",
    "PlaneIsometrySpec",
    "RotationSystem",
    "build_rotation_system",
    "clearance_and_disks",
    "fixed_points",
    "hunt_periodic",
    "line_fixed_point",
    "rotation_matrix",
    "solve_period_n",
]

XI_RANGE = range(-2, 3)
PHI0 = 2 * math.atan(0.5)


def rotation_matrix(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class PlaneIsometrySpec:
    j: int = 1
    phi: float = 0.0
    b: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.j not in (1, -1):
            raise ValueError("j must be +1 or -1")
        object.__setattr__(self, "phi", float(self.phi) % (2 * math.pi))
        object.__setattr__(self, "b", tuple(float(c) % 1.0 for c in self.b))

    @property
    def matrix(self) -> np.ndarray:
        return self.j * rotation_matrix(self.phi)

    @property
    def offset(self) -> np.ndarray:
        return np.array(self.b)

    def to_json(self) -> dict:
        return {"j": self.j, "phi": self.phi, "b": list(self.b)}


def _xi_index(xi: np.ndarray) -> np.ndarray:
    return (xi[..., 0] + 2) * 5 + (xi[..., 1] + 2)


def _index_xi(k: int) -> tuple:
    return (k // 5 - 2, k % 5 - 2)


class _XiLocator(Locator):
    name = "plane-isometry"
    dim = 2

    def __init__(self, spec: PlaneIsometrySpec):
        super().__init__(**spec.to_json())
        self.spec = spec

    def xi_many(self, x: np.ndarray) -> np.ndarray:
        y = x @ self.spec.matrix.T + self.spec.offset
        return np.rint(reduce_mod1_array(y) - y).astype(np.int64)

    def index_many(self, x: np.ndarray) -> np.ndarray:
        return _xi_index(self.xi_many(np.asarray(x, dtype=float)))


def _clip(poly, a, c, keep_le: bool):
    # keep the part with a.x <= c (or >= c)
    sgn = 1.0 if keep_le else -1.0
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        fp = sgn * (a @ p - c)
        fq = sgn * (a @ q - c)
        if fp <= 0:
            out.append(p)
        if (fp < 0 < fq) or (fq < 0 < fp):
            t = fp / (fp - fq)
            out.append(p + t * (q - p))
    return out


def _area(poly) -> float:
    return 0.5 * sum(poly[i][0] * poly[(i + 1) % len(poly)][1] - poly[(i + 1) % len(poly)][0] * poly[i][1]
                     for i in range(len(poly)))


class RotationSystem(PwiSystem):
    """A :class:`PwiSystem` built from a plane isometry, with its cell polygons."""

    def __init__(self, spec: PlaneIsometrySpec, name: str | None = None):
        loc = _XiLocator(spec)
        super().__init__(Partition(2, locator=loc), self._rule, p=2, name=name)
        self.spec = spec
        self.cells = self._build_cells()

    def _rule(self, k: int) -> AffineMap:
        xi = np.array(_index_xi(k), dtype=float)
        return AffineMap(self.spec.matrix, self.spec.offset + xi)

    def _build_cells(self) -> dict:
        m, b = self.spec.matrix, self.spec.offset
        square = [np.array(v, dtype=float) for v in ((0, 0), (1, 0), (1, 1), (0, 1))]
        cells = {}
        for m1 in XI_RANGE:
            for m2 in XI_RANGE:
                poly = square
                for i, mi in ((0, m1), (1, m2)):
                    poly = _clip(poly, m[i], mi - b[i], keep_le=False) if poly else poly
                    poly = _clip(poly, m[i], mi + 1 - b[i], keep_le=True) if poly else poly
                if len(poly) >= 3 and _area(poly) > 1e-12:
                    xi = (-m1, -m2)
                    cells[xi] = [tuple(p) for p in poly]
        return cells

    def cell_polygons(self) -> list:
        return [Polygon(tuple(_dedupe(v))) for v in self.cells.values()]

    def boundary_segments(self) -> list:
        """Cell edges, deduplicated (square edges included)."""
        segs = set()
        for poly in self.cells.values():
            for i in range(len(poly)):
                a, b = poly[i], poly[(i + 1) % len(poly)]
                if math.dist(a, b) > 1e-12:
                    key = tuple(sorted((tuple(round(c, 12) for c in a), tuple(round(c, 12) for c in b))))
                    segs.add(key)
        return sorted(segs)

    def interior_lines(self) -> list:
        """Boundary segments off the square's edges (the lines (jRx + b)_i in Z)."""
        def on_edge(s):
            (x0, y0), (x1, y1) = s
            return any(abs(u - c) < 1e-12 and abs(v - c) < 1e-12
                       for c in (0.0, 1.0) for u, v in ((x0, x1), (y0, y1)))
        return [s for s in self.boundary_segments() if not on_edge(s)]

    def partition_lines(self) -> list:
        """Interior boundary pieces merged along common lines (one segment per line)."""
        groups: dict = {}
        for a, b in self.interior_lines():
            d = np.subtract(b, a)
            d = d / np.linalg.norm(d)
            if d[0] < -1e-12 or (abs(d[0]) <= 1e-12 and d[1] < 0):
                d = -d
            nrm = np.array([-d[1], d[0]])
            key = (round(d[0], 9), round(d[1], 9), round(float(nrm @ np.asarray(a)), 9))
            groups.setdefault(key, []).extend([np.asarray(a), np.asarray(b)])
        out = []
        for (dx, dy, _), pts in groups.items():
            t = [p @ (dx, dy) for p in pts]
            out.append((tuple(pts[int(np.argmin(t))]), tuple(pts[int(np.argmax(t))])))
        return sorted(out)

    def boundary_distance_many(self, x: np.ndarray) -> np.ndarray:
        if "_segs" not in self._cache:
            self._cache["_segs"] = self.boundary_segments()
        return segment_distance_many(np.asarray(x, dtype=float).reshape(-1, 2), self._cache["_segs"])

    def xi_sequence(self, z, n: int):
        """Points and integer corrections of the first n steps from z."""
        x = np.asarray(z, dtype=float).reshape(1, 2)
        pts = [x[0]]
        xis = []
        for _ in range(n):
            xi = self.partition.locator.xi_many(x)[0]
            xis.append((int(xi[0]), int(xi[1])))
            x = self.step_many(x)
            pts.append(x[0])
        return np.array(pts), xis

    def to_json(self) -> dict:
        return {"dim": 2, "p": 2, "mode": "numeric", "rotation": self.spec.to_json(),
                "name": self.name}


def _dedupe(vs):
    out = []
    for v in vs:
        if not out or math.dist(out[-1], v) > 1e-12:
            out.append(v)
    if len(out) > 1 and math.dist(out[0], out[-1]) <= 1e-12:
        out.pop()
    return out


def build_rotation_system(spec: PlaneIsometrySpec, name: str | None = None) -> RotationSystem:
    return RotationSystem(spec, name)


# ------------------------------------------------------------ fixed points

def _rho2(x, y) -> float:
    d = np.abs(np.asarray(x) - np.asarray(y))
    d = np.minimum(d, 1.0 - d)
    return float(np.sqrt((d * d).sum()))


def _validate_fixed(sys: RotationSystem, z, tol: float) -> bool:
    return _rho2(sys.step_many(np.asarray(z).reshape(1, 2))[0], z) < tol


def fixed_points(spec: PlaneIsometrySpec, tol: float = 1e-12, sys: RotationSystem | None = None):
    """Solutions of (I - jR) z = b + k, k in {-2..2}^2, that T really fixes.

    Returns a list of :class:`TorusPoint`, or the string ``"continuum"`` when
    I - jR is singular and every point of a line (or plane) is fixed, or an
    empty list when the singular system has no solution.
    """
    sys = sys or build_rotation_system(spec)
    a = np.eye(2) - spec.matrix
    b = spec.offset
    if abs(np.linalg.det(a)) < 1e-12:
        u, s, vt = np.linalg.svd(a)
        for k1 in XI_RANGE:
            for k2 in XI_RANGE:
                rhs = b + (k1, k2)
                z = np.linalg.lstsq(a, rhs, rcond=None)[0]
                if np.allclose(a @ z, rhs, atol=1e-12):
                    logger.info("singular I - jR: a continuum of fixed points")
                    return "continuum"
        return []
    found: list = []
    for k1 in XI_RANGE:
        for k2 in XI_RANGE:
            z = reduce_mod1_array(np.linalg.solve(a, b + (k1, k2))[None, :])[0]
            z = np.where(np.abs(z) < 1e-12, 0.0, z)
            if any(_rho2(z, w) < 1e-9 for w in found):
                continue
            if _validate_fixed(sys, z, tol):
                found.append(z)
    found.sort(key=lambda z: (z[0], z[1]))
    return [reduce_mod1(z) for z in found]


def line_fixed_point(phi: float, tol: float = 1e-12):
    """Nontrivial fixed point of the pure rotation mod 1 on a mid-line of the square.

    Outside the band |phi| <= phi_0 with tan(phi_0 / 2) = 1/2.  For phi in
    (phi_0, pi] the point sits on x_1 = 1/2 (R moves (1/2, x_2) to
    (-1/2, x_2)); on the other side of the band it is the mirror image on
    x_2 = 1/2.  ``None`` inside the band.
    """
    phi = math.remainder(phi, 2 * math.pi)
    if abs(phi) <= PHI0:
        return None
    c, s = math.cos(phi), math.sin(phi)
    sys = build_rotation_system(PlaneIsometrySpec(1, phi, (0.0, 0.0)))
    for axis in (0, 1):
        for k in XI_RANGE:
            # free coordinate t solves the equation of the other axis
            t = ((s / 2 if axis == 0 else -s / 2) + k) / (1 - c)
            if not 0 <= t < 1:
                continue
            z = np.array([0.5, t]) if axis == 0 else np.array([t, 0.5])
            if _validate_fixed(sys, z, tol):
                return reduce_mod1(z)
    return None


# ----------------------------------------------------------- periodic orbits

@dataclass
class PeriodicOrbitCandidate:
    z: np.ndarray
    period: int
    xi: list
    residual: float
    orbit: np.ndarray = field(repr=False, default=None)
    clearance: float | None = None

    @property
    def point(self) -> TorusPoint:
        return reduce_mod1(self.z)

    def to_json(self) -> dict:
        return {"z": [float(c) for c in self.z], "period": self.period,
                "xi": [list(v) for v in self.xi], "residual": self.residual,
                "clearance": self.clearance}


def _period_rhs(spec: PlaneIsometrySpec, xi: Sequence) -> tuple:
    a = spec.matrix
    n = len(xi)
    an = np.linalg.matrix_power(a, n)
    rhs = np.zeros(2)
    for k, v in enumerate(xi, start=1):
        rhs += np.linalg.matrix_power(a, n - k) @ (spec.offset + np.asarray(v, dtype=float))
    return np.eye(2) - an, rhs


def _run_many(sys: RotationSystem, z: np.ndarray, n: int):
    """Vectorised n-step run: points (n+1, m, 2) and corrections (n, m, 2)."""
    loc = sys.partition.locator
    pts = np.empty((n + 1,) + z.shape)
    xis = np.empty((n,) + z.shape, dtype=np.int64)
    pts[0] = z
    for k in range(n):
        xis[k] = loc.xi_many(pts[k])
        pts[k + 1] = sys.step_many(pts[k])
    return pts, xis


def _dist_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = np.abs(a - b)
    d = np.minimum(d, 1.0 - d)
    return np.sqrt((d * d).sum(axis=-1))


def _match_many(sys: RotationSystem, z: np.ndarray, xi, tol: float) -> np.ndarray:
    """Which rows of z reproduce the corrections xi and close within tol."""
    pts, xis = _run_many(sys, z, len(xi))
    ok = np.all(xis == np.asarray(xi)[:, None, :], axis=(0, 2))
    ok &= _dist_rows(pts[-1], pts[0]) <= tol
    ok &= np.all((z >= 0) & (z < 1), axis=1)
    return ok


def _check(sys: RotationSystem, z, xi, tol: float):
    z = np.asarray(z, dtype=float)
    if not (np.all(z >= 0) and np.all(z < 1)):
        return None
    pts, xis = _run_many(sys, z[None, :], len(xi))
    seen = [tuple(int(c) for c in v[0]) for v in xis]
    if seen != [tuple(v) for v in xi]:
        return None
    res = float(_dist_rows(pts[-1, 0], pts[0, 0]))
    if res > tol:
        return None
    n = len(xi)
    # report the primitive period
    for k in range(1, n):
        if n % k == 0 and _dist_rows(pts[k, 0], pts[0, 0]) <= tol:
            n = k
            res = float(_dist_rows(pts[k, 0], pts[0, 0]))
            break
    return PeriodicOrbitCandidate(z, n, seen[:n], res, pts[:n, 0].copy())


def _primitive_many(sys: RotationSystem, z: np.ndarray, n: int, tol: float) -> np.ndarray:
    pts, _ = _run_many(sys, z, n)
    ok = np.ones(len(z), dtype=bool)
    for k in range(1, n):
        if n % k == 0:
            ok &= _dist_rows(pts[k], pts[0]) > tol
    return ok


def solve_period_n(spec: PlaneIsometrySpec, xi: Sequence, tol: float = 1e-9,
                   sys: RotationSystem | None = None, grid: int = 1000):
    """Periodic point with prescribed corrections xi_1..xi_n, or None.

    Nonsingular case: z = (I - A^n)^{-1} sum A^{n-k}(b + xi_k).  Singular
    case: least-squares particular solution plus a scan of ``grid`` points
    over the null space; among the points that reproduce xi, the one
    deepest inside the matching set is returned, preferring points whose
    primitive period is n.
    """
    sys = sys or build_rotation_system(spec)
    xi = [tuple(int(c) for c in v) for v in xi]
    if not xi:
        raise ValueError("empty itinerary")
    m, rhs = _period_rhs(spec, xi)
    u, s, vt = np.linalg.svd(m)
    null = vt[s < 1e-9]
    if len(null) == 0:
        z = np.linalg.solve(m, rhs)
        z = np.where(np.abs(z) < 1e-13, 0.0, z)
        return _check(sys, z, xi, tol)
    zp = np.linalg.lstsq(m, rhs, rcond=None)[0]
    if np.linalg.norm(m @ zp - rhs) > 1e-9:
        return None
    if len(null) == 1:
        ts = np.linspace(-1.5, 1.5, grid)
        cand = zp[None, :] + ts[:, None] * null[0][None, :]
    else:
        k = int(math.ceil(math.sqrt(grid)))
        g = (np.arange(k) + 0.5) / k
        cand = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    cand = cand[np.all((cand >= 0) & (cand < 1), axis=1)]
    if not len(cand):
        return None
    ok = _match_many(sys, cand, xi, tol)
    if not ok.any():
        return None
    hits, misses = cand[ok], cand[~ok]
    prim = _primitive_many(sys, hits, len(xi), tol)
    pool = hits[prim] if prim.any() else hits
    depth = np.minimum(pool, 1 - pool).min(axis=1)
    if len(misses):
        depth = np.minimum(depth, [np.min(np.linalg.norm(misses - h, axis=1)) for h in pool])
    return _check(sys, pool[int(np.argmax(depth))], xi, tol)


@dataclass
class HuntResult:
    candidates: list
    seed_periods: list

    def __iter__(self):
        return iter(self.candidates)

    def __len__(self):
        return len(self.candidates)

    def seed_success(self, period: int | None = None) -> float:
        ok = [p is not None and (period is None or p == period) for p in self.seed_periods]
        return sum(ok) / len(ok) if ok else 0.0


def hunt_periodic(spec: PlaneIsometrySpec, n_max: int = 50, seeds=200, tol: float = 1e-9,
                  return_tol: float = 0.05, rng_seed: int = 0) -> HuntResult:
    """Search periodic orbits from random seeds.

    Fixed points are solved for directly.  Each seed is simulated for ``n_max`` steps.  Every n with
    rho_2(T^n x, x) < ``return_tol`` proposes the observed corrections
    xi_1..xi_n to :func:`solve_period_n`; the first validated solution is
    kept.  Orbits closer than 10 * tol to a known orbit are merged.
    """
    sys = build_rotation_system(spec)
    if isinstance(seeds, int):
        pts = np.random.default_rng(rng_seed).random((seeds, 2))
    else:
        pts = np.asarray(seeds, dtype=float).reshape(-1, 2)
    found: list = []
    for k1 in XI_RANGE:
        for k2 in XI_RANGE:
            hit = solve_period_n(spec, [(k1, k2)], tol, sys)
            if hit is not None and not any(_same_orbit(hit, c, 10 * tol) for c in found):
                hit.clearance = float(np.min(sys.boundary_distance_many(hit.orbit)))
                found.append(hit)
    per_seed: list = []
    for x0 in pts:
        traj, xis = sys.xi_sequence(x0, n_max)
        d = np.abs(traj[1:] - x0)
        d = np.sqrt((np.minimum(d, 1 - d) ** 2).sum(axis=1))
        hit = None
        for n in np.nonzero(d < return_tol)[0] + 1:
            cand = solve_period_n(spec, xis[:n], tol, sys)
            if cand is not None:
                hit = cand
                break
        per_seed.append(hit.period if hit else None)
        if hit is None:
            continue
        if any(_same_orbit(hit, c, 10 * tol) for c in found):
            continue
        hit.clearance = float(np.min(sys.boundary_distance_many(hit.orbit)))
        found.append(hit)
    if not found:
        logger.info("hunt found no periodic orbit (n_max=%d, %d seeds)", n_max, len(pts))
    found.sort(key=lambda c: (c.period, -c.clearance))
    return HuntResult(found, per_seed)


def _same_orbit(a: PeriodicOrbitCandidate, b: PeriodicOrbitCandidate, radius: float) -> bool:
    if a.period != b.period:
        return False
    d = np.abs(b.orbit - a.z)
    d = np.sqrt((np.minimum(d, 1 - d) ** 2).sum(axis=1))
    return bool(d.min() < radius)


@dataclass
class DiskReport:
    clearance: float
    radius: float
    skipped: bool
    max_error: float
    passed: bool
    directions: int


def clearance_and_disks(sys: RotationSystem, cand: PeriodicOrbitCandidate, r: float | None = None,
                        directions: int = 64) -> DiskReport:
    """Clearance R of the orbit and a check that circles S_r(T^k z) map rigidly.

    ``r`` defaults to R/2.  The check compares, for sampled points s on the
    circle around each orbit point, rho_2(T s, T z) with r and the distances
    between neighbouring samples before and after one step.
    """
    orb = cand.orbit if cand.orbit is not None else sys.xi_sequence(cand.z, cand.period)[0][:-1]
    R = float(np.min(sys.boundary_distance_many(orb)))
    if r is None:
        r = R / 2
    if not 0 < r < R:
        return DiskReport(R, r, True, math.nan, False, directions)
    th = 2 * np.pi * np.arange(directions) / directions
    u = np.stack([np.cos(th), np.sin(th)], axis=1)
    err = 0.0
    for k in range(len(orb)):
        z = orb[k]
        s = reduce_mod1_array(z + r * u)
        ts = sys.step_many(s)
        tz = sys.step_many(z[None, :])[0]
        err = max(err, max(abs(_rho2(p, tz) - r) for p in ts))
        before = [_rho2(s[i], s[(i + 1) % directions]) for i in range(directions)]
        after = [_rho2(ts[i], ts[(i + 1) % directions]) for i in range(directions)]
        err = max(err, max(abs(a - b) for a, b in zip(before, after)))
    return DiskReport(R, r, False, err, err < 1e-10, directions)
