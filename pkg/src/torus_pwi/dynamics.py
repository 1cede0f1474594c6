"""Floating-point orbit machinery.

Orbits with periodicity detection, push-forward of grid measures, focusing
estimates, first-return statistics and isolation probes around an orbit.
All sampling goes through ``numpy.random.default_rng(seed)``.
"""
from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .isometry import TorusIsometry
from .system import PwiSystem
from .torus import TorusPoint, reduce_mod1, reduce_mod1_array, torus_distance, torus_distance_array

logger = logging.getLogger(__name__)

__all__ = [
    "FocusingEstimate",
    "GridMeasure",
    "OrbitRecord",
    "ProbeResult",
    "ReturnProfile",
    "focusing_estimate",
    "isolation_probe",
    "iterate_many",
    "orbit",
    "push_forward",
    "return_time_profile",
    "sample_regions",
]

OPEN = "open"
PERIODIC = "eventually-periodic"
ESCAPED = "escaped-to-fixed-region"


# ------------------------------------------------------------------- orbits

@dataclass
class OrbitRecord:
    points: list
    itinerary: list
    status: str = OPEN
    preperiod: int | None = None
    period: int | None = None

    @property
    def exact(self) -> bool:
        return bool(self.points) and self.points[0].exact

    def as_array(self) -> np.ndarray:
        return np.array([p.as_array() for p in self.points])

    def to_rows(self):
        for k, p in enumerate(self.points):
            idx = self.itinerary[k] if k < len(self.itinerary) else ""
            yield [k, *p.coords, idx]


def orbit(sys: PwiSystem, x0, n: int, period_tol: float = 1e-9) -> OrbitRecord:
    """Iterate T n times from x0, then look for the first return.

    Exact systems started at exact points are iterated in rational
    arithmetic and returns are detected by equality.  Numeric returns need
    rho_2 distance below ``period_tol`` and an itinerary window of at least
    one period that repeats (when the orbit is long enough to show it).
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    x = x0 if isinstance(x0, TorusPoint) else reduce_mod1(x0)
    exact = x.exact and sys.exact
    if not exact and x.exact:
        x = reduce_mod1(x.as_array())
    points = [x]
    itinerary = []
    for _ in range(n):
        k = sys.locate(x)
        itinerary.append(k)
        x = sys.apply(x)
        points.append(x)
    rec = OrbitRecord(points, itinerary)
    _detect_period(rec, exact, period_tol)
    if rec.status == PERIODIC and rec.period == 1:
        g = sys.local_map(rec.itinerary[rec.preperiod]) if rec.preperiod < len(itinerary) else None
        if isinstance(g, TorusIsometry) and g.is_identity():
            rec.status = ESCAPED
    return rec


def _detect_period(rec: OrbitRecord, exact: bool, tol: float) -> None:
    pts = rec.points
    it = rec.itinerary
    if exact:
        seen = {}
        for k, p in enumerate(pts):
            if p in seen:
                rec.status, rec.preperiod, rec.period = PERIODIC, seen[p], k - seen[p]
                return
            seen[p] = k
        return
    arr = np.array([p.as_array() for p in pts])
    for k in range(1, len(arr)):
        d = torus_distance_array(arr[:k], arr[k])
        for j in np.nonzero(d < tol)[0]:
            per = k - int(j)
            w = min(per, len(it) - k)
            if w > 0 and it[j:j + w] != it[k:k + w]:
                continue
            rec.status, rec.preperiod, rec.period = PERIODIC, int(j), per
            return


def iterate_many(sys: PwiSystem, x: np.ndarray, n: int, record_index: bool = False):
    """Vectorised n-fold iteration; optionally the (n, m) itinerary array."""
    x = np.asarray(x, dtype=float).reshape(-1, sys.dim)
    its = np.empty((n, len(x)), dtype=np.int64) if record_index else None
    for k in range(n):
        x, idx = sys.step_many(x, return_index=True)
        if record_index:
            its[k] = idx
    return (x, its) if record_index else x


# ------------------------------------------------------------ grid measures

@dataclass
class GridMeasure:
    """Integer mass counts on a uniform grid; ``mass`` is counts / total.

    Counts are moved, never rescaled, so total mass is conserved exactly.
    """

    resolution: tuple
    counts: np.ndarray

    def __post_init__(self):
        self.resolution = tuple(int(r) for r in self.resolution)
        self.counts = np.asarray(self.counts, dtype=np.int64).reshape(self.resolution)
        if (self.counts < 0).any():
            raise ValueError("negative mass")

    @classmethod
    def uniform(cls, resolution, per_cell: int = 1) -> "GridMeasure":
        if isinstance(resolution, int):
            resolution = (resolution,)
        return cls(tuple(resolution), np.full(tuple(resolution), per_cell, dtype=np.int64))

    @property
    def dim(self) -> int:
        return len(self.resolution)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def mass(self) -> np.ndarray:
        return self.counts / self.total

    def centers(self) -> np.ndarray:
        axes = [(np.arange(r) + 0.5) / r for r in self.resolution]
        grid = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=1)

    def cell_of(self, x: np.ndarray) -> np.ndarray:
        res = np.array(self.resolution)
        ij = np.floor(np.asarray(x) * res).astype(np.int64)
        ij = np.clip(ij, 0, res - 1)
        return np.ravel_multi_index(tuple(ij.T), self.resolution)

    def mass_where(self, mask_fn) -> float:
        """Mass of cells whose centre satisfies ``mask_fn(centres) -> bool array``."""
        sel = np.asarray(mask_fn(self.centers()), dtype=bool)
        return float(self.counts.ravel()[sel].sum()) / self.total

    def __eq__(self, other):
        return (isinstance(other, GridMeasure) and self.resolution == other.resolution
                and np.array_equal(self.counts, other.counts))


def push_forward(sys: PwiSystem, gm: GridMeasure, steps: int = 1, exact: bool = False) -> GridMeasure:
    """Centre-point transport of a grid measure by T^steps.

    The centre of each occupied cell is followed through all ``steps``
    iterations and its mass lands in the cell of the final image.  Tracking
    the centre instead of re-snapping after every step keeps slow drifts
    (smaller than a cell per step) visible.  With ``exact=True`` the centres
    are iterated in rational arithmetic (local maps must be exact).
    """
    if gm.dim != sys.dim:
        raise ValueError("grid dimension does not match the system")
    flat = gm.counts.ravel()
    occ = np.nonzero(flat)[0]
    out = np.zeros_like(flat)
    if exact:
        res = gm.resolution
        for c in occ:
            ij = np.unravel_index(c, res)
            x = reduce_mod1([Fraction(2 * int(i) + 1, 2 * r) for i, r in zip(ij, res)])
            for _ in range(steps):
                x = sys.apply(x)
                if not x.exact:
                    raise ValueError("exact push-forward needs exact local maps")
            dest = tuple(min(math.floor(v * r), r - 1) for v, r in zip(x.coords, res))
            out[np.ravel_multi_index(dest, res)] += flat[c]
        return GridMeasure(res, out)
    x = gm.centers()[occ]
    if steps:
        x = iterate_many(sys, x, steps)
    np.add.at(out, gm.cell_of(x), flat[occ])
    return GridMeasure(gm.resolution, out)


# ----------------------------------------------------------------- focusing

@dataclass
class FocusingEstimate:
    persistent_cells: np.ndarray
    burn_in: int
    horizon: int
    resolution: tuple
    estimated_measure: float

    def intervals(self):
        """Runs of consecutive persistent cells as (lo, hi) pairs (d = 1 only)."""
        if len(self.resolution) != 1:
            raise ValueError("intervals are defined for d = 1")
        n = self.resolution[0]
        cells = np.sort(self.persistent_cells)
        out = []
        for c in cells:
            if out and c == out[-1][1]:
                out[-1][1] = c + 1
            else:
                out.append([c, c + 1])
        return [(a / n, b / n) for a, b in out]


def focusing_estimate(sys: PwiSystem, resolution, burn_in: int | None = None,
                      horizon: int = 200) -> FocusingEstimate:
    """Cells hit by the image of the seed grid at every step of [burn_in, horizon]."""
    if burn_in is None:
        burn_in = horizon // 2
    if not 0 <= burn_in < horizon:
        raise ValueError("need 0 <= burn_in < horizon")
    gm = GridMeasure.uniform(resolution if not isinstance(resolution, int) else (resolution,))
    x = gm.centers()
    ncell = x.shape[0]
    alive = np.ones(ncell, dtype=bool)
    for k in range(horizon + 1):
        if k >= burn_in:
            hit = np.zeros(ncell, dtype=bool)
            hit[gm.cell_of(x)] = True
            alive &= hit
        if k < horizon:
            x = sys.step_many(x)
    cells = np.nonzero(alive)[0]
    return FocusingEstimate(cells, burn_in, horizon, gm.resolution, len(cells) / ncell)


# ---------------------------------------------------------------- Kac / return

def sample_regions(regions: Sequence, n: int, rng) -> np.ndarray:
    """Uniform samples from a union of disjoint regions."""
    w = np.array([float(r.measure) for r in regions])
    which = rng.choice(len(regions), size=n, p=w / w.sum())
    out = []
    for k, r in enumerate(regions):
        m = int((which == k).sum())
        if not m:
            continue
        if r.dim == 1:
            out.append((float(r.lo) + (float(r.hi) - float(r.lo)) * rng.random(m))[:, None])
        else:
            from .measure import _sample_polygon
            out.append(_sample_polygon(r, m, rng))
    return np.concatenate(out)


@dataclass
class ReturnProfile:
    histogram: dict
    bound: int
    fraction_within: float
    not_returned: int
    samples: int

    @property
    def flagged(self) -> bool:
        return self.not_returned > 0


def return_time_profile(sys: PwiSystem, A, mu_A: float, samples: int = 10_000,
                        horizon: int = 1000, seed: int = 0) -> ReturnProfile:
    """First-return times to A and the share of them within ceil(1/mu_A) steps."""
    if not 0 < mu_A <= 1:
        raise ValueError("mu_A must lie in (0, 1]")
    regions = list(A) if isinstance(A, (list, tuple)) else [A]
    rng = np.random.default_rng(seed)
    x = sample_regions(regions, samples, rng)
    tau = np.zeros(samples, dtype=np.int64)
    live = np.arange(samples)
    for k in range(1, horizon + 1):
        x = sys.step_many(x)
        inside = np.zeros(len(x), dtype=bool)
        for r in regions:
            inside |= r.contains_many(x)
        tau[live[inside]] = k
        live, x = live[~inside], x[~inside]
        if not len(live):
            break
    if len(live):
        logger.info("%d of %d samples did not return within %d steps", len(live), samples, horizon)
    bound = math.ceil(1 / mu_A - 1e-12)
    returned = tau[tau > 0]
    hist = dict(sorted(Counter(int(t) for t in returned).items()))
    frac = float(np.count_nonzero((tau > 0) & (tau <= bound))) / samples
    return ReturnProfile(hist, bound, frac, len(live), samples)


# ------------------------------------------------------------- isolation

@dataclass
class ProbeResult:
    radius: float
    itineraries_agree: bool
    agree_fraction: float
    min_distance: float
    max_distance: float
    tail_min_distance: float
    inside_clearance: bool
    constant: bool = field(default=False)


def _sphere(z: np.ndarray, r: float, directions: int) -> np.ndarray:
    if len(z) == 1:
        return reduce_mod1_array(np.array([[z[0] - r], [z[0] + r]]))
    if len(z) != 2:
        raise NotImplementedError("sphere sampling for d <= 2")
    th = 2 * np.pi * np.arange(directions) / directions
    return reduce_mod1_array(z + r * np.stack([np.cos(th), np.sin(th)], axis=1))


def orbit_clearance(sys: PwiSystem, pts: np.ndarray) -> float:
    return float(np.min(sys.boundary_distance_many(pts)))


def isolation_probe(sys: PwiSystem, z, radii: Sequence[float], n: int = 200,
                    directions: int = 64) -> list:
    """Follow points on spheres around z next to the orbit of z.

    For each radius: do the itineraries agree with that of z for n steps,
    and how do the distances rho_p(T^k x, T^k z) evolve.  ``tail_min_distance``
    is the minimum over the second half of the run, a liminf proxy.
    """
    z = np.asarray(z.as_array() if isinstance(z, TorusPoint) else z, dtype=float)
    zs, zit = iterate_traj(sys, z[None, :], n)
    clearance = orbit_clearance(sys, zs[:, 0, :]) if sys.partition.explicit or hasattr(sys, "cells") else math.nan
    out = []
    for r in radii:
        xs0 = _sphere(z, r, directions)
        xs, xit = iterate_traj(sys, xs0, n)
        d = np.stack([_dist(xs[k], zs[k, 0], sys.p) for k in range(n + 1)])
        agree = np.all(xit == zit, axis=0)
        tail = d[n // 2:].min()
        res = ProbeResult(float(r), bool(agree.all()), float(agree.mean()), float(d.min()),
                          float(d.max()), float(tail), bool(r < clearance))
        res.constant = bool(np.abs(d - r).max() < 1e-9)
        out.append(res)
    return out


def iterate_traj(sys: PwiSystem, x: np.ndarray, n: int):
    """Trajectories (n+1, m, d) and itineraries (n, m) of m starting points."""
    traj = np.empty((n + 1,) + x.shape)
    its = np.empty((n, len(x)), dtype=np.int64)
    traj[0] = x
    for k in range(n):
        traj[k + 1], its[k] = sys.step_many(traj[k], return_index=True)
    return traj, its


def _dist(x: np.ndarray, z: np.ndarray, p) -> np.ndarray:
    d = np.abs(x - z)
    d = np.minimum(d, 1.0 - d)
    if p == np.inf:
        return d.max(axis=1)
    return (d ** p).sum(axis=1) ** (1.0 / p)
