"""Special partitions of the torus, their boundary sets and refinements.

Explicit partitions hold convex regions with rational vertices: intervals
for d = 1, counterclockwise polygons for d = 2.  Each face carries an
inclusion flag so that every point of [0,1)^d lies in exactly one region.
The default flags follow the lower-left rule: a point on a face belongs to
the region it enters when pushed by an infinitesimal step along (1, eta),
eta -> 0+.  For polygons that means "include the faces whose outward normal
is lexicographically negative".

Countable partitions are described by a :class:`Locator`, a rule mapping a
point to its region index.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .arrangement import arrangement_faces, cross, polygon_area
from .isometry import SemigroupClosure, TorusIsometry, inverse
from .torus import TorusPoint, reduce_mod1, to_fraction

__all__ = [
    "BoundarySet",
    "Diagnostics",
    "Interval",
    "Locator",
    "Partition",
    "PartitionError",
    "Polygon",
    "Problem",
    "boundary_set",
    "interior_sample",
    "locate",
    "pullback_boundary",
    "refine_by_semigroup",
    "region_from_json",
    "region_measure",
    "validate_partition",
]


class PartitionError(ValueError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


def _lex_negative(nx, ny) -> bool:
    return nx < 0 or (nx == 0 and ny < 0)


@dataclass(frozen=True)
class Interval:
    """Arc [lo, hi] of the circle with inclusion flags at both ends."""

    lo: Fraction
    hi: Fraction
    include_lo: bool = True
    include_hi: bool = False

    def __post_init__(self):
        lo, hi = self.lo, self.hi
        if not isinstance(lo, float):
            lo, hi = to_fraction(lo), to_fraction(hi)
        if not (0 <= lo < hi <= 1):
            raise ValueError(f"bad interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    dim = 1

    @property
    def exact(self) -> bool:
        return isinstance(self.lo, Fraction)

    def contains_raw(self, x) -> bool:
        if self.lo < x < self.hi:
            return True
        return (x == self.lo and self.include_lo) or (x == self.hi and self.include_hi)

    def contains(self, x) -> bool:
        x = x[0] if isinstance(x, (TorusPoint, tuple, list)) else x
        if self.contains_raw(x):
            return True
        return x == 0 and self.contains_raw(1)

    def contains_many(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(len(x), -1)[:, 0]
        lo, hi = float(self.lo), float(self.hi)
        m = (x > lo) & (x < hi)
        if self.include_lo:
            m |= x == lo
        if self.include_hi:
            m |= x == hi
            if hi == 1.0:
                m |= x == 0.0
        return m

    @property
    def vertices(self):
        return ((self.lo,), (self.hi,))

    @property
    def measure(self):
        return self.hi - self.lo

    def sample(self):
        return ((self.lo + self.hi) / 2,)

    def closure_contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def to_json(self) -> dict:
        return {"vertices": [[str(self.lo)], [str(self.hi)]],
                "include_vertices": [self.include_lo, self.include_hi]}

    def __repr__(self):
        left = "[" if self.include_lo else "("
        right = "]" if self.include_hi else ")"
        return f"Interval{left}{self.lo}, {self.hi}{right}"


@dataclass(frozen=True)
class Polygon:
    """Convex polygon with counterclockwise vertices in [0,1]^2.

    ``include_edges[i]`` refers to the edge from vertex i to vertex i+1 and
    ``include_vertices[i]`` to vertex i.  ``None`` selects the lower-left rule.
    """

    vertices: tuple
    include_edges: tuple | None = None
    include_vertices: tuple | None = None
    _planes: tuple = field(default=None, repr=False, compare=False)

    dim = 2

    def __post_init__(self):
        raw = [tuple(v) for v in self.vertices]
        numeric = any(isinstance(c, float) for v in raw for c in v)
        verts = tuple(tuple(float(c) for c in v) for v in raw) if numeric else \
            tuple(tuple(to_fraction(c) for c in v) for v in raw)
        if len(verts) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        n = len(verts)
        for i in range(n):
            if cross(verts[i - 1], verts[i], verts[(i + 1) % n]) < 0:
                raise ValueError("polygon must be convex and counterclockwise")
        if not polygon_area(verts) > 0:
            raise ValueError("polygon has empty interior")
        planes = []
        for i in range(n):
            (x0, y0), (x1, y1) = verts[i], verts[(i + 1) % n]
            nx, ny = y1 - y0, x0 - x1
            planes.append((nx, ny, nx * x0 + ny * y0))
        edges = self.include_edges
        if edges is None:
            edges = tuple(_lex_negative(nx, ny) for nx, ny, _ in planes)
        vflags = self.include_vertices
        if vflags is None:
            vflags = tuple(edges[i - 1] and edges[i] for i in range(n))
        if len(edges) != n or len(vflags) != n:
            raise ValueError("flag count does not match vertex count")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "include_edges", tuple(bool(e) for e in edges))
        object.__setattr__(self, "include_vertices", tuple(bool(v) for v in vflags))
        object.__setattr__(self, "_planes", tuple(planes))

    @property
    def exact(self) -> bool:
        return isinstance(self.vertices[0][0], Fraction)

    def contains_raw(self, p) -> bool:
        tight = []
        for k, (nx, ny, c) in enumerate(self._planes):
            s = nx * p[0] + ny * p[1] - c
            if s > 0:
                return False
            if s == 0:
                tight.append(k)
        if not tight:
            return True
        if len(tight) == 1:
            return self.include_edges[tight[0]]
        n = len(self.vertices)
        for k in tight:
            # vertex k+1 joins edges k and k+1
            if (k + 1) % n in tight:
                return self.include_vertices[(k + 1) % n]
        return self.include_vertices[tight[0]]

    def contains(self, p) -> bool:
        p = tuple(p)
        for lift in _lifts(p):
            if self.contains_raw(lift):
                return True
        return False

    def contains_many(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        planes = np.array([[float(a) for a in pl] for pl in self._planes])
        s = x @ planes[:, :2].T - planes[:, 2]
        flags = np.array(self.include_edges)
        ok = np.all((s < 0) | ((s == 0) & flags), axis=1)
        tight = (s == 0).sum(axis=1)
        for r in np.nonzero((tight >= 2) & np.all(s <= 0, axis=1))[0]:
            ok[r] = self.contains_raw(tuple(x[r]))
        edge = np.nonzero(np.any(x == 0.0, axis=1) & ~ok)[0]
        for r in edge:
            ok[r] = self.contains(tuple(x[r]))
        return ok

    @property
    def measure(self):
        return polygon_area(self.vertices)

    def sample(self):
        n = len(self.vertices)
        return (sum(v[0] for v in self.vertices) / n, sum(v[1] for v in self.vertices) / n)

    def closure_contains(self, p) -> bool:
        return all(nx * p[0] + ny * p[1] <= c for nx, ny, c in self._planes)

    def edges(self):
        n = len(self.vertices)
        return [(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)]

    def to_json(self) -> dict:
        return {"vertices": [[str(c) for c in v] for v in self.vertices],
                "include_edges": list(self.include_edges),
                "include_vertices": list(self.include_vertices)}


def _lifts(p):
    # representatives of p in [0,1]^d: zero coordinates may also be read as 1
    choices = [(c, 1) if c == 0 else (c,) for c in p]
    return itertools.product(*choices)


def region_from_json(data: dict):
    verts = data["vertices"]
    if len(verts[0]) == 1:
        flags = data.get("include_vertices", [True, False])
        return Interval(to_fraction(verts[0][0]), to_fraction(verts[1][0]), bool(flags[0]), bool(flags[1]))
    return Polygon(tuple(tuple(to_fraction(c) for c in v) for v in verts),
                   tuple(data["include_edges"]) if "include_edges" in data else None,
                   tuple(data["include_vertices"]) if "include_vertices" in data else None)


class Locator:
    """Rule-based membership for countable partitions.

    Subclasses implement :meth:`index_many` (numeric) and may override
    :meth:`index` for exact points.  ``name`` and ``params`` identify the rule
    in JSON descriptors.
    """

    name = "locator"
    dim = 1

    def __init__(self, **params):
        self.params = params

    def index(self, x) -> int:
        arr = np.array([[float(c) for c in x]])
        return int(self.index_many(arr)[0])

    def index_many(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def region_bounds(self, index: int):
        """Optional explicit region for drawing; None when not available."""
        return None

    def to_json(self) -> dict:
        return {"locator": self.name, "params": dict(self.params)}


@dataclass
class Partition:
    """A special partition: explicit convex regions or a locator rule."""

    dim: int
    regions: tuple = ()
    locator: Locator | None = None

    def __post_init__(self):
        self.regions = tuple(self.regions)
        if self.locator is None and not self.regions:
            raise ValueError("partition needs regions or a locator")
        for r in self.regions:
            if r.dim != self.dim:
                raise ValueError("region dimension mismatch")

    @classmethod
    def from_regions(cls, regions: Sequence) -> "Partition":
        regions = tuple(regions)
        return cls(regions[0].dim, regions)

    @classmethod
    def intervals(cls, cuts: Sequence) -> "Partition":
        """Half-open arcs [c_k, c_{k+1}) from a sorted list of cut points."""
        cuts = [to_fraction(c) for c in cuts]
        if not cuts or cuts[0] != 0:
            cuts = [Fraction(0)] + cuts
        if cuts[-1] != 1:
            cuts = cuts + [Fraction(1)]
        return cls(1, tuple(Interval(a, b) for a, b in zip(cuts, cuts[1:])))

    @property
    def explicit(self) -> bool:
        return self.locator is None

    @property
    def exact(self) -> bool:
        return self.explicit and all(r.exact for r in self.regions)

    def __len__(self):
        return len(self.regions)

    def locate(self, x) -> int:
        return locate(self, x)

    def locate_many(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(len(x), self.dim)
        if self.locator is not None:
            return np.asarray(self.locator.index_many(x), dtype=np.int64)
        out = np.full(len(x), -1, dtype=np.int64)
        for k, r in enumerate(self.regions):
            free = out < 0
            if not free.any():
                break
            hit = r.contains_many(x[free])
            idx = np.nonzero(free)[0][hit]
            out[idx] = k
        if (out < 0).any():
            bad = x[np.nonzero(out < 0)[0][0]]
            raise PartitionError(f"point {bad} lies in no region", witness=tuple(bad))
        return out

    def to_json(self) -> dict:
        if self.locator is not None:
            return self.locator.to_json()
        return {"dim": self.dim, "regions": [r.to_json() for r in self.regions]}


def locate(p: Partition, x) -> int:
    """Index of the unique region containing x."""
    if p.locator is not None:
        k = p.locator.index(tuple(x))
        if k is None or k < 0:
            raise PartitionError(f"locator {p.locator.name} gave no index for {x}", witness=x)
        return int(k)
    coords = tuple(x)
    if p.exact and not isinstance(x, TorusPoint):
        coords = tuple(to_fraction(c) for c in coords)
    for k, r in enumerate(p.regions):
        if r.contains(coords if p.dim > 1 else coords[0]):
            return k
    raise PartitionError(f"point {x} lies in no region", witness=x)


def region_measure(r) -> Fraction:
    return r.measure


def interior_sample(r) -> TorusPoint:
    """Vertex mean of the region (midpoint for an interval)."""
    return reduce_mod1(r.sample())


@dataclass(frozen=True)
class Problem:
    kind: str
    witness: object
    detail: str = ""


@dataclass
class Diagnostics:
    measures: list
    total: Fraction
    problems: list

    @property
    def ok(self) -> bool:
        return not self.problems

    def raise_for_problems(self):
        if self.problems:
            pr = self.problems[0]
            raise PartitionError(f"{pr.kind}: {pr.detail}", witness=pr.witness)


def _clip(poly, nx, ny, c):
    # keep the part with nx*x + ny*y <= c
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        sp = nx * p[0] + ny * p[1] - c
        sq = nx * q[0] + ny * q[1] - c
        if sp <= 0:
            out.append(p)
        if (sp < 0 < sq) or (sq < 0 < sp):
            t = sp / (sp - sq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def _polygon_intersection(a: Polygon, b: Polygon):
    poly = list(a.vertices)
    for nx, ny, c in b._planes:
        poly = _clip(poly, nx, ny, c)
        if len(poly) < 3:
            return []
    return poly


def _boundary_probes(r):
    if r.dim == 1:
        return [(r.lo,), (r.hi,)]
    pts = []
    for p, q in r.edges():
        pts.append(p)
        for t in (Fraction(1, 3), Fraction(1, 2)):
            pts.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return pts


def validate_partition(p: Partition) -> Diagnostics:
    """Check disjointness, total measure and single ownership of boundary points."""
    if not p.explicit:
        raise ValueError("validate_partition needs explicit regions")
    problems = []
    measures = [region_measure(r) for r in p.regions]
    total = sum(measures, Fraction(0))
    regions = p.regions
    for i, j in itertools.combinations(range(len(regions)), 2):
        a, b = regions[i], regions[j]
        if p.dim == 1:
            lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
            if lo < hi:
                problems.append(Problem("overlap", ((lo + hi) / 2,), f"regions {i} and {j}"))
        else:
            inter = _polygon_intersection(a, b)
            if inter and polygon_area(inter) > 0:
                w = tuple(sum(v[k] for v in inter) / len(inter) for k in range(2))
                problems.append(Problem("overlap", w, f"regions {i} and {j}"))
    if total != 1 and not any(pr.kind == "overlap" for pr in problems):
        problems.append(Problem("gap", _gap_witness(p), f"total measure {total}"))
    seen = set()
    for r in regions:
        for q in _boundary_probes(r):
            q = reduce_mod1(q).coords
            if q in seen:
                continue
            seen.add(q)
            owners = [k for k, s in enumerate(regions) if s.contains(q if p.dim > 1 else q[0])]
            if len(owners) > 1:
                problems.append(Problem("double-claimed", q, f"regions {owners}"))
            elif not owners and total == 1:
                problems.append(Problem("unclaimed", q, "boundary point in no region"))
    return Diagnostics(measures, total, problems)


def _gap_witness(p: Partition):
    if p.dim == 1:
        pts = sorted({Fraction(0), Fraction(1)} | {r.lo for r in p.regions} | {r.hi for r in p.regions})
        for a, b in zip(pts, pts[1:]):
            m = (a + b) / 2
            if not any(r.contains(m) for r in p.regions):
                return (m,)
        return None
    n = 64
    for i in range(n):
        for j in range(n):
            q = (Fraction(2 * i + 1, 2 * n), Fraction(2 * j + 1, 2 * n))
            if not any(r.contains(q) for r in p.regions):
                return q
    return None


@dataclass(frozen=True)
class BoundarySet:
    """Boundary points (d = 1) or segments (d = 2) in canonical torus form.

    Segments are merged along common lines, and pieces on the seams x = 1 or
    y = 1 are stored on x = 0 or y = 0.  :meth:`square_segments` restores the
    copies on the far sides of the unit square.
    """

    dim: int
    points: tuple = ()
    segments: tuple = ()

    def __len__(self):
        return len(self.points) if self.dim == 1 else len(self.segments)

    def square_segments(self):
        out = set(self.segments)
        for (p, q) in self.segments:
            if p[0] == 0 and q[0] == 0:
                out.add(((Fraction(1), p[1]), (Fraction(1), q[1])))
            if p[1] == 0 and q[1] == 0:
                out.add(((p[0], Fraction(1)), (q[0], Fraction(1))))
        return sorted(out)

    def length_profile(self) -> dict:
        """Exact total length per squared norm of the primitive direction."""
        prof: dict = {}
        for p, q in self.segments:
            dx, dy = q[0] - p[0], q[1] - p[1]
            den = math.lcm(Fraction(dx).denominator, Fraction(dy).denominator)
            ix, iy = int(dx * den), int(dy * den)
            g = math.gcd(ix, iy)
            ux, uy = ix // g, iy // g
            t = Fraction(g, den)
            key = ux * ux + uy * uy
            prof[key] = prof.get(key, Fraction(0)) + t
        return prof

    def total_length(self) -> float:
        return sum(float(t) * math.sqrt(k) for k, t in self.length_profile().items())

    def distance_many(self, x: np.ndarray) -> np.ndarray:
        """Torus rho_2 distance from each row of x to the set."""
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        if self.dim == 1:
            pts = np.array([float(c) for c in self.points])
            d = np.abs(x[:, :1] - pts[None, :])
            return np.minimum(d, 1.0 - d).min(axis=1)
        return segment_distance_many(x, [((float(p[0]), float(p[1])), (float(q[0]), float(q[1])))
                                         for p, q in self.segments])

    def to_json(self) -> dict:
        if self.dim == 1:
            return {"dim": 1, "points": [str(c) for c in self.points]}
        return {"dim": 2, "segments": [[[str(c) for c in p], [str(c) for c in q]] for p, q in self.segments]}


def segment_distance_many(x: np.ndarray, segments) -> np.ndarray:
    """Torus distance from points to a union of segments (offsets -1..1)."""
    x = np.asarray(x, dtype=float)
    best = np.full(len(x), np.inf)
    if not segments:
        return best
    seg = np.asarray(segments, dtype=float)
    a = seg[:, 0, :]
    d = seg[:, 1, :] - a
    dd = np.maximum((d * d).sum(axis=1), 1e-300)
    for ox in (-1.0, 0.0, 1.0):
        for oy in (-1.0, 0.0, 1.0):
            y = x + np.array([ox, oy])
            rel = y[:, None, :] - a[None, :, :]
            t = np.clip((rel * d[None]).sum(axis=2) / dd[None], 0.0, 1.0)
            diff = rel - t[..., None] * d[None]
            dist = np.sqrt((diff * diff).sum(axis=2)).min(axis=1)
            best = np.minimum(best, dist)
    return best


def _line_key(p, q):
    a = q[1] - p[1]
    b = p[0] - q[0]
    c = a * p[0] + b * p[1]
    lead = a if a != 0 else b
    return (a / lead, b / lead, c / lead)


def _canonical_segments(segs):
    groups: dict = {}
    for p, q in segs:
        if p == q:
            continue
        key = _line_key(p, q)
        axis = 0 if p[0] != q[0] else 1
        lo, hi = sorted((p, q), key=lambda v: v[axis])
        groups.setdefault(key, []).append((lo, hi, axis))
    out = []
    for items in groups.values():
        axis = items[0][2]
        items.sort(key=lambda s: s[0][axis])
        cur_lo, cur_hi = items[0][0], items[0][1]
        for lo, hi, _ in items[1:]:
            if lo[axis] <= cur_hi[axis]:
                if hi[axis] > cur_hi[axis]:
                    cur_hi = hi
            else:
                out.append((cur_lo, cur_hi))
                cur_lo, cur_hi = lo, hi
        out.append((cur_lo, cur_hi))
    return tuple(sorted(out))


def _wrap_segment(p, q):
    """Cut a plane segment at integer grid lines and shift pieces into [0,1]^2."""
    ts = {Fraction(0), Fraction(1)}
    for k in range(2):
        a, b = p[k], q[k]
        if a != b:
            lo, hi = min(a, b), max(a, b)
            for m in range(math.ceil(lo), math.floor(hi) + 1):
                ts.add((m - a) / (b - a))
    ts = sorted(t for t in ts if 0 <= t <= 1)
    pieces = []
    for t0, t1 in zip(ts, ts[1:]):
        u = tuple(p[k] + t0 * (q[k] - p[k]) for k in range(2))
        v = tuple(p[k] + t1 * (q[k] - p[k]) for k in range(2))
        mid = tuple((u[k] + v[k]) / 2 for k in range(2))
        shift = tuple(math.floor(m) for m in mid)
        pieces.append((tuple(u[k] - shift[k] for k in range(2)), tuple(v[k] - shift[k] for k in range(2))))
    return pieces


def _canonical_points(pts):
    return tuple(sorted({c - math.floor(c) for c in pts}))


def boundary_set(p: Partition) -> BoundarySet:
    """Union of all region boundaries."""
    if not p.explicit:
        raise ValueError("boundary_set needs explicit regions")
    if p.dim == 1:
        pts = []
        for r in p.regions:
            pts += [r.lo, r.hi]
        return BoundarySet(1, points=_canonical_points(pts))
    segs = []
    for r in p.regions:
        for a, b in r.edges():
            segs += _wrap_segment(a, b)
    return BoundarySet(2, segments=_canonical_segments(segs))


def pullback_boundary(gamma: BoundarySet, g: TorusIsometry) -> BoundarySet:
    """Image of the boundary set under g^{-1}, re-wrapped into the torus."""
    h = inverse(g)
    if gamma.dim == 1:
        return BoundarySet(1, points=_canonical_points(h.affine((c,))[0] for c in gamma.points))
    segs = []
    for a, b in gamma.segments:
        segs += _wrap_segment(tuple(h.affine(a)), tuple(h.affine(b)))
    return BoundarySet(2, segments=_canonical_segments(segs))


def _union(sets: Sequence[BoundarySet]) -> BoundarySet:
    dim = sets[0].dim
    if dim == 1:
        pts = set()
        for s in sets:
            pts.update(s.points)
        return BoundarySet(1, points=tuple(sorted(pts)))
    segs = []
    for s in sets:
        segs += list(s.segments)
    return BoundarySet(2, segments=_canonical_segments(segs))


_SQUARE = (((Fraction(0), Fraction(0)), (Fraction(1), Fraction(0))),
           ((Fraction(1), Fraction(0)), (Fraction(1), Fraction(1))),
           ((Fraction(1), Fraction(1)), (Fraction(0), Fraction(1))),
           ((Fraction(0), Fraction(1)), (Fraction(0), Fraction(0))))


def regions_of_boundary(gamma: BoundarySet) -> list:
    """The regions cut out of the torus by a boundary set."""
    if gamma.dim == 1:
        cuts = sorted(set(gamma.points) | {Fraction(0)})
        cuts.append(Fraction(1))
        return [Interval(a, b) for a, b in zip(cuts, cuts[1:])]
    faces = [_rotate_to_lowest(f) for f in arrangement_faces(list(gamma.segments) + list(_SQUARE))]
    faces.sort(key=lambda f: (min(v[1] for v in f), min(v[0] for v in f), polygon_area(f)))
    return [Polygon(tuple(f)) for f in faces]


def _rotate_to_lowest(f):
    k = min(range(len(f)), key=lambda i: (f[i][1], f[i][0]))
    return list(f[k:]) + list(f[:k])


def refine_by_semigroup(p: Partition, closure: SemigroupClosure):
    """Cut the partition by all pullbacks of its boundary under the closure.

    Returns the refined boundary set and the list of regions; points of one
    region share their itineraries under any map whose local isometries
    generate ``closure``.
    """
    if not p.explicit:
        raise ValueError("refinement needs explicit regions")
    if p.dim > 2:
        raise NotImplementedError("exact refinement is implemented for d = 1, 2")
    if not closure.saturated:
        raise ValueError("refinement needs a saturated semigroup closure")
    gamma = boundary_set(p)
    gt = _union([gamma] + [pullback_boundary(gamma, g) for g in closure.elements])
    regions = regions_of_boundary(gt)
    total = sum((region_measure(r) for r in regions), Fraction(0))
    if total != 1:
        raise RuntimeError(f"refined regions cover measure {total}, expected 1")
    return gt, regions
