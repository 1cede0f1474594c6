"""Absolutely continuous invariant measures of weakly periodic PWIs.

For a PWI whose local isometries generate a finite semigroup G, the
pullbacks of the partition boundary under G cut the torus into finitely many
regions that move as blocks.  The induced successor map on regions is a
functional graph; each of its cycles carries the normalised Lebesgue
measure, and those are all the absolutely continuous invariant measures.

General extendable PWIs are handled by rounding every translation to the
grid (1/q)Z^d, which makes the map weakly periodic, and watching how the
resulting measures behave as q grows.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .isometry import DEFAULT_CAP, SemigroupClosure, TorusIsometry, is_weakly_periodic
from .partition import (BoundarySet, Interval, Partition, Polygon, boundary_set, interior_sample,
                        refine_by_semigroup, region_measure)
from .system import PwiSystem
from .torus import to_fraction

logger = logging.getLogger(__name__)

__all__ = [
    "Analysis",
    "DELTA_GRID",
    "NotWeaklyPeriodic",
    "PipelineEntry",
    "PipelineReport",
    "PwMeasure",
    "RegionGraph",
    "RefinementInconsistency",
    "analyze",
    "approximation_pipeline",
    "boundary_mass",
    "check_exact_invariance",
    "default_test_functions",
    "integrate",
    "invariant_measures",
    "rationalize",
    "transition_graph",
]

DELTA_GRID = (1e-1, 1e-2, 1e-3, 1e-4)


class NotWeaklyPeriodic(RuntimeError):
    """Raised when the semigroup closure does not saturate under the cap."""

    def __init__(self, message, closure: SemigroupClosure | None = None):
        super().__init__(message)
        self.closure = closure


class RefinementInconsistency(RuntimeError):
    pass


# ---------------------------------------------------------------- geometry

def _image_vertices(g: TorusIsometry, region):
    """Vertices of g(region) translated so the image sample lies in [0,1)^d."""
    verts = [g.affine(v) for v in region.vertices]
    centre = g.affine(region.sample())
    shift = [math.floor(c) for c in centre]
    return [tuple(v[k] - shift[k] for k in range(len(shift))) for v in verts]


def image_region(g: TorusIsometry, region):
    """The exact image of a region under a local isometry, as a region."""
    verts = _image_vertices(g, region)
    if region.dim == 1:
        lo, hi = sorted(v[0] for v in verts)
        return Interval(lo, hi)
    if _signed_area(verts) < 0:
        verts = verts[::-1]
    return Polygon(tuple(verts))


def _signed_area(verts):
    s = 0
    for i in range(len(verts)):
        x0, y0 = verts[i]
        x1, y1 = verts[(i + 1) % len(verts)]
        s += x0 * y1 - x1 * y0
    return s / 2


def _same_region(a, b) -> bool:
    if a.dim == 1:
        return (a.lo, a.hi) == (b.lo, b.hi)
    return set(a.vertices) == set(b.vertices)


# ------------------------------------------------------------- region graph

@dataclass
class RegionGraph:
    regions: list
    successor: list
    cycles: list
    wandering: list
    boundary: BoundarySet | None = None

    def cycle_of(self, j: int):
        for c in self.cycles:
            if j in c:
                return c
        return None

    def to_json(self) -> dict:
        return {"num_regions": len(self.regions), "successor": list(self.successor),
                "cycles": [list(c) for c in self.cycles], "wandering": list(self.wandering)}


def _functional_cycles(succ: Sequence[int]):
    n = len(succ)
    state = [0] * n  # 0 new, 1 on current path, 2 done
    cycles = []
    for s in range(n):
        if state[s]:
            continue
        path = []
        v = s
        while state[v] == 0:
            state[v] = 1
            path.append(v)
            v = succ[v]
        if state[v] == 1:
            k = path.index(v)
            cycles.append(path[k:])
        for u in path:
            state[u] = 2
    on_cycle = {v for c in cycles for v in c}
    return cycles, [v for v in range(n) if v not in on_cycle]


def transition_graph(sys: PwiSystem, refined: Sequence, boundary: BoundarySet | None = None) -> RegionGraph:
    """Successor map of refined regions, with an exact containment check."""
    regions = list(refined)
    idx_of = {}
    succ = []
    for j, y in enumerate(regions):
        s = interior_sample(y)
        g = sys.local_map(sys.locate(s))
        img = g.affine(s.coords)
        target = tuple(c - math.floor(c) for c in img)
        k = _find_region(regions, target, idx_of)
        verts = _image_vertices(g, y)
        dest = regions[k]
        for v in verts:
            if not dest.closure_contains(v if dest.dim > 1 else v[0]):
                raise RefinementInconsistency(
                    f"image of region {j} leaves region {k} at vertex {v}")
        succ.append(k)
    cycles, wandering = _functional_cycles(succ)
    return RegionGraph(regions, succ, cycles, wandering, boundary)


def _find_region(regions, point, cache) -> int:
    hit = cache.get(point)
    if hit is not None:
        return hit
    for k, r in enumerate(regions):
        if r.contains(point if r.dim > 1 else point[0]):
            cache[point] = k
            return k
    raise RefinementInconsistency(f"no refined region contains {point}")


# ------------------------------------------------------------------ measures

@dataclass(frozen=True)
class PwMeasure:
    """Piecewise-constant density: a list of (region, density) pairs."""

    support: tuple
    label: str = ""

    @property
    def total_mass(self):
        return sum((d * region_measure(r) for r, d in self.support), Fraction(0))

    @property
    def support_measure(self):
        return sum((region_measure(r) for r, _ in self.support), Fraction(0))

    def density_at(self, x) -> Fraction:
        for r, d in self.support:
            if r.contains(x if r.dim > 1 else x[0]):
                return d
        return Fraction(0)

    def integrate(self, phi: Callable, order: int = 16) -> float:
        return math.fsum(float(d) * integrate(phi, r, order=order) for r, d in self.support)

    def to_json(self) -> dict:
        return {"label": self.label,
                "support": [{"region": r.to_json(), "density": str(d)} for r, d in self.support]}


def lebesgue(dim: int) -> PwMeasure:
    if dim == 1:
        return PwMeasure(((Interval(0, 1), Fraction(1)),), "lebesgue")
    sq = Polygon(((0, 0), (1, 0), (1, 1), (0, 1)))
    return PwMeasure(((sq, Fraction(1)),), "lebesgue")


@dataclass
class Analysis:
    system: PwiSystem
    closure: SemigroupClosure
    boundary: BoundarySet
    graph: RegionGraph
    measures: list

    def selected(self) -> int:
        """Index of the cycle measure with the largest support (ties: lowest region)."""
        best = None
        for k, c in enumerate(self.graph.cycles):
            key = (-self.measures[k].support_measure, min(c))
            if best is None or key < best[0]:
                best = (key, k)
        return best[1]

    def to_json(self) -> dict:
        regions = self.graph.regions
        return {"semigroup_size": self.closure.size,
                "num_regions": len(regions),
                "regions": [r.to_json() for r in regions],
                **self.graph.to_json(),
                "measures": [m.to_json() for m in self.measures]}


def analyze(sys: PwiSystem, cap: int = DEFAULT_CAP) -> Analysis:
    """Closure, refinement, region graph and cycle measures in one pass."""
    if not sys.exact:
        raise ValueError("the exact measure engine needs an exact system")
    wp = is_weakly_periodic(sys.generators(), cap)
    if not wp.certified:
        raise NotWeaklyPeriodic(f"semigroup closure exceeded cap {cap}", wp.closure)
    gt, refined = refine_by_semigroup(sys.partition, wp.closure)
    graph = transition_graph(sys, refined, gt)
    measures = []
    for c in graph.cycles:
        m = region_measure(graph.regions[c[0]])
        dens = 1 / (len(c) * m)
        measures.append(PwMeasure(tuple((graph.regions[j], dens) for j in c),
                                  "cycle " + "->".join(str(j) for j in c)))
    return Analysis(sys, wp.closure, gt, graph, measures)


def invariant_measures(sys: PwiSystem, cap: int = DEFAULT_CAP) -> list:
    """One uniform measure per cycle of the region graph."""
    return analyze(sys, cap).measures


def check_exact_invariance(sys: PwiSystem, graph: RegionGraph, cycle: Sequence[int]) -> bool:
    """Each cycle region is mapped exactly onto the next one, and all have equal measure."""
    ms = {region_measure(graph.regions[j]) for j in cycle}
    if len(ms) != 1:
        return False
    for a, b in zip(cycle, list(cycle[1:]) + [cycle[0]]):
        y = graph.regions[a]
        g = sys.local_map(sys.locate(interior_sample(y)))
        if not _same_region(image_region(g, y), graph.regions[b]):
            return False
    return True


# -------------------------------------------------------------- quadrature

_GL: dict = {}


def _gauss(order: int):
    if order not in _GL:
        x, w = np.polynomial.legendre.leggauss(order)
        _GL[order] = ((x + 1) / 2, w / 2)
    return _GL[order]


def _integrate_vertices(phi: Callable, verts, dim: int, order: int) -> float:
    x, w = _gauss(order)
    if dim == 1:
        lo, hi = float(verts[0][0]), float(verts[1][0])
        pts = (lo + (hi - lo) * x)[:, None]
        return float(np.dot(w, phi(pts))) * (hi - lo)
    v = np.array([[float(c) for c in p] for p in verts])
    u, s = np.meshgrid(x, x, indexing="ij")
    wu = np.outer(w, w)
    total = []
    for i in range(1, len(v) - 1):
        a, b, c = v[0], v[i], v[i + 1]
        jac = abs((b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]))
        pts = a + u[..., None] * (b - a) + (u * s)[..., None] * (c - b)
        vals = phi(pts.reshape(-1, 2)).reshape(u.shape)
        total.append(float(np.sum(wu * u * vals)) * jac)
    return math.fsum(total)


def _canonical_vertices(verts, dim: int):
    if dim == 1:
        return tuple(sorted(verts))
    verts = list(verts)
    if _signed_area(verts) < 0:
        verts = verts[::-1]
    k = min(range(len(verts)), key=lambda i: (verts[i][1], verts[i][0]))
    return tuple(verts[k:] + verts[:k])


def integrate(phi: Callable, region, order: int = 16, _cache: dict | None = None) -> float:
    """Gauss-Legendre integral of phi over a region (Duffy map on a triangle fan)."""
    key = _canonical_vertices(tuple(tuple(v) for v in region.vertices), region.dim)
    if _cache is not None and key in _cache:
        return _cache[key]
    val = _integrate_vertices(phi, key, region.dim, order)
    if _cache is not None:
        _cache[key] = val
    return val


def _integrate_image(phi, g, region, order, cache) -> float:
    if isinstance(g, TorusIsometry) and g.exact and region.exact:
        verts = _image_vertices(g, region)
    else:
        m, t = g.matrix_array, g.translation_array
        pts = np.array([[float(c) for c in v] for v in region.vertices]) @ m.T + t
        centre = np.array([float(c) for c in region.sample()]) @ m.T + t
        verts = [tuple(p) for p in pts - np.floor(centre)]
    key = _canonical_vertices(tuple(verts), region.dim)
    if key in cache:
        return cache[key]
    val = _integrate_vertices(phi, key, region.dim, order)
    cache[key] = val
    return val


def default_test_functions(dim: int) -> dict:
    tau = 2 * math.pi
    if dim == 1:
        return {"cos(2pi x)": lambda x: np.cos(tau * x[:, 0]),
                "sin(2pi x)": lambda x: np.sin(tau * x[:, 0]),
                "cos(4pi x)": lambda x: np.cos(2 * tau * x[:, 0])}
    return {"cos(2pi x1)": lambda x: np.cos(tau * x[:, 0]),
            "cos(2pi x2)": lambda x: np.cos(tau * x[:, 1]),
            "cos(2pi(x1+x2))": lambda x: np.cos(tau * (x[:, 0] + x[:, 1]))}


def invariance_defect(measure: PwMeasure, sys: PwiSystem, phi: Callable, order: int = 16):
    """|mu(phi) - mu(phi o T)| with T the given system, by quadrature on image regions."""
    cache: dict = {}
    plain = []
    pushed = []
    for r, d in measure.support:
        plain.append(float(d) * integrate(phi, r, order, cache))
        g = sys.local_map(sys.locate(interior_sample(r)))
        pushed.append(float(d) * _integrate_image(phi, g, r, order, cache))
    return abs(math.fsum(plain) - math.fsum(pushed))


# ------------------------------------------------------------ boundary mass

def _arc_union(centres, delta):
    """Union of arcs (c - delta, c + delta) on the circle, as sorted [a, b] in [0,1]."""
    if delta >= 0.5:
        return [(0.0, 1.0)]
    raw = []
    for c in centres:
        a, b = c - delta, c + delta
        if a < 0:
            raw += [(0.0, b), (a + 1.0, 1.0)]
        elif b > 1:
            raw += [(a, 1.0), (0.0, b - 1.0)]
        else:
            raw.append((a, b))
    raw.sort()
    out = []
    for a, b in raw:
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def boundary_mass(measure: PwMeasure, gamma: BoundarySet, delta: float, samples: int = 200_000,
                  seed: int = 0) -> float:
    """Mass of the delta-neighbourhood of the boundary set.

    Interval arithmetic for d = 1; seeded Monte-Carlo for d = 2.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if gamma.dim == 1:
        arcs = _arc_union([float(c) for c in gamma.points], delta)
        total = 0.0
        for r, d in measure.support:
            lo, hi = float(r.lo), float(r.hi)
            cover = sum(max(0.0, min(hi, b) - max(lo, a)) for a, b in arcs)
            total += float(d) * cover
        return min(total, float(measure.total_mass))
    rng = np.random.default_rng(seed)
    masses = np.array([float(d * region_measure(r)) for r, d in measure.support])
    counts = rng.multinomial(samples, masses / masses.sum())
    hit = 0
    for (r, _), n in zip(measure.support, counts):
        if n == 0:
            continue
        pts = _sample_polygon(r, n, rng)
        hit += int(np.count_nonzero(gamma.distance_many(pts) < delta))
    return hit / samples * float(measure.total_mass)


def _sample_polygon(r, n: int, rng) -> np.ndarray:
    v = np.array([[float(c) for c in p] for p in r.vertices])
    tri = [(v[0], v[i], v[i + 1]) for i in range(1, len(v) - 1)]
    areas = np.array([abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])) / 2 for a, b, c in tri])
    which = rng.choice(len(tri), size=n, p=areas / areas.sum())
    u = rng.random((n, 2))
    flipm = u.sum(axis=1) > 1
    u[flipm] = 1 - u[flipm]
    a = np.array([tri[k][0] for k in which])
    b = np.array([tri[k][1] for k in which])
    c = np.array([tri[k][2] for k in which])
    return a + u[:, :1] * (b - a) + u[:, 1:] * (c - a)


# ----------------------------------------------------------- rationalization

def _round_half_up(v: Fraction, q: int) -> Fraction:
    return Fraction(math.floor(v * q + Fraction(1, 2)), q)


def rationalize(sys: PwiSystem, q: int) -> PwiSystem:
    """Round every local translation to the nearest multiple of 1/q (halves go up)."""
    if q <= 0:
        raise ValueError("q must be a positive integer")
    if not sys.partition.explicit:
        raise ValueError("rationalize needs an explicit partition")
    maps = []
    for g in sys.maps:
        t = tuple(_round_half_up(to_fraction(c), q) for c in g.translation)
        maps.append(TorusIsometry(g.matrix, t, exact=True))
    part = sys.partition
    if not part.exact:
        part = Partition(part.dim, tuple(_exact_region(r) for r in part.regions))
    name = f"{sys.name or 'system'}@q={q}"
    return PwiSystem(part, maps, p=sys.p, name=name)


def _exact_region(r):
    if r.dim == 1:
        return Interval(to_fraction(r.lo), to_fraction(r.hi), r.include_lo, r.include_hi)
    return Polygon(tuple(tuple(to_fraction(c) for c in v) for v in r.vertices),
                   r.include_edges, r.include_vertices)


# ----------------------------------------------------------------- pipeline

@dataclass
class PipelineEntry:
    q: int
    semigroup_size: int | None = None
    num_regions: int | None = None
    cycles: list = field(default_factory=list)
    chosen_measure: PwMeasure | None = None
    integrals: dict = field(default_factory=dict)
    defects: dict = field(default_factory=dict)
    boundary_mass: dict = field(default_factory=dict)
    boundary_method: str = ""
    weak_distance: float | None = None
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.chosen_measure is not None

    def to_json(self) -> dict:
        return {"q": self.q, "semigroup_size": self.semigroup_size, "num_regions": self.num_regions,
                "cycles": [list(c) for c in self.cycles],
                "chosen_measure": self.chosen_measure.to_json() if self.chosen_measure else None,
                "integrals": self.integrals,
                "defects": [{"phi": k, "defect": v} for k, v in self.defects.items()],
                "boundary_mass": [{"delta": k, "mass": v} for k, v in self.boundary_mass.items()],
                "boundary_method": self.boundary_method,
                "weak_distance": self.weak_distance, "note": self.note}


@dataclass
class PipelineReport:
    entries: list

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, k):
        return self.entries[k]

    def max_defects(self) -> list:
        return [max(e.defects.values()) if e.ok else None for e in self.entries]

    def to_json(self) -> str:
        return json.dumps([e.to_json() for e in self.entries], indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["q", "semigroup_size", "num_regions", "num_cycles", "max_defect",
                    "weak_distance"] + [f"boundary_mass_{d:g}" for d in DELTA_GRID])
        for e in self.entries:
            if not e.ok:
                w.writerow([e.q, "", "", "", "", ""] + [""] * len(DELTA_GRID))
                continue
            w.writerow([e.q, e.semigroup_size, e.num_regions, len(e.cycles), max(e.defects.values()),
                        "" if e.weak_distance is None else e.weak_distance]
                       + [e.boundary_mass.get(d, "") for d in DELTA_GRID])
        return buf.getvalue()


def approximation_pipeline(sys: PwiSystem, q_list: Sequence[int], test_functions=None,
                           cap: int = DEFAULT_CAP, deltas: Sequence[float] = DELTA_GRID,
                           order: int = 16) -> PipelineReport:
    """Invariant measures of the rationalised systems and how invariant they are for T.

    ``test_functions`` maps names to vectorised periodic callables.
    Entries come out sorted by q.
    """
    if test_functions is None:
        test_functions = default_test_functions(sys.dim)
    elif not isinstance(test_functions, dict):
        test_functions = {f"phi{k}": f for k, f in enumerate(test_functions)}
    gamma = boundary_set(sys.partition)
    entries = []
    prev = None
    for q in sorted(q_list):
        entry = PipelineEntry(q)
        try:
            an = analyze(rationalize(sys, q), cap)
        except NotWeaklyPeriodic as exc:
            entry.note = f"skipped: {exc}"
            logger.info("q=%d skipped: %s", q, exc)
            entries.append(entry)
            continue
        k = an.selected()
        mu = an.measures[k]
        entry.semigroup_size = an.closure.size
        entry.num_regions = len(an.graph.regions)
        entry.cycles = [list(c) for c in an.graph.cycles]
        entry.chosen_measure = mu
        for name, phi in test_functions.items():
            entry.integrals[name] = mu.integrate(phi, order)
            entry.defects[name] = invariance_defect(mu, sys, phi, order)
        entry.boundary_method = "exact" if sys.dim == 1 else "monte-carlo"
        for dlt in deltas:
            entry.boundary_mass[dlt] = boundary_mass(mu, gamma, dlt)
        if prev is not None:
            entry.weak_distance = max(abs(entry.integrals[n] - prev.integrals[n]) for n in test_functions)
        prev = entry
        entries.append(entry)
    return PipelineReport(entries)
