"""Named example systems.

Names take optional parameters after a colon, e.g.
``ex-itm-focusing:N=4,eps=0.01`` or ``rotation:phi=pi/e,b1=0.3,b2=0.7,j=-1``.
Rational-looking values are parsed exactly (``0.01`` is 1/100).
"""
from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .isometry import TorusIsometry, flip, identity, translation
from .partition import Interval, Locator, Partition, Polygon
from .rotation import PlaneIsometrySpec, build_rotation_system
from .system import PwiSystem

__all__ = [
    "DiagonalBandLocator",
    "GalleryEntry",
    "StripLocator",
    "TRUNCATE",
    "build",
    "gallery",
    "gallery_names",
    "parse_angle",
]

TRUNCATE = 20


class StripLocator(Locator):
    """Vertical strips (1 - 2^{1-n}, 1 - 2^{-n}] x [0,1), n >= 1.

    The line x_1 = 0 belongs to no strip; it is sent to strip 1.
    """

    name = "dyadic-strips"
    dim = 2

    def index_many(self, x: np.ndarray) -> np.ndarray:
        gap = 1.0 - np.asarray(x, dtype=float)[:, 0]
        _, e = np.frexp(gap)
        return np.maximum(1, 1 - e).astype(np.int64)

    def index(self, x) -> int:
        gap = 1 - Fraction(x[0]) if not isinstance(x[0], float) else None
        if gap is None:
            return super().index(x)
        # smallest n with num * 2^n >= den
        num, den = gap.numerator, gap.denominator
        n = max(den.bit_length() - num.bit_length() - 1, 0)
        while num << n < den:
            n += 1
        return max(n, 1)

    def region_bounds(self, n: int):
        lo, hi = 1 - Fraction(2, 2 ** n), 1 - Fraction(1, 2 ** n)
        return Polygon(((lo, 0), (hi, 0), (hi, 1), (lo, 1)))


class DiagonalBandLocator(Locator):
    """Bands d(1 - 1/n) <= x_1 + ... + x_d < d(1 - 1/(n+1)), n >= 1."""

    name = "diagonal-bands"

    def __init__(self, d: int = 2):
        super().__init__(d=d)
        self.dim = d

    def index_many(self, x: np.ndarray) -> np.ndarray:
        d = self.dim
        s = np.asarray(x, dtype=float).sum(axis=1)
        n = np.floor(d / (d - s)).astype(np.int64)
        # guard against rounding at the band edges
        n = np.where(s < d * (1 - 1 / n), n - 1, n)
        n = np.where(s >= d * (1 - 1 / (n + 1)), n + 1, n)
        return np.maximum(n, 1)

    def index(self, x) -> int:
        if any(isinstance(c, float) for c in x):
            return super().index(x)
        d = self.dim
        s = sum(Fraction(c) for c in x)
        n = math.floor(Fraction(d) / (d - s))
        return max(n, 1)

    def region_bounds(self, n: int):
        if self.dim != 2:
            return None
        lo, hi = 2 * (1 - Fraction(1, n)), 2 * (1 - Fraction(1, n + 1))
        return _band_polygon(lo, hi)


def _band_polygon(lo, hi):
    # {lo <= x + y < hi} within the unit square
    pts = []
    for s in (lo, hi):
        for p in ((s, 0), (0, s), (s - 1, 1), (1, s - 1)):
            if 0 <= p[0] <= 1 and 0 <= p[1] <= 1:
                pts.append(p)
    pts += [c for c in ((0, 0), (1, 0), (1, 1), (0, 1)) if lo <= c[0] + c[1] <= hi]
    pts = sorted(set((Fraction(a), Fraction(b)) for a, b in pts))
    cx = sum(p[0] for p in pts) / len(pts)
    cy = sum(p[1] for p in pts) / len(pts)
    pts.sort(key=lambda p: math.atan2(float(p[1] - cy), float(p[0] - cx)))
    return Polygon(tuple(pts))


# ------------------------------------------------------------------ systems

def strip_escape() -> PwiSystem:
    def rule(n):
        return translation((Fraction(1, 2 ** (n + 1)), Fraction(0)))
    # dyadic steps are exact in binary floating point, so no snapping is needed;
    # snapping would wrap orbits that creep towards x_1 = 1 back to 0
    return PwiSystem(Partition(2, locator=StripLocator()), rule, name="ex-strip-escape", snap=0.0)


def diagonal_focus(d: int = 2) -> PwiSystem:
    def rule(n):
        return translation((Fraction(1, 2 * n * (n + 1)),) * d)
    return PwiSystem(Partition(d, locator=DiagonalBandLocator(d)), rule, name="ex-diagonal-focus")


def itm(alphas, name: str) -> PwiSystem:
    n = len(alphas)
    part = Partition.intervals([Fraction(k, n) for k in range(n)])
    return PwiSystem(part, [translation((a,)) for a in alphas], name=name)


def itm_focusing(N: int = 4, eps=Fraction(1, 100)) -> PwiSystem:
    if N < 3:
        raise ValueError("N must be at least 3")
    alphas = [eps, -eps] + [Fraction(-1, N)] * (N - 2)
    return itm(alphas, f"ex-itm-focusing:N={N},eps={eps}")


def itm_telescoping(N: int = 4) -> PwiSystem:
    alphas = [Fraction(0)] + [Fraction(-1, N)] * (N - 1)
    return itm(alphas, f"ex-itm-telescoping:N={N}")


def flip_isolated() -> PwiSystem:
    q = Fraction(1, 4)
    regions = (Interval(0, q), Interval(q, 2 * q), Interval(2 * q, 3 * q, True, True),
               Interval(3 * q, 1, False, False))
    maps = [translation((3 * q,)), flip(0, 1), translation((-2 * q,)), identity(1)]
    return PwiSystem(Partition(1, regions), maps, name="ex-flip-isolated")


def circle_rotation(alpha=Fraction(1, 3)) -> PwiSystem:
    return PwiSystem(Partition.intervals([0]), [translation((alpha,))], name=f"circle-rotation:alpha={alpha}")


def two_branch_itm(alpha, beta, cut=Fraction(1, 2)) -> PwiSystem:
    part = Partition.intervals([0, cut])
    return PwiSystem(part, [translation((alpha,)), translation((beta,))],
                     name=f"itm2:alpha={alpha},beta={beta},cut={cut}")


# ----------------------------------------------------------------- parsing

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg, ast.UAdd: operator.pos}
_NAMES = {"pi": math.pi, "e": math.e}


def parse_angle(text) -> float:
    """Evaluate a small arithmetic expression in pi and e (``"pi/e"``, ``"-pi/2"``)."""
    if isinstance(text, (int, float)):
        return float(text)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(f"cannot parse angle {text!r}")
    return ev(ast.parse(str(text).strip(), mode="eval"))


def _exact(text) -> Fraction:
    return Fraction(str(text).strip())


@dataclass
class GalleryEntry:
    name: str
    description: str
    builder: Callable
    defaults: dict = field(default_factory=dict)
    parsers: dict = field(default_factory=dict)
    rotation: bool = False

    def build(self, **params):
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise ValueError(f"unknown parameters for {self.name}: {sorted(unknown)}")
        args = dict(self.defaults)
        for k, v in params.items():
            args[k] = self.parsers.get(k, lambda s: s)(v)
        return self.builder(**args)


def _rotation(phi=math.pi / math.e, b1=0.0, b2=0.0, j=1, name="rotation"):
    spec = PlaneIsometrySpec(int(j), phi, (b1, b2))
    return build_rotation_system(spec, name=name)


_ENTRIES = [
    GalleryEntry("ex-strip-escape", "dyadic strips pushed towards x_1 = 1; no invariant measure",
                 strip_escape),
    GalleryEntry("ex-diagonal-focus", "diagonal bands translated along (1,...,1)",
                 diagonal_focus, {"d": 2}, {"d": int}),
    GalleryEntry("ex-itm-focusing", "circle ITM with alpha = (eps, -eps, -1/N, ...)",
                 itm_focusing, {"N": 4, "eps": Fraction(1, 100)}, {"N": int, "eps": _exact}),
    GalleryEntry("ex-itm-telescoping", "circle ITM with alpha = (0, -1/N, ..., -1/N)",
                 itm_telescoping, {"N": 4}, {"N": int}),
    GalleryEntry("ex-flip-isolated", "four arcs with maps x+3/4, 1-x, x-1/2, x", flip_isolated),
    GalleryEntry("circle-rotation", "x -> x + alpha on the circle", circle_rotation,
                 {"alpha": Fraction(1, 3)}, {"alpha": _exact}),
    GalleryEntry("itm2", "two-branch ITM x+alpha on [0,cut), x+beta on [cut,1)", two_branch_itm,
                 {"alpha": Fraction(1, 3), "beta": Fraction(1, 2), "cut": Fraction(1, 2)},
                 {"alpha": _exact, "beta": _exact, "cut": _exact}),
    GalleryEntry("rot-pi-over-e", "plane rotation by pi/e restricted to the torus",
                 lambda: _rotation(name="rot-pi-over-e"), rotation=True),
    GalleryEntry("rotation", "custom j R(phi) x + b mod 1", _rotation,
                 {"phi": math.pi / math.e, "b1": 0.0, "b2": 0.0, "j": 1},
                 {"phi": parse_angle, "b1": lambda s: float(_exact(s)), "b2": lambda s: float(_exact(s)),
                  "j": int}, rotation=True),
]
_BY_NAME = {e.name: e for e in _ENTRIES}


def gallery_names() -> list:
    return [e.name for e in _ENTRIES]


def _split(spec: str):
    name, _, rest = spec.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            if not item:
                continue
            k, eq, v = item.partition("=")
            if not eq:
                raise ValueError(f"bad parameter {item!r} in {spec!r}")
            params[k.strip()] = v.strip()
    return name.strip(), params


def gallery(spec: str) -> GalleryEntry:
    name, _ = _split(spec)
    if name not in _BY_NAME:
        raise KeyError(f"unknown gallery system {name!r}")
    return _BY_NAME[name]


def build(spec: str):
    """Build the named system (``name`` or ``name:key=value,...``)."""
    name, params = _split(spec)
    return gallery(name).build(**params)
