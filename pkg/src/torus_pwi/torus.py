"""Points of the unit torus [0,1)^d and the wrapped metrics rho_p.

Exact points carry :class:`fractions.Fraction` coordinates, numeric points
carry floats.  Everything downstream (isometries, partitions, simulators)
goes through :func:`reduce_mod1` so that the two modes never mix silently.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "INF",
    "SNAP",
    "TorusPoint",
    "check_metric",
    "reduce_mod1",
    "reduce_mod1_array",
    "torus_distance",
    "torus_distance_array",
    "to_fraction",
]

INF = math.inf
# numeric values this close below an integer are snapped onto it
SNAP = 1e-12

Scalar = Union[int, float, Fraction]


def check_metric(p) -> float:
    """Normalise a metric index; accepts ``"inf"`` and ``math.inf``."""
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity", "oo"):
            return INF
        p = float(p)
    if not (p >= 1):
        raise ValueError(f"metric index must be >= 1, got {p!r}")
    return float(p)


def to_fraction(value) -> Fraction:
    """Parse ``'p/q'`` strings, ints and Fractions; floats are converted exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(float(value))
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    raise TypeError(f"cannot convert {type(value).__name__} to Fraction")


def _is_exact(value) -> bool:
    return isinstance(value, (int, Fraction, np.integer)) and not isinstance(value, bool)


def _frac_part(value: float) -> float:
    r = value - math.floor(value)
    if r >= 1.0 - SNAP:
        r = 0.0
    return r


@dataclass(frozen=True)
class TorusPoint:
    """A point of the d-torus with all coordinates in [0,1)."""

    coords: tuple
    exact: bool

    def __post_init__(self):
        for c in self.coords:
            if not (0 <= c < 1):
                raise ValueError(f"coordinate {c!r} outside [0,1)")
            if self.exact != _is_exact(c):
                raise ValueError("exactness must be uniform across coordinates")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __len__(self):
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def as_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.coords])

    def __repr__(self):
        body = ", ".join(str(c) for c in self.coords)
        return f"TorusPoint(({body}), exact={self.exact})"


def reduce_mod1(v: Iterable[Scalar]) -> TorusPoint:
    """Subtract the floor from every coordinate.

    A vector made only of ints/Fractions gives an exact point; any float
    makes the whole point numeric.
    """
    if isinstance(v, TorusPoint):
        return v
    vals = list(v)
    if all(_is_exact(c) for c in vals):
        coords = []
        for c in vals:
            c = Fraction(c)
            coords.append(c - math.floor(c))
        return TorusPoint(tuple(coords), True)
    coords = []
    for c in vals:
        c = float(c)
        if not math.isfinite(c):
            raise ValueError(f"non-finite coordinate {c!r}")
        coords.append(_frac_part(c))
    return TorusPoint(tuple(coords), False)


def reduce_mod1_array(x: np.ndarray, snap: float = SNAP) -> np.ndarray:
    """Vectorised numeric reduction with the same snapping rule.

    ``snap=0`` keeps every representable value below 1 as it is.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite coordinate")
    r = x - np.floor(x)
    r[r >= 1.0 - snap] = 0.0
    return r


def _flat_norm(diff: Sequence[float], p: float) -> float:
    a = [abs(t) for t in diff]
    if p == INF:
        return max(a)
    if p == 1:
        return sum(a)
    if p == 2:
        return math.sqrt(sum(t * t for t in a))
    return sum(t ** p for t in a) ** (1.0 / p)


def torus_distance(x, y, p=2) -> float:
    """rho_p distance on the torus, minimised over offsets in {-1,0,1}^d."""
    x = reduce_mod1(x)
    y = reduce_mod1(y)
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {y.dim}")
    p = check_metric(p)
    # exact differences first, so the minimising offset is found without rounding
    diff = [a - b for a, b in zip(x.coords, y.coords)]
    best = math.inf
    for z in itertools.product((-1, 0, 1), repeat=x.dim):
        d = _flat_norm([float(t - s) for t, s in zip(diff, z)], p)
        best = min(best, d)
    return best


def torus_distance_array(x: np.ndarray, y: np.ndarray, p=2) -> np.ndarray:
    """Row-wise torus distance between point arrays of shape (m, d).

    For points in the fundamental domain each coordinate difference is
    wrapped independently, which is the same as minimising over offsets.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    p = check_metric(p)
    d = np.abs(x - y)
    d = np.minimum(d, 1.0 - d)
    if p == INF:
        return d.max(axis=-1)
    if p == 1:
        return d.sum(axis=-1)
    if p == 2:
        return np.sqrt((d * d).sum(axis=-1))
    return (d ** p).sum(axis=-1) ** (1.0 / p)
