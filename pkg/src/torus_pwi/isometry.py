"""Extendable torus isometries x -> Mx + v (mod 1) with M a signed permutation.

Every isometry of the torus for rho_p, p != 2, is a superposition of three
basic kinds: translations, coordinate flips x_i -> -x_i and coordinate
exchanges x_i <-> x_j.  Keeping the pair (M, v) with v reduced mod 1 gives a
canonical form, so exact isometries can be hashed and semigroups closed by
plain breadth-first search.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .torus import TorusPoint, reduce_mod1, to_fraction

logger = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_CAP",
    "GeneratorSet",
    "SemigroupClosure",
    "TorusIsometry",
    "WeakPeriodicity",
    "apply",
    "compose",
    "exchange",
    "flip",
    "from_basics",
    "identity",
    "inverse",
    "is_weakly_periodic",
    "order",
    "semigroup_closure",
    "symmetrize",
    "translation",
]

DEFAULT_CAP = 10**6


def _is_signed_permutation(m) -> bool:
    d = len(m)
    if any(len(row) != d for row in m):
        return False
    cols = [0] * d
    for row in m:
        nz = [j for j, a in enumerate(row) if a != 0]
        if len(nz) != 1 or row[nz[0]] not in (1, -1):
            return False
        cols[nz[0]] += 1
    return all(c == 1 for c in cols)


@dataclass(frozen=True)
class TorusIsometry:
    """The map x -> matrix @ x + translation (mod 1)."""

    matrix: tuple
    translation: tuple
    exact: bool = True

    def __post_init__(self):
        m = tuple(tuple(int(a) for a in row) for row in self.matrix)
        if not _is_signed_permutation(m):
            raise ValueError(f"not a signed permutation matrix: {m}")
        if len(self.translation) != len(m):
            raise ValueError("translation length does not match matrix size")
        if self.exact:
            t = reduce_mod1([to_fraction(c) for c in self.translation])
        else:
            t = reduce_mod1([float(c) for c in self.translation])
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "translation", t.coords)
        object.__setattr__(self, "exact", t.exact)

    @property
    def dim(self) -> int:
        return len(self.matrix)

    @property
    def matrix_array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=float)

    @property
    def translation_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.translation])

    def _perm(self):
        # image coordinate i reads x[j] with sign s
        return [next((j, row[j]) for j in range(self.dim) if row[j]) for row in self.matrix]

    def linear(self, x: Sequence) -> list:
        """matrix @ x without translation or reduction."""
        return [s * x[j] for j, s in self._perm()]

    def affine(self, x: Sequence) -> list:
        """matrix @ x + translation, not reduced (used for polytope images)."""
        return [a + b for a, b in zip(self.linear(x), self.translation)]

    def __call__(self, x):
        return apply(self, x)

    def __matmul__(self, other: "TorusIsometry") -> "TorusIsometry":
        return compose(self, other)

    def is_identity(self) -> bool:
        return self == identity(self.dim, exact=self.exact)

    def as_numeric(self) -> "TorusIsometry":
        return TorusIsometry(self.matrix, tuple(float(c) for c in self.translation), exact=False)

    def basic_kind(self):
        """Classify as a single basic isometry, or return None.

        Returns ``("translate", v)``, ``("flip", i)`` or ``("exchange", i, j)``.
        The identity counts as the zero translation.
        """
        d = self.dim
        eye = tuple(tuple(int(i == j) for j in range(d)) for i in range(d))
        if self.matrix == eye:
            return ("translate", self.translation)
        if any(self.translation):
            return None
        diffs = [i for i in range(d) if self.matrix[i] != eye[i]]
        if len(diffs) == 1 and self.matrix[diffs[0]][diffs[0]] == -1:
            return ("flip", diffs[0])
        if len(diffs) == 2:
            i, j = diffs
            if self.matrix[i][j] == 1 and self.matrix[j][i] == 1:
                return ("exchange", i, j)
        return None

    def to_json(self) -> dict:
        if self.exact:
            t = [str(c) for c in self.translation]
        else:
            t = [repr(float(c)) for c in self.translation]
        return {"matrix": [list(r) for r in self.matrix], "translation": t}

    @classmethod
    def from_json(cls, data: dict, exact: bool | None = None) -> "TorusIsometry":
        raw = data["translation"]
        if exact is None:
            exact = all(isinstance(c, (str, int)) and "." not in str(c) and "e" not in str(c).lower()
                        for c in raw)
        if exact:
            t = tuple(to_fraction(c) for c in raw)
        else:
            t = tuple(float(c) for c in raw)
        return cls(tuple(tuple(r) for r in data["matrix"]), t, exact=exact)

    def __repr__(self):
        t = ", ".join(str(c) for c in self.translation)
        return f"TorusIsometry(matrix={self.matrix}, translation=({t}))"


def identity(d: int, exact: bool = True) -> TorusIsometry:
    zero = Fraction(0) if exact else 0.0
    return TorusIsometry(tuple(tuple(int(i == j) for j in range(d)) for i in range(d)),
                         (zero,) * d, exact=exact)


def translation(v: Sequence, exact: bool | None = None) -> TorusIsometry:
    if exact is None:
        exact = not any(isinstance(c, (float, np.floating)) for c in v)
    v = tuple(to_fraction(c) for c in v) if exact else tuple(float(c) for c in v)
    d = len(v)
    return TorusIsometry(tuple(tuple(int(i == j) for j in range(d)) for i in range(d)), v, exact=exact)


def flip(axis: int, d: int, exact: bool = True) -> TorusIsometry:
    if not 0 <= axis < d:
        raise ValueError(f"axis {axis} out of range for d={d}")
    m = tuple(tuple((-1 if i == axis else 1) if i == j else 0 for j in range(d)) for i in range(d))
    return TorusIsometry(m, identity(d, exact).translation, exact=exact)


def exchange(i: int, j: int, d: int, exact: bool = True) -> TorusIsometry:
    if not (0 <= i < d and 0 <= j < d) or i == j:
        raise ValueError(f"bad exchange pair ({i}, {j}) for d={d}")
    perm = list(range(d))
    perm[i], perm[j] = j, i
    m = tuple(tuple(int(perm[r] == c) for c in range(d)) for r in range(d))
    return TorusIsometry(m, identity(d, exact).translation, exact=exact)


def _basic(desc, d: int, exact: bool) -> TorusIsometry:
    kind = desc[0]
    if kind == "translate":
        return translation(desc[1], exact=exact)
    if kind == "flip":
        return flip(desc[1], d, exact)
    if kind == "exchange":
        return exchange(desc[1], desc[2], d, exact)
    raise ValueError(f"unknown basic isometry {kind!r}")


def from_basics(factors: Sequence, dim: int | None = None, exact: bool | None = None) -> TorusIsometry:
    """Canonical form of a product of basic isometries applied left to right.

    ``factors`` holds tuples ``("translate", v)``, ``("flip", axis)`` or
    ``("exchange", i, j)``; the first one is applied first.
    """
    if not factors:
        raise ValueError("empty factor list")
    if dim is None:
        tr = [f for f in factors if f[0] == "translate"]
        if not tr:
            raise ValueError("dimension needed when no translation is given")
        dim = len(tr[0][1])
    if exact is None:
        exact = not any(f[0] == "translate" and any(isinstance(c, float) for c in f[1])
                        for f in factors)
    g = identity(dim, exact)
    for f in factors:
        g = compose(_basic(f, dim, exact), g)
    return g


def apply(g: TorusIsometry, x) -> TorusPoint:
    x = x if isinstance(x, TorusPoint) else reduce_mod1(x)
    if x.dim != g.dim:
        raise ValueError(f"dimension mismatch: map {g.dim}, point {x.dim}")
    if g.exact != x.exact:
        raise ValueError("exactness mismatch between isometry and point")
    return reduce_mod1(g.affine(x.coords))


def compose(a: TorusIsometry, b: TorusIsometry) -> TorusIsometry:
    """(a o b)(x) = a(b(x))."""
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    if a.exact != b.exact:
        raise ValueError("cannot compose exact and numeric isometries")
    d = a.dim
    m = tuple(tuple(sum(a.matrix[i][k] * b.matrix[k][j] for k in range(d)) for j in range(d))
              for i in range(d))
    return TorusIsometry(m, tuple(a.affine(b.translation)), exact=a.exact)


def inverse(g: TorusIsometry) -> TorusIsometry:
    d = g.dim
    mt = tuple(tuple(g.matrix[j][i] for j in range(d)) for i in range(d))
    h = TorusIsometry(mt, identity(d, g.exact).translation, exact=g.exact)
    return TorusIsometry(mt, tuple(-c for c in h.linear(g.translation)), exact=g.exact)


def order(g: TorusIsometry, cap: int = DEFAULT_CAP) -> int | None:
    """Smallest n >= 1 with g^n = id, or None when n would exceed ``cap``."""
    if not g.exact:
        raise ValueError("order is only defined for exact isometries")
    e = identity(g.dim)
    h = g
    for n in range(1, cap + 1):
        if h == e:
            return n
        h = compose(g, h)
    return None


@dataclass(frozen=True)
class GeneratorSet:
    generators: tuple
    symmetrized: bool = False

    def __post_init__(self):
        gens = tuple(self.generators)
        if not gens:
            raise ValueError("generator set must be nonempty")
        if len({g.dim for g in gens}) != 1 or len({g.exact for g in gens}) != 1:
            raise ValueError("generators must share dimension and exactness")
        object.__setattr__(self, "generators", gens)

    @property
    def dim(self) -> int:
        return self.generators[0].dim

    def __len__(self):
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)


def _as_generator_set(gens) -> GeneratorSet:
    if isinstance(gens, GeneratorSet):
        return gens
    if isinstance(gens, TorusIsometry):
        return GeneratorSet((gens,))
    return GeneratorSet(tuple(gens))


def symmetrize(gens) -> GeneratorSet:
    """Close a set of basic isometries under coordinate symmetries.

    A translation by v is joined by every permutation and sign change of v
    (signs taken mod 1), a flip by all d flips and an exchange by all
    d(d-1)/2 exchanges.  Order of first appearance is kept.
    """
    gens = _as_generator_set(gens)
    d = gens.dim
    if not gens.generators[0].exact:
        raise ValueError("symmetrize needs exact generators")
    out: dict[TorusIsometry, None] = {}
    for g in gens:
        kind = g.basic_kind()
        if kind is None:
            raise ValueError(f"{g!r} is not a single basic isometry")
        if kind[0] == "translate":
            v = kind[1]
            for perm in itertools.permutations(range(d)):
                for signs in itertools.product((1, -1), repeat=d):
                    out[translation([s * v[i] for s, i in zip(signs, perm)], exact=True)] = None
        elif kind[0] == "flip":
            for i in range(d):
                out[flip(i, d)] = None
        else:
            for i, j in itertools.combinations(range(d), 2):
                out[exchange(i, j, d)] = None
    return GeneratorSet(tuple(out), symmetrized=True)


def _encode(g: TorusIsometry, den: int):
    # signed permutation as (column, sign) per row; translation as integers mod den
    rows = tuple(next((j, a) for j, a in enumerate(row) if a) for row in g.matrix)
    return rows, tuple(int(c * den) % den for c in g.translation)


def _decode(code, den: int) -> TorusIsometry:
    rows, t = code
    d = len(rows)
    m = tuple(tuple(s if j == c else 0 for j in range(d)) for c, s in rows)
    return TorusIsometry(m, tuple(Fraction(c, den) for c in t))


def _compose_codes(a, b, den: int):
    (ra, ta), (rb, tb) = a, b
    rows = tuple((rb[c][0], s * rb[c][1]) for c, s in ra)
    t = tuple((s * tb[c] + v) % den for (c, s), v in zip(ra, ta))
    return rows, t


class SemigroupClosure:
    """Elements found by a closure run, in discovery order.

    Elements are held as integer codes over the common denominator of the
    generators and turned into :class:`TorusIsometry` values on first access.
    """

    def __init__(self, codes, generator_set: GeneratorSet, saturated: bool, denominator: int):
        self._codes = tuple(codes)
        self._set = None
        self._elements = None
        self.generator_set = generator_set
        self.saturated = saturated
        self.denominator = denominator

    @property
    def elements(self) -> tuple:
        if self._elements is None:
            self._elements = tuple(_decode(c, self.denominator) for c in self._codes)
        return self._elements

    @property
    def size(self) -> int:
        return len(self._codes)

    def __len__(self):
        return len(self._codes)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, g) -> bool:
        if not isinstance(g, TorusIsometry) or not g.exact or g.dim != self.generator_set.dim:
            return False
        if any(self.denominator % Fraction(c).denominator for c in g.translation):
            return False
        if self._set is None:
            self._set = set(self._codes)
        return _encode(g, self.denominator) in self._set

    def __repr__(self):
        return f"SemigroupClosure(size={self.size}, saturated={self.saturated})"


def semigroup_closure(gens, cap: int = DEFAULT_CAP) -> SemigroupClosure:
    """Breadth-first closure of the generators under left composition.

    Stops with ``saturated=False`` as soon as more than ``cap`` elements have
    been found.  Elements are listed in discovery order, which is
    deterministic.
    """
    gens = _as_generator_set(gens)
    if not gens.generators[0].exact:
        raise ValueError("semigroup closure needs exact generators")
    den = lcm_denominator(gens)
    gcodes = [_encode(g, den) for g in gens]
    seen: dict = {}
    frontier = []
    for c in gcodes:
        if c not in seen:
            seen[c] = None
            frontier.append(c)
    while frontier and len(seen) <= cap:
        nxt = []
        for e in frontier:
            for g in gcodes:
                h = _compose_codes(g, e, den)
                if h not in seen:
                    seen[h] = None
                    nxt.append(h)
            if len(seen) > cap:
                break
        frontier = nxt
    saturated = len(seen) <= cap
    if not saturated:
        logger.info("semigroup closure exceeded cap %d", cap)
    return SemigroupClosure(seen, gens, saturated, den)


@dataclass(frozen=True)
class WeakPeriodicity:
    certified: bool
    size: int | None
    closure: SemigroupClosure = field(repr=False, compare=False)

    def __bool__(self):
        return self.certified


def is_weakly_periodic(gens, cap: int = DEFAULT_CAP) -> WeakPeriodicity:
    """Certify a finite generated semigroup, or report the run inconclusive."""
    closure = semigroup_closure(gens, cap)
    if closure.saturated:
        return WeakPeriodicity(True, closure.size, closure)
    return WeakPeriodicity(False, None, closure)


def lcm_denominator(gens: Iterable[TorusIsometry]) -> int:
    out = 1
    for g in gens:
        for c in g.translation:
            out = math.lcm(out, Fraction(c).denominator)
    return out
