"""Piecewise isometries: a partition plus one local map per region."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .isometry import GeneratorSet, TorusIsometry
from .partition import Partition, locate
from .torus import SNAP, TorusPoint, check_metric, reduce_mod1, reduce_mod1_array, to_fraction

__all__ = ["AffineMap", "PwiSystem"]


@dataclass(frozen=True)
class AffineMap:
    """Numeric map x -> matrix @ x + offset (mod 1) with an arbitrary matrix.

    Used for local rotations, which have no exact canonical form.
    """

    matrix: np.ndarray
    offset: np.ndarray

    exact = False

    @property
    def dim(self) -> int:
        return len(self.offset)

    @property
    def matrix_array(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=float)

    @property
    def translation_array(self) -> np.ndarray:
        return np.asarray(self.offset, dtype=float)

    def affine(self, x):
        return self.matrix_array @ np.asarray(x, dtype=float) + self.translation_array


class PwiSystem:
    """The map T: x -> g_k(x) for x in region k.

    ``snap`` is the mod-1 snapping threshold of numeric steps.  ``maps`` is either a sequence indexed like the partition regions or, for
    locator partitions, a callable ``index -> map``.  Local maps are
    :class:`TorusIsometry` (exact or numeric) or :class:`AffineMap`.
    """

    def __init__(self, partition: Partition, maps, p=2, name: str | None = None, snap: float = SNAP):
        self.partition = partition
        self.snap = snap
        self.p = check_metric(p)
        self.name = name
        if callable(maps) and not isinstance(maps, (list, tuple)):
            self._map_rule: Callable | None = maps
            self.maps: tuple = ()
        else:
            self._map_rule = None
            self.maps = tuple(maps)
            if partition.explicit and len(self.maps) != len(partition.regions):
                raise ValueError(f"{len(self.maps)} local maps for {len(partition.regions)} regions")
        self._cache: dict = {}

    @property
    def dim(self) -> int:
        return self.partition.dim

    @property
    def exact(self) -> bool:
        return (self.partition.exact and self._map_rule is None
                and all(isinstance(g, TorusIsometry) and g.exact for g in self.maps))

    def local_map(self, k: int):
        if self._map_rule is not None:
            g = self._cache.get(k)
            if g is None:
                g = self._cache[k] = self._map_rule(k)
            return g
        return self.maps[k]

    def locate(self, x) -> int:
        return locate(self.partition, x)

    def __call__(self, x) -> TorusPoint:
        return self.apply(x)

    def apply(self, x) -> TorusPoint:
        """One step of T on a single point (exact points stay exact)."""
        x = x if isinstance(x, TorusPoint) else reduce_mod1(x)
        g = self.local_map(self.locate(x))
        if isinstance(g, TorusIsometry) and g.exact and x.exact:
            return reduce_mod1(g.affine(x.coords))
        y = reduce_mod1_array(_affine_float(g, np.array([x.as_array()])), self.snap)[0]
        return TorusPoint(tuple(float(c) for c in y), False)

    def step_many(self, x: np.ndarray, return_index: bool = False):
        """Vectorised numeric step; optionally also the region indices."""
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        idx = self.partition.locate_many(x)
        y = np.empty_like(x)
        for k in np.unique(idx):
            sel = idx == k
            y[sel] = _affine_float(self.local_map(int(k)), x[sel])
        y = reduce_mod1_array(y, self.snap)
        if return_index:
            return y, idx
        return y

    def generators(self) -> GeneratorSet:
        """Distinct local isometries, in region order."""
        if not self.maps:
            raise ValueError("generators need an explicit list of local maps")
        seen = {}
        for g in self.maps:
            if not isinstance(g, TorusIsometry):
                raise TypeError("only torus isometries generate semigroups")
            seen.setdefault(g, None)
        return GeneratorSet(tuple(seen))

    def boundary_distance_many(self, x: np.ndarray) -> np.ndarray:
        from .partition import boundary_set
        key = "_boundary"
        if key not in self._cache:
            self._cache[key] = boundary_set(self.partition)
        return self._cache[key].distance_many(x)

    def to_json(self) -> dict:
        if self._map_rule is not None:
            raise ValueError("rule-based systems serialise through their gallery name")
        out = {"dim": self.dim, "p": "inf" if self.p == np.inf else self.p,
               "mode": "exact" if self.exact else "numeric",
               "partition": self.partition.to_json(),
               "maps": [g.to_json() for g in self.maps]}
        if self.name:
            out["name"] = self.name
        return out

    @classmethod
    def from_json(cls, data: dict) -> "PwiSystem":
        from .partition import region_from_json
        part = data["partition"]
        if "locator" in part:
            raise ValueError("locator partitions are built from the gallery")
        exact = data.get("mode", "exact") == "exact"
        regions = [region_from_json(r) for r in part["regions"]]
        partition = Partition(int(part.get("dim", data.get("dim"))), tuple(regions))
        maps = [TorusIsometry.from_json(m, exact=exact) for m in data["maps"]]
        return cls(partition, maps, p=data.get("p", 2), name=data.get("name"))

    def __repr__(self):
        label = self.name or "PwiSystem"
        n = len(self.partition.regions) if self.partition.explicit else "countable"
        return f"<{label}: d={self.dim}, regions={n}, exact={self.exact}>"


def _affine_float(g, x: np.ndarray) -> np.ndarray:
    m = g.matrix_array
    t = g.translation_array
    return x @ m.T + t


def exact_point(x: Sequence) -> TorusPoint:
    return reduce_mod1([to_fraction(c) for c in x])
