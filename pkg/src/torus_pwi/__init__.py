"""Torus piecewise isometries: exact invariant measures, simulation and rotation orbits."""
from __future__ import annotations

import logging

from .dynamics import (FocusingEstimate, GridMeasure, OrbitRecord, focusing_estimate, isolation_probe, orbit,
                       push_forward, return_time_profile)
from .isometry import (DEFAULT_CAP, GeneratorSet, SemigroupClosure, TorusIsometry, apply, compose, exchange, flip,
                       from_basics, identity, inverse, is_weakly_periodic, order, semigroup_closure, symmetrize,
                       translation)
from .measure import (NotWeaklyPeriodic, PwMeasure, RegionGraph, analyze, approximation_pipeline, boundary_mass,
                      check_exact_invariance, invariant_measures, rationalize, transition_graph)
from .partition import (BoundarySet, Interval, Partition, PartitionError, Polygon, boundary_set, interior_sample,
                        locate, pullback_boundary, refine_by_semigroup, region_measure, validate_partition)
from .rotation import (PlaneIsometrySpec, build_rotation_system, clearance_and_disks, fixed_points, hunt_periodic,
                       line_fixed_point, solve_period_n)
from .system import AffineMap, PwiSystem
from .torus import TorusPoint, reduce_mod1, torus_distance

logging.getLogger(__name__).addHandler(logging.NullHandler())

__version__ = "0.1.0"

__all__ = [
    "AffineMap", "BoundarySet", "DEFAULT_CAP", "FocusingEstimate", "GeneratorSet", "GridMeasure", "Interval",
    "NotWeaklyPeriodic", "OrbitRecord", "Partition", "PartitionError", "PlaneIsometrySpec", "Polygon",
    "PwMeasure", "PwiSystem", "RegionGraph", "SemigroupClosure", "TorusIsometry", "TorusPoint", "analyze",
    "apply", "approximation_pipeline", "boundary_mass", "boundary_set", "build_rotation_system",
    "check_exact_invariance", "clearance_and_disks", "compose", "exchange", "fixed_points", "flip",
    "focusing_estimate", "from_basics", "hunt_periodic", "identity", "interior_sample", "invariant_measures",
    "inverse", "is_weakly_periodic", "isolation_probe", "line_fixed_point", "locate", "orbit", "order",
    "pullback_boundary", "push_forward", "rationalize", "reduce_mod1", "refine_by_semigroup", "region_measure",
    "return_time_profile", "semigroup_closure", "solve_period_n", "symmetrize", "torus_distance",
    "transition_graph", "translation", "validate_partition",
]
