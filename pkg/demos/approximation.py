"""Rational approximations of the golden rotation and of a two-branch map."""
from __future__ import annotations

import math

from torus_pwi import gallery
from torus_pwi.isometry import translation
from torus_pwi.measure import approximation_pipeline
from torus_pwi.partition import Partition
from torus_pwi.system import PwiSystem

golden = PwiSystem(Partition.intervals([0]), [translation((0.6180339887,))], name="golden")
print(approximation_pipeline(golden, [10, 100, 1000]).to_csv())

two = gallery.two_branch_itm(math.sqrt(2) - 1, math.pi - 3)
two = PwiSystem(two.partition, [g.as_numeric() for g in two.maps], name="two-branch")
print(approximation_pipeline(two, [10, 100, 1000]).to_csv())
