"""Push uniform mass through the two escape systems and watch where it goes."""
from __future__ import annotations

import numpy as np

from torus_pwi import gallery
from torus_pwi.dynamics import GridMeasure, push_forward
from torus_pwi.torus import torus_distance_array

strips = gallery.strip_escape()
bands = gallery.diagonal_focus(2)
for steps in (0, 10, 30, 50):
    a = push_forward(strips, GridMeasure.uniform((1024, 1)), steps, exact=True)
    b = push_forward(bands, GridMeasure.uniform((128, 128)), steps)
    left = a.mass_where(lambda c: np.minimum(c[:, 0], 1 - c[:, 0]) >= 0.05)
    far = b.mass_where(lambda c: torus_distance_array(c, np.zeros_like(c)) >= 0.05)
    print(f"n = {steps:2d}   strips: mass away from x1 = 0  {left:.4f}   bands: mass away from 0  {far:.4f}")
