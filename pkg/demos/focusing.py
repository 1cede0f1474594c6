"""Focusing sets of the two interval translation maps with N = 4 pieces."""
from __future__ import annotations

from fractions import Fraction

from torus_pwi import gallery
from torus_pwi.dynamics import focusing_estimate

for label, s in [("eps = 1/100", gallery.itm_focusing(4, Fraction(1, 100))),
                 ("telescoping", gallery.itm_telescoping(4))]:
    fe = focusing_estimate(s, 10_000)
    spans = ", ".join(f"[{a:.4f}, {b:.4f})" for a, b in fe.intervals())
    print(f"{label:12s} measure {fe.estimated_measure:.4f}  on {spans}")
