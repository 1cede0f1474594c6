"""Draw the pi/e rotation's partition and its periodic orbits with invariant circles."""
from __future__ import annotations

import math
import sys
from pathlib import Path

from torus_pwi import gallery, render
from torus_pwi.rotation import clearance_and_disks, hunt_periodic


def main(out_dir: str = ".") -> None:
    out = Path(out_dir)
    s = gallery.build("rot-pi-over-e")
    render.partition_figure(s, "rotation by pi/e").save(out / "rotation_partition.svg")

    hunt = hunt_periodic(s.spec, 30, 100)
    orbits = [c for c in hunt.candidates if (c.clearance or 0) > 0]
    for c in orbits:
        rep = clearance_and_disks(s, c)
        print(f"period {c.period:3d}  z = ({c.z[0]:.6f}, {c.z[1]:.6f})  R = {c.clearance:.4f}  "
              f"disk error {rep.max_error:.1e}")
    render.circles_figure(s, orbits, title="periodic orbits, phi = pi/e").save(out / "rotation_circles.svg")
    print(f"phi = {s.spec.phi:.6f} (pi/e = {math.pi / math.e:.6f}); figures written to {out.resolve()}")


if __name__ == "__main__":
    main(*sys.argv[1:])
