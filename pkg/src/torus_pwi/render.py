"""SVG figures, PPM heatmaps and CSV tables.

Figures are drawn in the unit square with y pointing up.  Every primitive
carries a CSS class so that figures can be checked by counting elements:

* ``square``: the outline of the torus' fundamental domain
* ``partition-line``: region boundaries
* ``orbit-point``: points of periodic orbits or simulated trajectories
* ``invariant-circle``: circles around periodic orbits
* ``tick``: boundary points of a one-dimensional partition
"""
from __future__ import annotations

import csv
import io
import xml.etree.ElementTree as ET
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "PALETTE",
    "Figure",
    "circles_figure",
    "count_primitives",
    "grid_to_ppm",
    "partition_figure",
    "write_csv",
]

PALETTE = {
    "background": "#ffffff",
    "square": "#000000",
    "partition-line": "#1f3b73",
    "orbit-point": "#c0392b",
    "invariant-circle": "#27ae60",
    "tick": "#1f3b73",
    "trajectory": "#7f8c8d",
}

SIZE = 600
MARGIN = 20


class Figure:
    """A unit-square canvas that collects classed SVG primitives."""

    def __init__(self, title: str = "", size: int = SIZE):
        self.size = size
        total = size + 2 * MARGIN
        self.root = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(total),
                               height=str(total), viewBox=f"0 0 {total} {total}")
        if title:
            ET.SubElement(self.root, "title").text = title
        style = ET.SubElement(self.root, "style")
        style.text = " ".join(
            f".{k} {{ stroke: {v}; fill: none; }}" for k, v in PALETTE.items() if k != "background")
        style.text += f" .orbit-point {{ fill: {PALETTE['orbit-point']}; stroke: none; }}"
        style.text += f" .trajectory {{ fill: {PALETTE['trajectory']}; stroke: none; }}"
        ET.SubElement(self.root, "rect", x="0", y="0", width=str(total), height=str(total),
                      fill=PALETTE["background"])
        self.groups: dict = {}

    def _xy(self, p):
        return MARGIN + float(p[0]) * self.size, MARGIN + (1.0 - float(p[1])) * self.size

    def group(self, cls: str):
        if cls not in self.groups:
            self.groups[cls] = ET.SubElement(self.root, "g", id=cls)
        return self.groups[cls]

    def line(self, a, b, cls: str = "partition-line", width: float = 1.5):
        (x0, y0), (x1, y1) = self._xy(a), self._xy(b)
        ET.SubElement(self.group(cls), "line", {"class": cls, "x1": f"{x0:.3f}", "y1": f"{y0:.3f}",
                                                "x2": f"{x1:.3f}", "y2": f"{y1:.3f}",
                                                "stroke-width": str(width)})

    def square(self):
        c = ((0, 0), (1, 0), (1, 1), (0, 1))
        for i in range(4):
            self.line(c[i], c[(i + 1) % 4], "square", 2.0)

    def point(self, p, cls: str = "orbit-point", radius: float = 2.5):
        x, y = self._xy(p)
        ET.SubElement(self.group(cls), "circle", {"class": cls, "cx": f"{x:.3f}", "cy": f"{y:.3f}",
                                                  "r": str(radius)})

    def circle(self, centre, r: float, cls: str = "invariant-circle"):
        x, y = self._xy(centre)
        ET.SubElement(self.group(cls), "circle", {"class": cls, "cx": f"{x:.3f}", "cy": f"{y:.3f}",
                                                  "r": f"{r * self.size:.3f}", "stroke-width": "1"})

    def to_string(self) -> str:
        return ET.tostring(self.root, encoding="unicode")

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_string())
        return path


def _boundary_lines(sys) -> list:
    if hasattr(sys, "partition_lines"):
        return [tuple(tuple(float(c) for c in p) for p in seg) for seg in sys.partition_lines()]
    part = sys.partition
    if part.explicit:
        from .partition import boundary_set
        gamma = boundary_set(part)
        if part.dim == 1:
            return [((float(c),), None) for c in gamma.points]
        on_square = []
        for p, q in gamma.square_segments():
            if (p[0] == q[0] and p[0] in (0, 1)) or (p[1] == q[1] and p[1] in (0, 1)):
                continue
            on_square.append(((float(p[0]), float(p[1])), (float(q[0]), float(q[1]))))
        return on_square
    from .gallery import TRUNCATE
    segs = []
    loc = part.locator
    for n in range(1, TRUNCATE + 1):
        poly = loc.region_bounds(n)
        if poly is None:
            break
        for a, b in poly.edges():
            a, b = tuple(float(c) for c in a), tuple(float(c) for c in b)
            if (a[0] == b[0] and a[0] in (0.0, 1.0)) or (a[1] == b[1] and a[1] in (0.0, 1.0)):
                continue
            segs.append((a, b))
    return sorted(set(segs))


def partition_figure(sys, title: str = "", points: np.ndarray | None = None) -> Figure:
    """Fundamental domain with the system's region boundaries (and optional points)."""
    fig = Figure(title or (sys.name or ""))
    if sys.dim == 1:
        fig.line((0, 0.5), (1, 0.5), "square", 2.0)
        for (c,), _ in _boundary_lines(sys):
            fig.line((c, 0.47), (c, 0.53), "tick", 2.0)
        if points is not None:
            for x in np.asarray(points, dtype=float).reshape(-1):
                fig.point((x, 0.5), "orbit-point")
        return fig
    fig.square()
    for a, b in _boundary_lines(sys):
        fig.line(a, b)
    if points is not None:
        for p in np.asarray(points, dtype=float).reshape(-1, 2):
            fig.point(p, "trajectory", 1.0)
    return fig


def circles_figure(sys, candidates: Sequence, rings: Sequence[float] = (0.3, 0.6, 0.9),
                   title: str = "") -> Figure:
    """Partition lines, periodic orbits and concentric invariant circles.

    Circles have radii ``f * R`` for each ``f`` in ``rings``, where R is the
    orbit's clearance; orbits with zero clearance get points only.
    """
    fig = partition_figure(sys, title)
    for cand in candidates:
        R = cand.clearance or 0.0
        for z in np.asarray(cand.orbit, dtype=float).reshape(-1, 2):
            fig.point(z)
            if R > 0:
                for f in rings:
                    fig.circle(z, f * R)
    return fig


def count_primitives(svg: str) -> dict:
    """Number of elements per CSS class in an SVG document."""
    root = ET.fromstring(svg)
    counts: dict = {}
    for el in root.iter():
        cls = el.get("class")
        if cls:
            counts[cls] = counts.get(cls, 0) + 1
    return counts


def _heat(v: np.ndarray) -> np.ndarray:
    # black -> red -> yellow -> white
    r = np.clip(3 * v, 0, 1)
    g = np.clip(3 * v - 1, 0, 1)
    b = np.clip(3 * v - 2, 0, 1)
    return (np.stack([r, g, b], axis=-1) * 255).astype(np.uint8)


def grid_to_ppm(gm, path=None, log_scale: bool = True) -> bytes:
    """Binary PPM heatmap of a grid measure (rows drawn with y up)."""
    m = np.asarray(gm.counts, dtype=float)
    if m.ndim == 1:
        m = np.tile(m[:, None], (1, max(1, m.shape[0] // 16)))
    v = np.log1p(m) if log_scale else m
    top = v.max()
    v = v / top if top > 0 else v
    img = _heat(v.T[::-1])
    h, w = img.shape[:2]
    data = f"P6\n{w} {h}\n255\n".encode() + img.tobytes()
    if path is not None:
        Path(path).write_bytes(data)
    return data


def write_csv(rows: Iterable, header: Sequence[str], path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    for r in rows:
        w.writerow([str(c) if isinstance(c, Fraction) else c for c in r])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
