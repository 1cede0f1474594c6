"""Exact planar arrangement of rational segments.

Segments are split at every pairwise intersection (collinear overlaps
included), the pieces become edges of a planar graph, and bounded faces are
read off by half-edge traversal.  All predicates use Fractions, so there is
no tolerance anywhere.
"""
from __future__ import annotations

import functools
from collections import defaultdict
from fractions import Fraction

import numpy as np

__all__ = ["ArrangementError", "arrangement_faces", "cross", "polygon_area", "split_segments"]


class ArrangementError(RuntimeError):
    pass


def cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def polygon_area(pts) -> Fraction:
    """Signed shoelace area (positive for counterclockwise)."""
    s = Fraction(0)
    n = len(pts)
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return s / 2


def _param(p, q, r):
    # position of r along p->q (r assumed on the segment's line)
    dx, dy = q[0] - p[0], q[1] - p[1]
    if abs(dx) >= abs(dy):
        return (r[0] - p[0]) / dx
    return (r[1] - p[1]) / dy


def _intersections(s, t):
    """Points where closed segments s and t meet (0, 1 or 2 points)."""
    p, q = s
    a, b = t
    d1 = cross(a, b, p)
    d2 = cross(a, b, q)
    d3 = cross(p, q, a)
    d4 = cross(p, q, b)
    if d1 == 0 and d2 == 0:
        # collinear: overlap endpoints lying on the other segment
        out = []
        for r in (p, q):
            u = _param(a, b, r)
            if 0 <= u <= 1:
                out.append(r)
        for r in (a, b):
            u = _param(p, q, r)
            if 0 <= u <= 1:
                out.append(r)
        return out
    if (d1 > 0 and d2 > 0) or (d1 < 0 and d2 < 0):
        return []
    if (d3 > 0 and d4 > 0) or (d3 < 0 and d4 < 0):
        return []
    denom = d1 - d2
    if denom == 0:
        return []
    u = d1 / denom
    return [(p[0] + u * (q[0] - p[0]), p[1] + u * (q[1] - p[1]))]


def split_segments(segments):
    """Split segments at all mutual intersections; return unique edges.

    Edges are frozensets of two distinct endpoints.
    """
    segs = [(tuple(map(Fraction, s[0])), tuple(map(Fraction, s[1]))) for s in segments]
    segs = [s for s in segs if s[0] != s[1]]
    n = len(segs)
    cuts = [{s[0], s[1]} for s in segs]
    if n:
        box = np.array([[float(min(s[0][0], s[1][0])), float(max(s[0][0], s[1][0])),
                         float(min(s[0][1], s[1][1])), float(max(s[0][1], s[1][1]))] for s in segs])
        eps = 1e-9
        for i in range(n):
            cand = np.nonzero((box[i + 1:, 0] <= box[i, 1] + eps) & (box[i + 1:, 1] >= box[i, 0] - eps)
                              & (box[i + 1:, 2] <= box[i, 3] + eps) & (box[i + 1:, 3] >= box[i, 2] - eps))[0]
            for j in cand + i + 1:
                for r in _intersections(segs[i], segs[j]):
                    cuts[i].add(r)
                    cuts[j].add(r)
    edges = set()
    for s, pts in zip(segs, cuts):
        ordered = sorted(pts, key=lambda r: _param(s[0], s[1], r))
        for u, v in zip(ordered, ordered[1:]):
            if u != v:
                edges.add(frozenset((u, v)))
    return edges


def _quadrant(dx, dy):
    # quarter-turn sector of the direction, counterclockwise from +x
    if dx > 0 and dy >= 0:
        return 0
    if dx <= 0 and dy > 0:
        return 1
    if dx < 0 and dy <= 0:
        return 2
    return 3


def _angle_cmp(u, v):
    qu, qv = _quadrant(*u), _quadrant(*v)
    if qu != qv:
        return -1 if qu < qv else 1
    c = u[0] * v[1] - u[1] * v[0]
    if c > 0:
        return -1
    if c < 0:
        return 1
    return 0


def _drop_collinear(pts):
    out = list(pts)
    changed = True
    while changed and len(out) > 3:
        changed = False
        for i in range(len(out)):
            if cross(out[i - 1], out[i], out[(i + 1) % len(out)]) == 0:
                del out[i]
                changed = True
                break
    return out


def arrangement_faces(segments, drop_collinear: bool = True):
    """Bounded faces of the arrangement, as counterclockwise vertex lists.

    Raises :class:`ArrangementError` when the segment graph is not connected
    (faces with holes are not represented).
    """
    edges = split_segments(segments)
    out = defaultdict(list)
    for e in edges:
        u, v = tuple(e)
        out[u].append(v)
        out[v].append(u)
    order = {}
    for v, nbrs in out.items():
        key = functools.cmp_to_key(lambda a, b, v=v: _angle_cmp((a[0] - v[0], a[1] - v[1]),
                                                                (b[0] - v[0], b[1] - v[1])))
        nbrs.sort(key=key)
        order[v] = {w: k for k, w in enumerate(nbrs)}
    visited = set()
    faces = []
    outer = 0
    for u in out:
        for v in out[u]:
            if (u, v) in visited:
                continue
            cycle = []
            a, b = u, v
            while (a, b) not in visited:
                visited.add((a, b))
                cycle.append(a)
                nb = out[b]
                k = order[b][a]
                c = nb[(k - 1) % len(nb)]
                a, b = b, c
            area = polygon_area(cycle)
            if area > 0:
                faces.append(_drop_collinear(cycle) if drop_collinear else cycle)
            elif area < 0:
                outer += 1
    if outer > 1:
        raise ArrangementError(f"segment graph has {outer} components; holes are not supported")
    return faces
