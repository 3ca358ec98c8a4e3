"""Small 2D computational-geometry kernel used by the scene graph and motion layers.

Points are ``(x, y)`` tuples of floats; polygons are sequences of points
without a repeated closing vertex.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence, Tuple

Point = Tuple[float, float]
Segment = Tuple[Point, Point]

EPS = 1e-9


def cross(o: Point, a: Point, b: Point) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def dist(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def signed_area(poly: Sequence[Point]) -> float:
    n = len(poly)
    s = 0.0
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def polygon_centroid(poly: Sequence[Point]) -> Point:
    """Area centroid; falls back to the vertex mean for degenerate polygons."""
    a = signed_area(poly)
    if abs(a) < EPS:
        n = len(poly)
        return (sum(p[0] for p in poly) / n, sum(p[1] for p in poly) / n)
    cx = cy = 0.0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        f = x0 * y1 - x1 * y0
        cx += (x0 + x1) * f
        cy += (y0 + y1) * f
    return (cx / (6.0 * a), cy / (6.0 * a))


def bbox(poly: Iterable[Point]) -> Tuple[float, float, float, float]:
    xs, ys = zip(*poly)
    return (min(xs), min(ys), max(xs), max(ys))


def is_convex(poly: Sequence[Point]) -> bool:
    n = len(poly)
    if n < 3:
        return False
    sign = 0
    for i in range(n):
        c = cross(poly[i], poly[(i + 1) % n], poly[(i + 2) % n])
        if abs(c) < EPS:
            continue
        s = 1 if c > 0 else -1
        if sign == 0:
            sign = s
        elif s != sign:
            return False
    return sign != 0


def on_segment(p: Point, a: Point, b: Point, tol: float = EPS) -> bool:
    """True if ``p`` lies on the closed segment ``ab`` (within ``tol``)."""
    return point_segment_distance(p, a, b) <= tol


def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    L2 = dx * dx + dy * dy
    if L2 == 0.0:
        return math.hypot(p[0] - ax, p[1] - ay)
    t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / L2
    t = max(0.0, min(1.0, t))
    return math.hypot(p[0] - (ax + t * dx), p[1] - (ay + t * dy))


def point_in_polygon(p: Point, poly: Sequence[Point], tol: float = EPS) -> bool:
    """Closed point-in-polygon test: boundary points count as inside."""
    px, py = p
    n = len(poly)
    inside = False
    for i in range(n):
        a = poly[i - 1]
        b = poly[i]
        if point_segment_distance(p, a, b) <= tol:
            return True
        ay, by = a[1], b[1]
        if (ay > py) != (by > py):
            x_cross = a[0] + (py - ay) * (b[0] - a[0]) / (by - ay)
            if px < x_cross:
                inside = not inside
    return inside


def _orient(a: Point, b: Point, c: Point, tol: float = EPS) -> int:
    v = cross(a, b, c)
    if v > tol:
        return 1
    if v < -tol:
        return -1
    return 0


def segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point, tol: float = EPS) -> bool:
    """Closed segment intersection, touching endpoints included."""
    o1 = _orient(p1, p2, q1, tol)
    o2 = _orient(p1, p2, q2, tol)
    o3 = _orient(q1, q2, p1, tol)
    o4 = _orient(q1, q2, p2, tol)
    if o1 != o2 and o3 != o4 and o1 * o2 <= 0 and o3 * o4 <= 0:
        if o1 != 0 or o2 != 0:
            return True
    # collinear or touching cases
    if o1 == 0 and on_segment(q1, p1, p2, tol):
        return True
    if o2 == 0 and on_segment(q2, p1, p2, tol):
        return True
    if o3 == 0 and on_segment(p1, q1, q2, tol):
        return True
    if o4 == 0 and on_segment(p2, q1, q2, tol):
        return True
    return False


def segment_intersects_polygon(a: Point, b: Point, poly: Sequence[Point], tol: float = EPS) -> bool:
    """Closed segment vs. closed polygon (single-point contact counts)."""
    if point_in_polygon(a, poly, tol) or point_in_polygon(b, poly, tol):
        return True
    n = len(poly)
    for i in range(n):
        if segments_intersect(a, b, poly[i - 1], poly[i], tol):
            return True
    return False


def clip_segment_convex(a: Point, b: Point, poly: Sequence[Point], tol: float = EPS):
    """Cyrus-Beck clip of segment ``ab`` against a convex CCW polygon.

    Returns the parameter interval ``(t0, t1)`` of the part of the segment
    inside the closed polygon, or ``None``.
    """
    t0, t1 = 0.0, 1.0
    dx, dy = b[0] - a[0], b[1] - a[1]
    n = len(poly)
    for i in range(n):
        e0 = poly[i]
        e1 = poly[(i + 1) % n]
        ex, ey = e1[0] - e0[0], e1[1] - e0[1]
        L = math.hypot(ex, ey)
        if L == 0.0:
            continue
        # inward normal for CCW polygon
        nx, ny = -ey / L, ex / L
        num = (a[0] - e0[0]) * nx + (a[1] - e0[1]) * ny + tol
        den = dx * nx + dy * ny
        if abs(den) < 1e-15:
            if num < 0:
                return None
            continue
        t = -num / den
        if den > 0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
        if t0 > t1:
            return None
    return (t0, t1)


def is_simple(poly: Sequence[Point]) -> bool:
    """Brute-force self-intersection check over non-adjacent edge pairs."""
    n = len(poly)
    if n < 3:
        return False
    if abs(signed_area(poly)) < EPS:
        return False
    edges = [(poly[i], poly[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if segments_intersect(edges[i][0], edges[i][1], edges[j][0], edges[j][1]):
                return False
    return True


def polygon_distance(p: Sequence[Point], q: Sequence[Point]) -> float:
    """Minimum distance between two closed polygons (0 when they touch or overlap)."""
    n, m = len(p), len(q)
    for i in range(n):
        for j in range(m):
            if segments_intersect(p[i - 1], p[i], q[j - 1], q[j]):
                return 0.0
    if point_in_polygon(p[0], q) or point_in_polygon(q[0], p):
        return 0.0
    best = math.inf
    for i in range(n):
        for j in range(m):
            best = min(
                best,
                point_segment_distance(p[i], q[j - 1], q[j]),
                point_segment_distance(q[j], p[i - 1], p[i]),
            )
    return best


def sample_in_polygon(poly: Sequence[Point], rng) -> Point:
    """Uniform sample inside a polygon by bounding-box rejection."""
    x0, y0, x1, y1 = bbox(poly)
    for _ in range(10000):
        pt = (rng.uniform(x0, x1), rng.uniform(y0, y1))
        if point_in_polygon(pt, poly, tol=0.0):
            return pt
    return polygon_centroid(poly)


def wrap_angle(theta: float) -> float:
    """Map an angle into [-pi, pi)."""
    return (theta + math.pi) % (2.0 * math.pi) - math.pi
