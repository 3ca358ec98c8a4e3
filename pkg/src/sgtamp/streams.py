"""Samplers and motion planners behind the optimistic stream facts.

* pose sampling inside a place and around an object (inspection / grasp),
* A* routing over the places layer with an avoid set,
* trajectory refinement along the route (straight waypoint chain, RRT repair),
* closed-disc collision checks for a point robot.
"""
from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from . import geometry as geo
from .geometry import Point
from .scene_graph import ObjectNode, SceneGraph

MAX_POSE_ATTEMPTS = 200
R_INSPECT = 1.5
CLEARANCE = 0.2
RRT_NODES = 2000
RRT_STEP = 0.25
RRT_GOAL_BIAS = 0.1
COVER_TOL = 1e-7


@dataclass(frozen=True)
class Pose:
    position: Point
    heading: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        object.__setattr__(self, "heading", geo.wrap_angle(float(self.heading)))

    def to_dict(self):
        return {"position": list(self.position), "heading": self.heading}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["position"]), d.get("heading", 0.0))


@dataclass(frozen=True)
class Disc:
    center: Point
    radius: float
    object_id: str


@dataclass(frozen=True)
class ObstacleSet:
    discs: Tuple[Disc, ...] = ()
    avoid_places: FrozenSet[str] = frozenset()

    def without(self, object_id: str) -> "ObstacleSet":
        return ObstacleSet(tuple(d for d in self.discs if d.object_id != object_id), self.avoid_places)

    def with_avoid(self, places: Iterable[str]) -> "ObstacleSet":
        return ObstacleSet(self.discs, frozenset(places))

    def key(self):
        return (tuple((d.object_id, d.center, d.radius) for d in self.discs), tuple(sorted(self.avoid_places)))


@dataclass(frozen=True)
class Trajectory:
    waypoints: Tuple[Pose, ...]
    place_sequence: Tuple[str, ...]

    @property
    def start(self) -> Pose:
        return self.waypoints[0]

    @property
    def end(self) -> Pose:
        return self.waypoints[-1]

    def segments(self) -> List[Tuple[Point, Point]]:
        pts = [w.position for w in self.waypoints]
        if len(pts) == 1:
            return [(pts[0], pts[0])]
        return list(zip(pts[:-1], pts[1:]))

    @property
    def length(self) -> float:
        return sum(geo.dist(a, b) for a, b in self.segments())

    def to_dict(self):
        return {"waypoints": [w.to_dict() for w in self.waypoints], "place_sequence": list(self.place_sequence)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(Pose.from_dict(w) for w in d["waypoints"]), tuple(d["place_sequence"]))


@dataclass
class MotionFailure:
    reason: str                      # no_route | blocked | start_in_collision | goal_in_collision
    blockers: FrozenSet[str] = frozenset()
    detail: str = ""
    optimistic: Optional[Tuple[Point, ...]] = None


# ------------------------------------------------------------------ collision
def disc_of(obj: ObjectNode, clearance: float = CLEARANCE, position: Optional[Point] = None) -> Disc:
    r = obj.inflated_radius if obj.suspicious else obj.radius
    return Disc(position or obj.position, r + clearance, obj.id)


def point_free(p: Point, discs: Sequence[Disc]) -> bool:
    return all(geo.dist(p, d.center) > d.radius for d in discs)


def segment_free(segment: Tuple[Point, Point], discs: Sequence[Disc]) -> bool:
    """True iff the closed segment stays strictly farther than each disc's radius
    from the disc's centre (discs are closed)."""
    a, b = segment
    return all(geo.point_segment_distance(d.center, a, b) > d.radius for d in discs)


def discs_hit(segment: Tuple[Point, Point], discs: Sequence[Disc]) -> Set[str]:
    a, b = segment
    return {d.object_id for d in discs if geo.point_segment_distance(d.center, a, b) <= d.radius}


def segment_covered(graph: SceneGraph, a: Point, b: Point, allowed: Optional[Set[str]] = None,
                    forbidden: FrozenSet[str] = frozenset()) -> bool:
    """The segment lies inside the union of navigable places (restricted to
    ``allowed`` when given) and touches no ``forbidden`` place."""
    cov = graph.segment_coverage((a, b))
    ivs = []
    for pid, t0, t1 in cov:
        if pid in forbidden:
            return False
        if allowed is None or pid in allowed:
            ivs.append((t0, t1))
    if not ivs:
        return False
    ivs.sort()
    cur = 0.0
    for t0, t1 in ivs:
        if t0 > cur + COVER_TOL:
            return False
        cur = max(cur, t1)
    return cur >= 1.0 - COVER_TOL


def place_sequence(graph: SceneGraph, points: Sequence[Point]) -> Tuple[str, ...]:
    """Places met by the polyline, in first-visit order."""
    seen: List[str] = []
    segs = list(zip(points[:-1], points[1:])) if len(points) > 1 else [(points[0], points[0])]
    for a, b in segs:
        for pid, _ in graph.segment_place_crossings((a, b)):
            if pid not in seen:
                seen.append(pid)
    return tuple(seen)


def make_trajectory(graph: SceneGraph, points: Sequence[Point], final_heading: Optional[float] = None,
                    start_heading: Optional[float] = None) -> Trajectory:
    poses = []
    n = len(points)
    for i, p in enumerate(points):
        if i == 0 and start_heading is not None:
            h = start_heading
        elif i == n - 1 and final_heading is not None:
            h = final_heading
        elif i + 1 < n:
            h = math.atan2(points[i + 1][1] - p[1], points[i + 1][0] - p[0])
        else:
            h = math.atan2(p[1] - points[i - 1][1], p[0] - points[i - 1][0]) if n > 1 else 0.0
        poses.append(Pose(p, h))
    return Trajectory(tuple(poses), place_sequence(graph, points))


# ------------------------------------------------------------------ samplers
def _pose_ok(graph, p: Point, place: str, obstacles: ObstacleSet) -> bool:
    if not point_free(p, obstacles.discs):
        return False
    hits = graph.places_containing(p)
    if place not in hits:
        return False
    return not any(h in obstacles.avoid_places and h != place for h in hits)


def sample_pose_in_place(graph: SceneGraph, place: str, obstacles: ObstacleSet, rng: random.Random,
                         max_attempts: int = MAX_POSE_ATTEMPTS) -> Optional[Pose]:
    """Rejection-sample a pose inside ``place``, clear of every disc and of
    avoided places other than ``place`` itself. None after ``max_attempts``."""
    poly = graph.places[place].polygon
    x0, y0, x1, y1 = geo.bbox(poly)
    for _ in range(max_attempts):
        p = (rng.uniform(x0, x1), rng.uniform(y0, y1))
        h = rng.uniform(-math.pi, math.pi)
        if geo.point_in_polygon(p, poly, tol=0.0) and _pose_ok(graph, p, place, obstacles):
            return Pose(p, h)
    return None


def sample_object_pose(graph: SceneGraph, obj: ObjectNode, obstacles: ObstacleSet, rng: random.Random,
                       r_max: float = R_INSPECT, clearance: float = CLEARANCE, place: Optional[str] = None,
                       position: Optional[Point] = None, max_attempts: int = MAX_POSE_ATTEMPTS,
                       reachable_from: Optional[Callable[[Pose], bool]] = None) -> Optional[Pose]:
    """Pose facing ``obj`` at distance in (radius + clearance, r_max].

    The object's own inflated disc is ignored (the robot may stand inside its
    hazard zone to inspect it); all other discs are respected. The pose must
    lie in ``place`` (default: the object's place).
    """
    center = position or obj.position
    place = place or obj.place
    others = obstacles.without(obj.id)
    r_min = obj.radius + clearance
    if r_min >= r_max:
        return None
    for _ in range(max_attempts):
        d = rng.uniform(r_min, r_max)
        if d <= r_min:
            continue
        th = rng.uniform(-math.pi, math.pi)
        p = (center[0] + d * math.cos(th), center[1] + d * math.sin(th))
        if not _pose_ok(graph, p, place, others):
            continue
        pose = Pose(p, math.atan2(center[1] - p[1], center[0] - p[0]))
        if reachable_from is not None and not reachable_from(pose):
            continue
        return pose
    return None


def sample_inspect_pose(graph: SceneGraph, obj: ObjectNode, obstacles: ObstacleSet, rng: random.Random,
                        r_inspect: float = R_INSPECT, clearance: float = CLEARANCE, **kw) -> Optional[Pose]:
    return sample_object_pose(graph, obj, obstacles, rng, r_inspect, clearance, **kw)


# ------------------------------------------------------------------ route
@dataclass
class RouteResult:
    places: Optional[Tuple[str, ...]]
    reason: str = ""

    def __bool__(self):
        return self.places is not None


def route(graph: SceneGraph, start: str, goal: str, avoid: Iterable[str] = ()) -> RouteResult:
    """A* over place centroids (Euclidean edge costs, straight-line heuristic).
    Avoided places are never entered except the endpoints."""
    avoid = set(avoid) - {start, goal}
    res = _astar(graph, start, goal, avoid)
    if res is not None:
        return RouteResult(tuple(res))
    if avoid and _astar(graph, start, goal, set()) is not None:
        return RouteResult(None, "blocked_by_avoid")
    return RouteResult(None, "disconnected")


def _astar(graph, start, goal, avoid):
    if start == goal:
        return [start]
    cen = {pid: p.centroid for pid, p in graph.places.items()}
    gpos = cen[goal]
    g = {start: 0.0}
    parent = {start: None}
    heap = [(geo.dist(cen[start], gpos), 0, start)]
    counter = 1
    closed = set()
    while heap:
        _, _, u = heapq.heappop(heap)
        if u in closed:
            continue
        if u == goal:
            path = [u]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            return path[::-1]
        closed.add(u)
        for v in graph.neighbors(u):
            if v in avoid or v in closed:
                continue
            nd = g[u] + geo.dist(cen[u], cen[v])
            if nd < g.get(v, math.inf) - 1e-12:
                g[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd + geo.dist(cen[v], gpos), counter, v))
                counter += 1
    return None


def route_length(graph: SceneGraph, places: Sequence[str]) -> float:
    cen = [graph.places[p].centroid for p in places]
    return sum(geo.dist(a, b) for a, b in zip(cen[:-1], cen[1:]))


# ------------------------------------------------------------------ refine
@dataclass
class MotionParams:
    clearance: float = CLEARANCE
    rrt_nodes: int = RRT_NODES
    rrt_step: float = RRT_STEP
    rrt_goal_bias: float = RRT_GOAL_BIAS
    reroutes: int = 12


class _Region:
    def __init__(self, graph: SceneGraph, places: Sequence[str], forbidden: FrozenSet[str]):
        self.graph = graph
        self.allowed = set(places) - set(forbidden)
        self.forbidden = forbidden
        self.polys = [graph.places[p].polygon for p in sorted(self.allowed)]
        areas = [abs(geo.signed_area(p)) for p in self.polys]
        tot = sum(areas)
        self.cum = np.cumsum(areas) / tot if tot > 0 else None

    def sample(self, rng) -> Point:
        k = int(np.searchsorted(self.cum, rng.random(), side="right"))
        k = min(k, len(self.polys) - 1)
        return geo.sample_in_polygon(self.polys[k], rng)

    def contains(self, p: Point) -> bool:
        hits = self.graph.places_containing(p)
        if any(h in self.forbidden for h in hits):
            return False
        return any(h in self.allowed for h in hits)

    def segment_ok(self, a, b, discs) -> bool:
        return segment_free((a, b), discs) and segment_covered(self.graph, a, b, self.allowed, self.forbidden)


class _FreeGrid:
    """Raster of the region's free space (places minus forbidden places) at
    resolution ``res``; discs are carved out per query."""

    def __init__(self, region: _Region, res: float = 0.1):
        from matplotlib.path import Path

        self.res = res
        xs = [v[0] for poly in region.polys for v in poly]
        ys = [v[1] for poly in region.polys for v in poly]
        self.x0, self.y0 = min(xs), min(ys)
        self.nx = max(1, int(math.ceil((max(xs) - self.x0) / res)) + 1)
        self.ny = max(1, int(math.ceil((max(ys) - self.y0) / res)) + 1)
        self.too_big = self.nx * self.ny > 4_000_000
        if self.too_big:
            return
        self.gx = self.x0 + np.arange(self.nx) * res
        self.gy = self.y0 + np.arange(self.ny) * res
        self.base = np.zeros((self.ny, self.nx), dtype=bool)
        # each polygon is rasterised only over its own bounding box
        for poly in region.polys:
            w = self._window(poly)
            if w:
                sl, pts, shape = w
                self.base[sl] |= Path(np.asarray(poly)).contains_points(pts, radius=1e-9).reshape(shape)
        for pid in region.forbidden:
            poly = region.graph.places[pid].polygon
            w = self._window(poly)
            if w:
                sl, pts, shape = w
                self.base[sl] &= ~Path(np.asarray(poly)).contains_points(pts, radius=-1e-9).reshape(shape)

    def _window(self, poly):
        res = self.res
        px = [v[0] for v in poly]
        py = [v[1] for v in poly]
        j0 = max(0, int(math.floor((min(px) - self.x0) / res)))
        j1 = min(self.nx, int(math.ceil((max(px) - self.x0) / res)) + 1)
        i0 = max(0, int(math.floor((min(py) - self.y0) / res)))
        i1 = min(self.ny, int(math.ceil((max(py) - self.y0) / res)) + 1)
        if j0 >= j1 or i0 >= i1:
            return None
        X, Y = np.meshgrid(self.gx[j0:j1], self.gy[i0:i1])
        return (slice(i0, i1), slice(j0, j1)), np.column_stack([X.ravel(), Y.ravel()]), X.shape

    def disc_mask(self, d: Disc):
        """(slice, boolean mask of the cells inside ``d``) or None when ``d``
        covers no free cell."""
        c, r = d.center, d.radius
        w = self._window([(c[0] - r, c[1] - r), (c[0] + r, c[1] + r)])
        if w is None:
            return None
        sl, pts, shape = w
        inside = ((pts[:, 0] - c[0]) ** 2 + (pts[:, 1] - c[1]) ** 2 <= r * r).reshape(shape)
        if not (inside & self.base[sl]).any():
            return None
        return sl, inside

    def connected(self, a: Point, b: Point, discs) -> bool:
        from scipy import ndimage

        if self.too_big:
            return True
        grid = self.base.copy()
        for d in discs:
            m = self.disc_mask(d)
            if m is not None:
                grid[m[0]] &= ~m[1]
        labels, _ = ndimage.label(grid)
        la, lb = self._labels_near(labels, a), self._labels_near(labels, b)
        if not la or not lb:
            return True  # too close to a boundary to judge; let the sampler decide
        return bool(la & lb)

    def _labels_near(self, labels, p):
        i = int(round((p[1] - self.y0) / self.res))
        j = int(round((p[0] - self.x0) / self.res))
        found = set()
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                ii, jj = i + di, j + dj
                if 0 <= ii < self.ny and 0 <= jj < self.nx and labels[ii, jj]:
                    found.add(int(labels[ii, jj]))
        return found

    def severing(self, a: Point, b: Point, discs) -> Set[str]:
        """Discs whose removal alone reconnects ``a`` and ``b``."""
        touching = [d for d in discs if self.disc_mask(d) is not None]
        out = set()
        for d in touching:
            rest = [e for e in touching if e is not d]
            if self.connected(a, b, rest):
                out.add(d.object_id)
        return out


def _rrt(region: _Region, a: Point, b: Point, discs, rng, params: MotionParams) -> Optional[List[Point]]:
    n_max = params.rrt_nodes
    pts = np.zeros((n_max + 1, 2))
    pts[0] = a
    parent = [-1]
    n = 1
    step = params.rrt_step
    iters = 0
    while n < n_max and iters < 4 * n_max:
        iters += 1
        target = b if rng.random() < params.rrt_goal_bias else region.sample(rng)
        d2 = np.sum((pts[:n] - target) ** 2, axis=1)
        k = int(np.argmin(d2))
        near = (pts[k, 0], pts[k, 1])
        d = math.sqrt(float(d2[k]))
        if d < 1e-12:
            continue
        if d > step:
            new = (near[0] + (target[0] - near[0]) * step / d, near[1] + (target[1] - near[1]) * step / d)
        else:
            new = (float(target[0]), float(target[1]))
        if not region.segment_ok(near, new, discs):
            continue
        pts[n] = new
        parent.append(k)
        n += 1
        if geo.dist(new, b) <= step and region.segment_ok(new, b, discs):
            path = [b]
            i = n - 1
            while i >= 0:
                path.append((float(pts[i, 0]), float(pts[i, 1])))
                i = parent[i]
            path.reverse()
            return _shortcut(path, region, discs)
    return None


def _shortcut(path: List[Point], region: _Region, discs) -> List[Point]:
    # greedy forward extension: keep skipping while the straight segment stays valid
    out = [path[0]]
    i = 0
    while i < len(path) - 1:
        j = i + 1
        while j + 1 < len(path) and region.segment_ok(path[i], path[j + 1], discs):
            j += 1
        out.append(path[j])
        i = j
    return out


def refine(graph: SceneGraph, route_places: Sequence[str], start: Pose, goal: Pose, obstacles: ObstacleSet,
           rng: random.Random, params: Optional[MotionParams] = None,
           exempt: Iterable[str] = ()):
    """Trajectory along ``route_places`` from ``start`` to ``goal``.

    Returns a Trajectory or a MotionFailure whose ``blockers`` are the discs
    intersecting the straight waypoint chain that could not be repaired.
    ``exempt`` places may be entered even if listed in the avoid set.
    """
    params = params or MotionParams()
    forbidden = frozenset(obstacles.avoid_places) - set(exempt)
    discs = obstacles.discs
    a, b = start.position, goal.position
    if not point_free(a, discs):
        hit = {d.object_id for d in discs if geo.dist(a, d.center) <= d.radius}
        return MotionFailure("start_in_collision", frozenset(hit))
    if not point_free(b, discs):
        hit = {d.object_id for d in discs if geo.dist(b, d.center) <= d.radius}
        return MotionFailure("goal_in_collision", frozenset(hit))
    region = _Region(graph, route_places, forbidden)
    chain = [a] + [graph.places[p].centroid for p in route_places[1:-1]] + [b]
    # drop waypoints that are in collision or outside the navigable region
    kept = [chain[0]] + [p for p in chain[1:-1] if point_free(p, discs) and region.contains(p)] + [chain[-1]]
    out = [kept[0]]
    for p, q in zip(kept[:-1], kept[1:]):
        if region.segment_ok(p, q, discs):
            out.append(q)
            continue
        sub = None
        grid = _FreeGrid(region)
        if grid.connected(p, q, discs):
            sub = _rrt(region, p, q, discs, rng, params)
            blockers = discs_hit((p, q), discs)
        else:
            # the discs cut the region: name the ones that cut it on their own,
            # else every disc the straight chain runs into
            blockers = grid.severing(p, q, discs)
            if not blockers:
                for seg in zip(chain[:-1], chain[1:]):
                    blockers |= discs_hit(seg, discs)
        if sub is None:
            return MotionFailure("blocked", frozenset(blockers), f"no path between {p} and {q}", tuple(chain))
        out.extend(sub[1:])
    # drop waypoints that a straight shortcut inside the region makes unnecessary
    out = _shortcut(out, region, discs)
    return make_trajectory(graph, out, goal.heading, start.heading)


def plan_motion(graph: SceneGraph, start: Pose, goal: Pose, start_place: str, goal_place: str,
                obstacles: ObstacleSet, rng: random.Random, params: Optional[MotionParams] = None,
                approach_disc: Optional[Disc] = None):
    """Route then refine, re-routing around blocking discs a few times.

    ``approach_disc`` (the inspected object's own hazard disc) lets the goal
    pose sit inside that disc: the planner reaches a free point on the disc
    boundary and finishes with a straight leg inside the disc.
    """
    params = params or MotionParams()
    exempt = {start_place, goal_place}
    if approach_disc is None or geo.dist(goal.position, approach_disc.center) > approach_disc.radius:
        return _plan_to(graph, start, goal, start_place, goal_place, obstacles, rng, params, exempt)

    forbidden = frozenset(obstacles.avoid_places) - exempt
    others = [d for d in obstacles.discs if d.object_id != approach_disc.object_id]
    cx, cy = approach_disc.center
    r = approach_disc.radius + 1e-3
    gx, gy = goal.position
    angles = [math.atan2(gy - cy, gx - cx)] + [k * math.pi / 12 for k in range(24)]
    cands = []
    for th in angles:
        ap = (cx + r * math.cos(th), cy + r * math.sin(th))
        if not point_free(ap, obstacles.discs):
            continue
        ap_place = graph.place_containing(ap)
        if ap_place is None or ap_place in forbidden:
            continue
        if not (segment_free((ap, goal.position), others)
                and segment_covered(graph, ap, goal.position, None, forbidden)):
            continue
        cands.append((geo.dist(ap, start.position), ap, ap_place))
    if not cands:
        return MotionFailure("goal_in_collision", frozenset(), "no free approach to the goal pose")
    cands.sort()
    blockers: Set[str] = set()
    first = None
    for _, ap, ap_place in cands[:3]:
        res = _plan_to(graph, start, Pose(ap, goal.heading), start_place, ap_place, obstacles, rng, params,
                       exempt | {ap_place})
        if isinstance(res, Trajectory):
            pts = [w.position for w in res.waypoints] + [goal.position]
            return make_trajectory(graph, pts, goal.heading, start.heading)
        first = first or res
        blockers |= set(res.blockers)
    return MotionFailure(first.reason, frozenset(blockers), first.detail, first.optimistic)


def _plan_to(graph, start, target, start_place, target_place, obstacles, rng, params, exempt):
    avoid = set(obstacles.avoid_places) - exempt
    blockers: Set[str] = set()
    first_failure = None
    for _ in range(params.reroutes + 1):
        r = route(graph, start_place, target_place, avoid)
        if not r:
            if first_failure is None:
                return MotionFailure("no_route", frozenset(), r.reason)
            break
        res = refine(graph, r.places, start, target, obstacles, rng, params, exempt)
        if isinstance(res, Trajectory):
            return res
        if first_failure is None:
            first_failure = res
        blockers |= set(res.blockers)
        if res.reason != "blocked" or not res.blockers:
            break
        # exclude the places covered by blocking discs and try another route
        # first exclude the places a blocking disc sits in; only if that
        # changes nothing, every route place the disc touches
        newly = set()
        for d in obstacles.discs:
            if d.object_id in res.blockers:
                newly |= _places_under_disc(graph, r.places, d, core_only=True)
        newly -= exempt
        if newly <= avoid:
            for d in obstacles.discs:
                if d.object_id in res.blockers:
                    newly |= _places_under_disc(graph, r.places, d)
            newly -= exempt
        if newly <= avoid:
            break
        avoid |= newly
    return MotionFailure(first_failure.reason, frozenset(blockers), first_failure.detail, first_failure.optimistic)


def _places_under_disc(graph: SceneGraph, places: Sequence[str], d: Disc, core_only: bool = False) -> Set[str]:
    """The places of ``places`` whose polygon meets disc ``d`` (with
    ``core_only``: that contain its centre or have their centroid covered)."""
    out = set()
    for pid in places:
        poly = graph.places[pid].polygon
        if geo.point_in_polygon(d.center, poly) or geo.dist(graph.places[pid].centroid, d.center) <= d.radius:
            out.add(pid)
        elif not core_only and any(
                geo.point_segment_distance(d.center, a, b) <= d.radius for a, b in zip(poly, poly[1:] + poly[:1])):
            out.add(pid)
    return out
