"""Layered scene graph: regions, 2D polygonal places and disc objects.

The graph is immutable once built. Lookups that need geometry (which place
contains a point, which places a segment touches) go through a uniform
bucket index built at construction time.
"""
from __future__ import annotations

import json
import math
import re
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from . import geometry as geo
from .geometry import Point

ADJ_TOL = 1e-6
STATUSES = ("safe", "suspicious")


class SceneGraphError(ValueError):
    """Raised when a scene graph file or structure is invalid."""


def id_key(node_id: str):
    """Natural sort key so that ``P2`` sorts before ``P10``."""
    return tuple(int(t) if t.isdigit() else t for t in re.split(r"(\d+)", node_id))


@dataclass(frozen=True)
class PlaceNode:
    id: str
    polygon: Tuple[Point, ...]
    centroid: Point
    region: Optional[str] = None

    @classmethod
    def from_vertices(cls, id: str, vertices: Iterable[Sequence[float]], region=None) -> "PlaceNode":
        poly = tuple((float(x), float(y)) for x, y in vertices)
        if len(poly) >= 3 and geo.signed_area(poly) < 0:
            poly = tuple(reversed(poly))
        return cls(id, poly, geo.polygon_centroid(poly) if len(poly) >= 3 else (math.nan, math.nan), region)


@dataclass(frozen=True)
class ObjectNode:
    id: str
    position: Point
    radius: float
    inflated_radius: float
    status: str
    place: str

    @property
    def suspicious(self) -> bool:
        return self.status == "suspicious"


@dataclass(frozen=True)
class Region:
    id: str
    name: str = ""


@dataclass(frozen=True)
class RobotStart:
    position: Point
    heading: float = 0.0


class _BucketIndex:
    """Uniform grid over place bounding boxes."""

    def __init__(self, places: Sequence[PlaceNode]):
        boxes = [geo.bbox(p.polygon) for p in places]
        self.x0 = min(b[0] for b in boxes)
        self.y0 = min(b[1] for b in boxes)
        x1 = max(b[2] for b in boxes)
        y1 = max(b[3] for b in boxes)
        area = max((x1 - self.x0) * (y1 - self.y0), 1e-9)
        self.cell = max(math.sqrt(area / max(len(places), 1)), 1e-3)
        self.buckets: Dict[Tuple[int, int], List[int]] = {}
        for i, (bx0, by0, bx1, by1) in enumerate(boxes):
            for key in self._cells(bx0 - ADJ_TOL, by0 - ADJ_TOL, bx1 + ADJ_TOL, by1 + ADJ_TOL):
                self.buckets.setdefault(key, []).append(i)

    def _cells(self, x0, y0, x1, y1):
        c = self.cell
        for i in range(int(math.floor((x0 - self.x0) / c)), int(math.floor((x1 - self.x0) / c)) + 1):
            for j in range(int(math.floor((y0 - self.y0) / c)), int(math.floor((y1 - self.y0) / c)) + 1):
                yield (i, j)

    def near_point(self, p: Point) -> List[int]:
        c = self.cell
        key = (int(math.floor((p[0] - self.x0) / c)), int(math.floor((p[1] - self.y0) / c)))
        return self.buckets.get(key, [])

    def near_box(self, x0, y0, x1, y1) -> set:
        out = set()
        for key in self._cells(x0, y0, x1, y1):
            out.update(self.buckets.get(key, ()))
        return out


class SceneGraph:
    """Immutable layered scene graph.

    ``places`` and ``objects`` are exposed as read-only mappings keyed by id
    (iteration follows natural id order).
    """

    def __init__(
        self,
        places: Iterable[PlaceNode],
        place_edges: Iterable[Tuple[str, str]],
        objects: Iterable[ObjectNode] = (),
        regions: Iterable[Region] = (),
        robot: Optional[RobotStart] = None,
        validate: bool = True,
    ):
        places = sorted(places, key=lambda p: id_key(p.id))
        self._places: Dict[str, PlaceNode] = {}
        for p in places:
            if p.id in self._places:
                raise SceneGraphError(f"duplicate place id {p.id!r}")
            self._places[p.id] = p
        self._objects: Dict[str, ObjectNode] = {}
        for o in sorted(objects, key=lambda o: id_key(o.id)):
            if o.id in self._objects:
                raise SceneGraphError(f"duplicate object id {o.id!r}")
            self._objects[o.id] = o
        self._regions: Dict[str, Region] = {r.id: r for r in sorted(regions, key=lambda r: id_key(r.id))}
        edges = set()
        for a, b in place_edges:
            if a == b:
                raise SceneGraphError(f"self-loop edge on place {a!r}")
            edges.add((a, b) if id_key(a) <= id_key(b) else (b, a))
        self._edges: FrozenSet[Tuple[str, str]] = frozenset(edges)
        self.robot = robot
        if validate:
            self._validate()
        self._order = list(self._places)
        self._rank = {pid: i for i, pid in enumerate(self._order)}
        self._adj: Dict[str, Tuple[str, ...]] = {pid: () for pid in self._places}
        tmp: Dict[str, List[str]] = {pid: [] for pid in self._places}
        for a, b in self._edges:
            tmp[a].append(b)
            tmp[b].append(a)
        for pid, nbrs in tmp.items():
            self._adj[pid] = tuple(sorted(nbrs, key=id_key))
        self._index = _BucketIndex(list(self._places.values())) if self._places else None
        self._convex = {pid: geo.is_convex(p.polygon) for pid, p in self._places.items()}

    # ---------------------------------------------------------------- access
    @property
    def places(self) -> Mapping[str, PlaceNode]:
        return _ReadOnly(self._places)

    @property
    def objects(self) -> Mapping[str, ObjectNode]:
        return _ReadOnly(self._objects)

    @property
    def regions(self) -> Mapping[str, Region]:
        return _ReadOnly(self._regions)

    @property
    def place_edges(self) -> FrozenSet[Tuple[str, str]]:
        return self._edges

    def neighbors(self, place_id: str) -> Tuple[str, ...]:
        return self._adj[place_id]

    def place_of_object(self, object_id: str) -> str:
        return self._objects[object_id].place

    def is_convex(self, place_id: str) -> bool:
        return self._convex[place_id]

    def start_pose(self) -> RobotStart:
        if self.robot is not None:
            return self.robot
        first = next(iter(self._places.values()))
        return RobotStart(first.centroid, 0.0)

    def start_place(self) -> str:
        pid = self.place_containing(self.start_pose().position)
        if pid is None:
            raise SceneGraphError("robot start position lies outside all places")
        return pid

    def with_objects(self, objects: Iterable[ObjectNode]) -> "SceneGraph":
        return SceneGraph(self._places.values(), self._edges, objects, self._regions.values(), self.robot, validate=True)

    def with_status(self, object_ids: Iterable[str], status: str) -> "SceneGraph":
        ids = set(object_ids)
        objs = [
            ObjectNode(o.id, o.position, o.radius, o.inflated_radius, status, o.place) if o.id in ids else o
            for o in self._objects.values()
        ]
        return self.with_objects(objs)

    def with_robot(self, robot: RobotStart) -> "SceneGraph":
        return SceneGraph(self._places.values(), self._edges, self._objects.values(), self._regions.values(), robot, validate=False)

    # ---------------------------------------------------------------- geometry
    def place_containing(self, point: Point) -> Optional[str]:
        """Place whose closed polygon contains ``point``; ties go to the lowest id."""
        if self._index is None:
            return None
        best = None
        for i in self._index.near_point(point):
            pid = self._order[i]
            if geo.point_in_polygon(point, self._places[pid].polygon):
                if best is None or i < best:
                    best = i
        return None if best is None else self._order[best]

    def places_containing(self, point: Point) -> List[str]:
        if self._index is None:
            return []
        hits = [
            i for i in self._index.near_point(point)
            if geo.point_in_polygon(point, self._places[self._order[i]].polygon)
        ]
        return [self._order[i] for i in sorted(hits)]

    def segment_place_intersections(self, segment: Tuple[Point, Point]) -> FrozenSet[str]:
        """Ids of every place whose closed polygon meets the closed segment."""
        return frozenset(pid for pid, _ in self.segment_place_crossings(segment))

    def segment_place_crossings(self, segment: Tuple[Point, Point]) -> List[Tuple[str, float]]:
        """Intersected places paired with the segment parameter where each is first met,
        sorted along the segment."""
        a, b = segment
        if not all(math.isfinite(v) for v in (*a, *b)):
            raise ValueError("segment endpoints must be finite")
        if self._index is None:
            return []
        cand = self._index.near_box(
            min(a[0], b[0]) - ADJ_TOL, min(a[1], b[1]) - ADJ_TOL,
            max(a[0], b[0]) + ADJ_TOL, max(a[1], b[1]) + ADJ_TOL,
        )
        out = []
        for i in cand:
            pid = self._order[i]
            poly = self._places[pid].polygon
            if self._convex[pid]:
                iv = geo.clip_segment_convex(a, b, poly)
                if iv is not None:
                    out.append((pid, iv[0], i))
            elif geo.segment_intersects_polygon(a, b, poly):
                out.append((pid, _first_hit(a, b, poly), i))
        out.sort(key=lambda r: (r[1], r[2]))
        return [(pid, t) for pid, t, _ in out]

    def segment_coverage(self, segment: Tuple[Point, Point]) -> List[Tuple[str, float, float]]:
        """Per-place parameter intervals ``(pid, t0, t1)`` of a segment (convex places only;
        non-convex places report the conservative interval [first hit, 1])."""
        a, b = segment
        cand = self._index.near_box(
            min(a[0], b[0]) - ADJ_TOL, min(a[1], b[1]) - ADJ_TOL,
            max(a[0], b[0]) + ADJ_TOL, max(a[1], b[1]) + ADJ_TOL,
        )
        out = []
        for i in sorted(cand):
            pid = self._order[i]
            poly = self._places[pid].polygon
            if self._convex[pid]:
                iv = geo.clip_segment_convex(a, b, poly)
                if iv is not None:
                    out.append((pid, iv[0], iv[1]))
            elif geo.segment_intersects_polygon(a, b, poly):
                out.append((pid, _first_hit(a, b, poly), 1.0))
        return out

    # ---------------------------------------------------------------- structure
    def is_connected(self, subset: Optional[Iterable[str]] = None) -> bool:
        nodes = set(self._places if subset is None else subset)
        if not nodes:
            return True
        start = next(iter(nodes))
        seen = {start}
        q = deque([start])
        while q:
            u = q.popleft()
            for v in self._adj[u]:
                if v in nodes and v not in seen:
                    seen.add(v)
                    q.append(v)
        return seen == nodes

    def _validate(self) -> None:
        if not self._places:
            raise SceneGraphError("no places")
        for p in self._places.values():
            if len(p.polygon) < 3:
                raise SceneGraphError(f"place {p.id!r}: polygon needs at least 3 vertices")
            if not geo.is_simple(p.polygon):
                raise SceneGraphError(f"place {p.id!r}: polygon is not simple")
            if p.region is not None and p.region not in self._regions:
                raise SceneGraphError(f"place {p.id!r}: unknown region {p.region!r}")
        for a, b in self._edges:
            for x in (a, b):
                if x not in self._places:
                    raise SceneGraphError(f"edge ({a!r}, {b!r}) references missing place {x!r}")
            d = geo.polygon_distance(self._places[a].polygon, self._places[b].polygon)
            if d > ADJ_TOL:
                raise SceneGraphError(f"edge ({a!r}, {b!r}): polygons are {d:.3g} m apart")
        for o in self._objects.values():
            if o.place not in self._places:
                raise SceneGraphError(f"object {o.id!r}: unknown place {o.place!r}")
            if o.status not in STATUSES:
                raise SceneGraphError(f"object {o.id!r}: bad status {o.status!r}")
            if not (o.inflated_radius >= o.radius >= 0):
                raise SceneGraphError(f"object {o.id!r}: need inflated_radius >= radius >= 0")
            if not geo.point_in_polygon(o.position, self._places[o.place].polygon, tol=ADJ_TOL):
                raise SceneGraphError(f"object {o.id!r}: position outside place {o.place!r}")

    # ---------------------------------------------------------------- equality / io
    def to_dict(self) -> dict:
        d = {
            "places": [
                {"id": p.id, "vertices": [list(v) for v in p.polygon], "region": p.region}
                for p in self._places.values()
            ],
            "place_edges": [list(e) for e in sorted(self._edges, key=lambda e: (id_key(e[0]), id_key(e[1])))],
            "objects": [
                {
                    "id": o.id,
                    "position": list(o.position),
                    "radius": o.radius,
                    "inflated_radius": o.inflated_radius,
                    "status": o.status,
                    "place": o.place,
                }
                for o in self._objects.values()
            ],
            "regions": [{"id": r.id, "name": r.name} for r in self._regions.values()],
        }
        if self.robot is not None:
            d["robot"] = {"position": list(self.robot.position), "heading": self.robot.heading}
        return d

    def __eq__(self, other) -> bool:
        if not isinstance(other, SceneGraph):
            return NotImplemented
        return (
            self._places == other._places
            and self._edges == other._edges
            and self._objects == other._objects
            and self._regions == other._regions
            and self.robot == other.robot
        )

    def __hash__(self):
        return hash((tuple(self._places), self._edges, tuple(self._objects)))

    def __repr__(self) -> str:
        return f"SceneGraph({len(self._places)} places, {len(self._edges)} edges, {len(self._objects)} objects)"


class _ReadOnly(Mapping):
    __slots__ = ("_d",)

    def __init__(self, d):
        self._d = d

    def __getitem__(self, k):
        return self._d[k]

    def __iter__(self):
        return iter(self._d)

    def __len__(self):
        return len(self._d)


def _first_hit(a: Point, b: Point, poly) -> float:
    if geo.point_in_polygon(a, poly):
        return 0.0
    best = 1.0
    n = len(poly)
    for i in range(n):
        c, d = poly[i - 1], poly[i]
        if geo.segments_intersect(a, b, c, d):
            # parameter of the intersection along ab
            dx, dy = b[0] - a[0], b[1] - a[1]
            ex, ey = d[0] - c[0], d[1] - c[1]
            den = dx * ey - dy * ex
            if abs(den) > 1e-15:
                t = ((c[0] - a[0]) * ey - (c[1] - a[1]) * ex) / den
                best = min(best, max(0.0, t))
            else:
                best = 0.0
    return best


# -------------------------------------------------------------------- load / save
def graph_from_dict(data: dict) -> SceneGraph:
    if not isinstance(data, dict):
        raise SceneGraphError("scene graph JSON must be an object")
    for key in ("places", "place_edges"):
        if key not in data:
            raise SceneGraphError(f"missing top-level key {key!r}")
    regions = []
    for i, r in enumerate(data.get("regions", [])):
        if not isinstance(r, dict) or not isinstance(r.get("id"), str):
            raise SceneGraphError(f"regions[{i}]: expected an object with string 'id'")
        regions.append(Region(r["id"], str(r.get("name", ""))))
    places = []
    for i, p in enumerate(data["places"]):
        pid = p.get("id") if isinstance(p, dict) else None
        if not isinstance(pid, str):
            raise SceneGraphError(f"places[{i}]: missing string 'id'")
        verts = p.get("vertices")
        try:
            places.append(PlaceNode.from_vertices(pid, verts, p.get("region")))
        except (TypeError, ValueError) as exc:
            raise SceneGraphError(f"place {pid!r}: bad vertices ({exc})") from None
    edges = []
    for i, e in enumerate(data["place_edges"]):
        if not (isinstance(e, (list, tuple)) and len(e) == 2 and all(isinstance(x, str) for x in e)):
            raise SceneGraphError(f"place_edges[{i}]: expected [idA, idB]")
        edges.append((e[0], e[1]))
    objects = []
    for i, o in enumerate(data.get("objects", [])):
        oid = o.get("id") if isinstance(o, dict) else None
        if not isinstance(oid, str):
            raise SceneGraphError(f"objects[{i}]: missing string 'id'")
        try:
            objects.append(
                ObjectNode(
                    oid,
                    (float(o["position"][0]), float(o["position"][1])),
                    float(o["radius"]),
                    float(o["inflated_radius"]),
                    str(o.get("status", "safe")),
                    str(o["place"]),
                )
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise SceneGraphError(f"object {oid!r}: bad field ({exc})") from None
    robot = None
    if "robot" in data and data["robot"] is not None:
        r = data["robot"]
        robot = RobotStart((float(r["position"][0]), float(r["position"][1])), float(r.get("heading", 0.0)))
    return SceneGraph(places, edges, objects, regions, robot)


def load(path) -> SceneGraph:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SceneGraphError(f"{path}: invalid JSON ({exc})") from None
    return graph_from_dict(data)


def save(graph: SceneGraph, path) -> None:
    Path(path).write_text(json.dumps(graph.to_dict(), indent=1))
