from __future__ import annotations

import heapq
import math
from collections import deque

import pytest

from sgtamp import geometry as geo
from sgtamp.generators import gen_alley, gen_grid
from sgtamp.scene_graph import ObjectNode, SceneGraph
from sgtamp.streams import CLEARANCE, Pose


def alley_with(*objects, length=12.0, width=2.0) -> SceneGraph:
    """Straight alley (strips P0..P{n-1} along +x, y in [-w/2, w/2]) holding
    ``objects`` given as (id, x, y, radius, inflated, status)."""
    g = gen_alley(length, width)
    nodes = []
    for oid, x, y, r, infl, status in objects:
        nodes.append(ObjectNode(oid, (x, y), r, infl, status, g.place_containing((x, y))))
    return g.with_objects(nodes)


def start_of(graph) -> Pose:
    """The robot's start as a config pose."""
    s = graph.start_pose()
    return Pose(s.position, s.heading)


def blocked_alley(status="suspicious", x=6.0):
    """Alley whose corridor O1's inflated disc (plus clearance) fully severs."""
    return alley_with(("O1", x, 0.0, 0.3, 1.2, status))


def flood_fill_connected(graph, a, b, discs, res=0.05):
    """Independent severance oracle: 4-connected BFS over a fine raster of
    the union of place polygons minus the closed discs."""
    from sgtamp.geometry import point_in_polygon

    xs = [v[0] for p in graph.places.values() for v in p.polygon]
    ys = [v[1] for p in graph.places.values() for v in p.polygon]
    x0, y0 = min(xs), min(ys)
    nx = int(math.ceil((max(xs) - x0) / res)) + 1
    ny = int(math.ceil((max(ys) - y0) / res)) + 1

    def free(i, j):
        p = (x0 + j * res, y0 + i * res)
        if not any(point_in_polygon(p, pl.polygon) for pl in graph.places.values()):
            return False
        return all(math.dist(p, d.center) > d.radius for d in discs)

    def cell(p):
        return int(round((p[1] - y0) / res)), int(round((p[0] - x0) / res))

    start, goal = cell(a), cell(b)
    if not free(*start) or not free(*goal):
        return False
    seen = {start}
    q = deque([start])
    while q:
        c = q.popleft()
        if c == goal:
            return True
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            n = (c[0] + di, c[1] + dj)
            if 0 <= n[0] < ny and 0 <= n[1] < nx and n not in seen and free(*n):
                seen.add(n)
                q.append(n)
    return False


def dijkstra_length(graph, start, goal, avoid=()):
    """Oracle: plain Dijkstra over centroid distances."""
    avoid = set(avoid) - {start, goal}
    cen = {p: graph.places[p].centroid for p in graph.places}
    dist = {start: 0.0}
    heap = [(0.0, start)]
    while heap:
        d, u = heapq.heappop(heap)
        if u == goal:
            return d
        if d > dist[u]:
            continue
        for v in graph.neighbors(u):
            if v in avoid:
                continue
            nd = d + geo.dist(cen[u], cen[v])
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return None



@pytest.fixture
def grid10():
    return gen_grid(10, 10)


@pytest.fixture
def grid3():
    return gen_grid(3, 3)


@pytest.fixture
def alley():
    return gen_alley()


@pytest.fixture
def severed_alley():
    return blocked_alley()


CLEAR = CLEARANCE
