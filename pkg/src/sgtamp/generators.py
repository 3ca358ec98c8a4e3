"""Synthetic scene-graph generators (grid world, narrow alley, random street network)."""
from __future__ import annotations

import math
import random
from typing import List, Tuple

from .scene_graph import ObjectNode, PlaceNode, Region, SceneGraph


def grid_id(row: int, col: int, cols: int) -> str:
    return f"P{row * cols + col}"


def _rect(x0, y0, x1, y1):
    return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]


def gen_grid(rows: int, cols: int, cell_size: float = 1.0, rng_seed: int = 0) -> SceneGraph:
    """rows x cols square cells, 4-connected. Cell (r, c) spans
    x in [c*s, (c+1)*s], y in [r*s, (r+1)*s] and is named ``P{r*cols+c}``."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    if not cell_size > 0:
        raise ValueError("cell_size must be positive")
    s = float(cell_size)
    places = []
    edges = []
    for r in range(rows):
        for c in range(cols):
            pid = grid_id(r, c, cols)
            places.append(PlaceNode.from_vertices(pid, _rect(c * s, r * s, (c + 1) * s, (r + 1) * s)))
            if c + 1 < cols:
                edges.append((pid, grid_id(r, c + 1, cols)))
            if r + 1 < rows:
                edges.append((pid, grid_id(r + 1, c, cols)))
    return SceneGraph(places, edges)


def gen_alley(length: float = 12.0, width: float = 2.0, cell_length: float = 1.0) -> SceneGraph:
    """A straight corridor along +x split into ``ceil(length / cell_length)`` strips."""
    if not (length > 0 and width > 0 and cell_length > 0):
        raise ValueError("length, width and cell_length must be positive")
    n = max(1, int(math.ceil(length / cell_length - 1e-9)))
    step = length / n
    half = width / 2.0
    places = [PlaceNode.from_vertices(f"P{i}", _rect(i * step, -half, (i + 1) * step, half)) for i in range(n)]
    edges = [(f"P{i}", f"P{i + 1}") for i in range(n - 1)]
    return SceneGraph(places, edges)


def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def gen_random(
    n_places: int,
    n_objects: int = 0,
    rng_seed: int = 0,
    road_width: float = 3.0,
    block_range: Tuple[float, float] = (7.0, 13.0),
) -> SceneGraph:
    """Random street network with exactly ``n_places`` convex places.

    Intersections sit on a lattice with random block sizes; a random spanning
    tree of lattice streets (plus some extra streets, which create loops) is
    kept, and each street is cut into one or more rectangular cells. Objects are dropped on
    street cells with an inflated radius wide enough to close the street.
    All objects start ``safe``.
    """
    if n_places < 1:
        raise ValueError("n_places must be >= 1")
    if n_objects < 0:
        raise ValueError("n_objects must be >= 0")
    rng = random.Random(rng_seed)
    if n_places < 5:
        g = gen_alley(length=road_width * n_places, width=road_width, cell_length=road_width)
        return _drop_objects(g, n_objects, rng, road_width)

    n_int = max(2, n_places // 5)
    a = max(1, int(round(math.sqrt(n_int))))
    b = max(1, n_int // a)
    while a * b + (a * b - 1) > n_places:
        if a >= b and a > 1:
            a -= 1
        elif b > 1:
            b -= 1
    xs = [0.0]
    for _ in range(a - 1):
        xs.append(xs[-1] + rng.uniform(*block_range))
    ys = [0.0]
    for _ in range(b - 1):
        ys.append(ys[-1] + rng.uniform(*block_range))

    nodes = [(i, j) for j in range(b) for i in range(a)]
    lattice_edges = []
    for j in range(b):
        for i in range(a):
            if i + 1 < a:
                lattice_edges.append(((i, j), (i + 1, j)))
            if j + 1 < b:
                lattice_edges.append(((i, j), (i, j + 1)))
    rng.shuffle(lattice_edges)
    parent = {v: v for v in nodes}
    tree, extra = [], []
    for u, v in lattice_edges:
        ru, rv = _find(parent, u), _find(parent, v)
        if ru != rv:
            parent[ru] = rv
            tree.append((u, v))
        else:
            extra.append((u, v))
    streets = list(tree)
    budget = n_places - len(nodes) - len(streets)
    for e in extra:
        if budget <= 0:
            break
        if rng.random() < 0.45:
            streets.append(e)
            budget -= 1
    streets.sort()
    half = road_width / 2.0

    def street_len(e):
        (i0, j0), (i1, j1) = e
        return abs(xs[i1] - xs[i0]) + abs(ys[j1] - ys[j0]) - road_width

    cells_per = [1] * len(streets)
    lengths = [street_len(e) for e in streets]
    for _ in range(budget):
        k = rng.choices(range(len(streets)), weights=[L / c for L, c in zip(lengths, cells_per)])[0]
        cells_per[k] += 1

    places: List[PlaceNode] = []
    edges = []
    region_of = lambda x, y: f"R{int(x > xs[-1] / 2)}{int(y > ys[-1] / 2)}"
    regions = {}
    nid = {}
    for (i, j) in sorted(nodes, key=lambda v: (v[1], v[0])):
        pid = f"P{len(places)}"
        nid[(i, j)] = pid
        r = region_of(xs[i], ys[j])
        regions.setdefault(r, Region(r, f"block-{r[1:]}"))
        places.append(PlaceNode.from_vertices(pid, _rect(xs[i] - half, ys[j] - half, xs[i] + half, ys[j] + half), r))
    for e, k in zip(streets, cells_per):
        (i0, j0), (i1, j1) = e
        prev = nid[(i0, j0)]
        horizontal = j0 == j1
        if horizontal:
            x_start, x_end = xs[i0] + half, xs[i1] - half
            step = (x_end - x_start) / k
        else:
            y_start, y_end = ys[j0] + half, ys[j1] - half
            step = (y_end - y_start) / k
        for c in range(k):
            pid = f"P{len(places)}"
            if horizontal:
                rect = _rect(x_start + c * step, ys[j0] - half, x_start + (c + 1) * step, ys[j0] + half)
                cx, cy = x_start + (c + 0.5) * step, ys[j0]
            else:
                rect = _rect(xs[i0] - half, y_start + c * step, xs[i0] + half, y_start + (c + 1) * step)
                cx, cy = xs[i0], y_start + (c + 0.5) * step
            r = region_of(cx, cy)
            regions.setdefault(r, Region(r, f"block-{r[1:]}"))
            places.append(PlaceNode.from_vertices(pid, rect, r))
            edges.append((prev, pid))
            prev = pid
        edges.append((prev, nid[(i1, j1)]))
    assert len(places) == n_places, (len(places), n_places)
    g = SceneGraph(places, edges, (), regions.values())
    return _drop_objects(g, n_objects, rng, road_width, skip=set(nid.values()))


def _drop_objects(g: SceneGraph, n_objects: int, rng: random.Random, road_width: float, skip=()) -> SceneGraph:
    if n_objects == 0:
        return g
    candidates = [pid for pid in g.places if pid not in skip and pid != g.start_place()]
    if not candidates:
        candidates = list(g.places)
    if n_objects <= len(candidates):
        chosen = rng.sample(candidates, n_objects)
    else:
        chosen = [rng.choice(candidates) for _ in range(n_objects)]
    objs = []
    for k, pid in enumerate(chosen):
        p = g.places[pid]
        cx, cy = p.centroid
        x0 = min(v[0] for v in p.polygon)
        x1 = max(v[0] for v in p.polygon)
        y0 = min(v[1] for v in p.polygon)
        y1 = max(v[1] for v in p.polygon)
        jx = 0.1 * (x1 - x0) * rng.uniform(-1, 1)
        jy = 0.1 * (y1 - y0) * rng.uniform(-1, 1)
        radius = round(rng.uniform(0.2, 0.4), 3)
        inflated = round(road_width * rng.uniform(0.6, 0.7), 3)
        objs.append(ObjectNode(f"O{k}", (cx + jx, cy + jy), radius, inflated, "safe", pid))
    return g.with_objects(objs)
