"""Static SVG drawing of a scene graph with an optional plan overlaid."""
from __future__ import annotations

from typing import Iterable, Optional
from xml.sax.saxutils import escape

from .planner import BoundPlan
from .scene_graph import SceneGraph

SCALE = 20.0
MARGIN = 10.0


def render_svg(graph: SceneGraph, plan: Optional[BoundPlan] = None, avoid: Iterable[str] = (),
               highlight: Iterable[str] = (), labels: bool = True) -> str:
    avoid, highlight = set(avoid), set(highlight)
    xs = [v[0] for p in graph.places.values() for v in p.polygon]
    ys = [v[1] for p in graph.places.values() for v in p.polygon]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    w = (x1 - x0) * SCALE + 2 * MARGIN
    h = (y1 - y0) * SCALE + 2 * MARGIN

    def tx(p):
        # flip y so the drawing matches the usual map orientation
        return (round((p[0] - x0) * SCALE + MARGIN, 2), round((y1 - p[1]) * SCALE + MARGIN, 2))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}" '
           f'viewBox="0 0 {w:.2f} {h:.2f}">', '<rect width="100%" height="100%" fill="white"/>']
    for pid, p in sorted(graph.places.items()):
        pts = " ".join(f"{a},{b}" for a, b in map(tx, p.polygon))
        fill = "#f4c7c3" if pid in avoid else "#cfe8cf" if pid in highlight else "#eeeeee"
        out.append(f'<polygon points="{pts}" fill="{fill}" stroke="#999" stroke-width="0.5"/>')
        if labels and len(graph.places) <= 200:
            cx, cy = tx(p.centroid)
            out.append(f'<text x="{cx}" y="{cy}" font-size="6" text-anchor="middle" fill="#666">{escape(pid)}</text>')
    for oid, o in sorted(graph.objects.items()):
        cx, cy = tx(o.position)
        if o.suspicious:
            out.append(f'<circle cx="{cx}" cy="{cy}" r="{o.inflated_radius * SCALE:.2f}" fill="#d9534f" '
                       f'fill-opacity="0.25" stroke="#d9534f"/>')
        color = "#d9534f" if o.suspicious else "#337ab7"
        out.append(f'<circle cx="{cx}" cy="{cy}" r="{o.radius * SCALE:.2f}" fill="{color}"/>')
        if labels:
            out.append(f'<text x="{cx}" y="{cy - o.radius * SCALE - 2:.2f}" font-size="7" '
                       f'text-anchor="middle">{escape(oid)}</text>')
    sx, sy = tx(graph.start_pose().position)
    out.append(f'<circle cx="{sx}" cy="{sy}" r="4" fill="black"/>')
    if plan is not None:
        for sym in plan.trajectories:
            traj = plan.trajectories[sym]
            pts = " ".join(f"{a},{b}" for a, b in (tx(wp.position) for wp in traj.waypoints))
            out.append(f'<polyline points="{pts}" fill="none" stroke="#2a7ae2" stroke-width="2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
