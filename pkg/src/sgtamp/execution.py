"""Motion sequences, the place verifier, verifier-extended state plans,
execution-consistency checking and a fixed-step execution simulator."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

from . import geometry as geo
from .planner import MOVE_ACTIONS, BoundPlan
from .scene_graph import SceneGraph
from .streams import Disc, Trajectory, discs_hit
from .task_core import Fact, GroundAction, ProblemInstance, apply, applicable, fact_str, state_plan

DT = 0.05
SPEED = 1.0


@dataclass(frozen=True)
class FollowPath:
    symbol: str
    trajectory: Trajectory


@dataclass(frozen=True)
class InspectObject:
    object_id: str


@dataclass(frozen=True)
class PickObject:
    object_id: str


@dataclass(frozen=True)
class PlaceObject:
    object_id: str
    position: Tuple[float, float]


Primitive = Union[FollowPath, InspectObject, PickObject, PlaceObject]


@dataclass(frozen=True)
class MotionSequence:
    primitives: Tuple[Primitive, ...]
    grouping: Tuple[Tuple[int, ...], ...]   # action index -> primitive indices

    def for_action(self, k: int) -> List[Primitive]:
        return [self.primitives[i] for i in self.grouping[k]]

    def __len__(self):
        return len(self.primitives)


class UnboundSymbol(ValueError):
    pass


def motion_sequence(plan: BoundPlan) -> MotionSequence:
    prims: List[Primitive] = []
    groups: List[Tuple[int, ...]] = []
    for k, a in enumerate(plan.actions):
        start = len(prims)
        if a.name in MOVE_ACTIONS:
            t = a.args[4]
            if t not in plan.trajectories:
                raise UnboundSymbol(f"trajectory {t} of step {k} is unbound")
            prims.append(FollowPath(t, plan.trajectories[t]))
        elif a.name == "inspect":
            prims.append(InspectObject(a.args[0]))
        elif a.name == "pick":
            prims.append(PickObject(a.args[0]))
        elif a.name == "place":
            if k not in plan.placements:
                raise UnboundSymbol(f"placement of step {k} is unbound")
            prims.append(PlaceObject(a.args[0], plan.placements[k][1]))
        groups.append(tuple(range(start, len(prims))))
    return MotionSequence(tuple(prims), tuple(groups))


def v_place(primitives: Sequence[Primitive], graph: SceneGraph) -> FrozenSet[Fact]:
    """VisitedPlace for every place met by any FollowPath segment."""
    out = set()
    for p in primitives:
        if isinstance(p, FollowPath):
            for seg in p.trajectory.segments():
                for pid in graph.segment_place_intersections(seg):
                    out.add(("VisitedPlace", pid))
    return frozenset(out)


def empty_verifier(primitives, graph=None) -> FrozenSet[Fact]:
    return frozenset()


@dataclass(frozen=True)
class ExtendedStatePlan:
    states: Tuple[FrozenSet[Fact], ...]
    base_states: Tuple[FrozenSet[Fact], ...]


def extend_state_plan(problem: ProblemInstance, plan: Sequence, motion_seq: MotionSequence,
                      verifier: Callable[[Sequence[Primitive]], FrozenSet[Fact]]) -> ExtendedStatePlan:
    """I'0 = I0; I'k = Ik | (I'k-1 - Del(ak)) | V(ak)."""
    actions = plan.actions if isinstance(plan, BoundPlan) else plan
    sp = state_plan(problem, actions)
    ext = [sp.states[0]]
    for k, a in enumerate(sp.actions):
        ext.append(sp.states[k + 1] | (ext[-1] - a.delete) | verifier(motion_seq.for_action(k)))
    return ExtendedStatePlan(tuple(ext), sp.states)


@dataclass
class ConsistencyResult:
    ok: bool
    violations: List[str] = field(default_factory=list)

    def __bool__(self):
        return self.ok


def check_execution_consistency(problem: ProblemInstance, plan, motion_seq: MotionSequence,
                                graph: SceneGraph) -> ConsistencyResult:
    """Validity of the place-verifier-extended state plan."""
    ext = extend_state_plan(problem, plan, motion_seq, lambda prims: v_place(prims, graph))
    sp_actions = [problem.ground_step(a.name, tuple(a.args)) for a in
                  (plan.actions if isinstance(plan, BoundPlan) else plan)]
    violations = []
    for k, a in enumerate(sp_actions):
        s = ext.states[k]
        for f in sorted(a.pre_pos - s):
            violations.append(f"step {k} {a}: {fact_str(f)} missing")
        for f in sorted(a.pre_neg & s):
            violations.append(f"step {k} {a}: not {fact_str(f)} violated")
    final = ext.states[-1]
    if not problem.goal.evaluate(final):
        base = ext.base_states[-1]
        culprits = sorted(f for pos, f in problem.goal.literals() if not pos and f in final and f not in base)
        if culprits:
            violations.extend(f"goal: not {fact_str(f)} violated" for f in culprits)
        else:
            violations.append("goal not satisfied by the extended final state")
    return ConsistencyResult(not violations, violations)


# ------------------------------------------------------------------ simulation
@dataclass(frozen=True)
class Tick:
    t: float
    position: Tuple[float, float]
    heading: float
    place: Optional[str]
    suspicious: Tuple[str, ...]

    def to_dict(self):
        return {"t": round(self.t, 6), "x": self.position[0], "y": self.position[1], "heading": self.heading,
                "place": self.place, "suspicious": list(self.suspicious)}


@dataclass
class Trace:
    ticks: List[Tick]
    faults: List[str]

    def to_dict(self):
        return {"ticks": [t.to_dict() for t in self.ticks], "faults": list(self.faults)}


def simulate(motion_seq: MotionSequence, graph: SceneGraph, dt: float = DT, speed: float = SPEED,
             start=None) -> Trace:
    """Step the robot along the motion sequence at fixed ``dt``.

    Active obstacles are suspicious objects (inflated radius) and safe
    objects (physical radius); held objects are ignored. The final leg of a
    path that ends in an inspection may enter the inspected object's hazard
    zone. Any other contact is recorded as a fault.
    """
    status = {oid: o.status for oid, o in graph.objects.items()}
    positions = {oid: o.position for oid, o in graph.objects.items()}
    held = None
    start = start or graph.start_pose()
    pos, heading = start.position, start.heading
    t = 0.0
    faults: List[str] = []

    def tick():
        sus = tuple(sorted(o for o, s in status.items() if s == "suspicious"))
        return Tick(t, pos, heading, graph.place_containing(pos), sus)

    ticks = [tick()]
    prims = motion_seq.primitives
    for i, p in enumerate(prims):
        if isinstance(p, FollowPath):
            traj = p.trajectory
            nxt = prims[i + 1] if i + 1 < len(prims) else None
            exempt = nxt.object_id if isinstance(nxt, InspectObject) else None
            discs = []
            for oid, o in graph.objects.items():
                if oid == held:
                    continue
                r = o.inflated_radius if status[oid] == "suspicious" else o.radius
                discs.append(Disc(positions[oid], r, oid))
            if geo.dist(traj.start.position, pos) > 1e-6:
                faults.append(f"primitive {i}: path starts {geo.dist(traj.start.position, pos):.3f} m from the robot")
            segs = traj.segments()
            for j, seg in enumerate(segs):
                active = discs if (exempt is None or j < len(segs) - 1) else [d for d in discs if d.object_id != exempt]
                hit = discs_hit(seg, active)
                if hit:
                    faults.append(f"primitive {i} segment {j}: enters the disc of {', '.join(sorted(hit))}")
            L = traj.length
            n = int(math.ceil(L / (speed * dt) - 1e-9)) if L > 0 else 0
            pts = [w.position for w in traj.waypoints]
            cum = [0.0]
            for a, b in zip(pts[:-1], pts[1:]):
                cum.append(cum[-1] + geo.dist(a, b))
            seg_i = 0
            for s in range(1, n + 1):
                d = min(L, s * speed * dt)
                while seg_i < len(pts) - 2 and cum[seg_i + 1] < d:
                    seg_i += 1
                a, b = pts[seg_i], pts[min(seg_i + 1, len(pts) - 1)]
                seg_len = cum[min(seg_i + 1, len(cum) - 1)] - cum[seg_i]
                u = 0.0 if seg_len <= 0 else (d - cum[seg_i]) / seg_len
                pos = (a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1]))
                heading = math.atan2(b[1] - a[1], b[0] - a[0]) if seg_len > 0 else heading
                t += dt
                ticks.append(tick())
            pos, heading = traj.end.position, traj.end.heading
        elif isinstance(p, InspectObject):
            status[p.object_id] = "safe"
        elif isinstance(p, PickObject):
            held = p.object_id
        elif isinstance(p, PlaceObject):
            positions[p.object_id] = p.position
            held = None
    return Trace(ticks, faults)
