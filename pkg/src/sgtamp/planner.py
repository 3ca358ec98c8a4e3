"""Skeleton-then-bind solver.

Skeletons come lazily from :mod:`sgtamp.search`. Each one is bound step by
step: config symbols get poses from the samplers, trajectory symbols get
motions from the route/refine planner. Binding failures carry the objects
whose discs blocked an otherwise feasible motion; the incremental solver
uses them as feedback.
"""
from __future__ import annotations

import json
import math
import random
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

from . import geometry as geo
from .goals import dnf_clauses, FormulaTooLarge
from .scene_graph import SceneGraph
from .search import CompiledTask, PlanSkeleton, SkeletonSearch, compile_task, ground_all
from .streams import (
    CLEARANCE, R_INSPECT, Disc, MotionFailure, MotionParams, ObstacleSet, Pose, Trajectory, disc_of,
    plan_motion, sample_object_pose, sample_pose_in_place,
)
from .task_core import GroundAction, ProblemInstance, plan_valid

OUTCOMES = ("solved", "infeasible", "timeout")
MOVE_ACTIONS = ("moveRelaxed", "move")


@dataclass
class SolveConfig:
    time_budget: float = 60.0
    max_skeletons: int = 1000
    samples_per_skeleton: int = 50
    poses_per_step: int = 3
    max_doublings: int = 2
    heuristic: str = "hff"
    algorithm: str = "astar"
    weight: float = 1.0
    seed: int = 0
    r_inspect: float = R_INSPECT
    clearance: float = CLEARANCE
    rrt_nodes: int = 2000
    dnf_cap: int = 512

    def motion_params(self) -> MotionParams:
        return MotionParams(clearance=self.clearance, rrt_nodes=self.rrt_nodes)


@dataclass(frozen=True)
class BlockingRecord:
    skeleton: int
    step: int
    action: str
    objects: Tuple[str, ...]
    reason: str
    attempt: Optional[Tuple[Tuple[float, float], ...]] = None

    def to_dict(self):
        d = {"skeleton": self.skeleton, "step": self.step, "action": self.action,
             "objects": list(self.objects), "reason": self.reason}
        if self.attempt is not None:
            d["attempt"] = [list(p) for p in self.attempt]
        return d


@dataclass
class BindFailure:
    step: int
    action: str
    reason: str
    records: List[BlockingRecord] = field(default_factory=list)
    retryable: bool = True

    @property
    def blockers(self) -> FrozenSet[str]:
        return frozenset(o for r in self.records for o in r.objects)


@dataclass
class BoundPlan:
    actions: Tuple[GroundAction, ...]
    configs: Dict[str, Pose]
    trajectories: Dict[str, Trajectory]
    placements: Dict[int, Tuple[str, Tuple[float, float]]] = field(default_factory=dict)

    def __len__(self):
        return len(self.actions)

    def steps(self) -> List[Tuple[str, ...]]:
        return [a.key for a in self.actions]

    def to_dict(self):
        return {
            "actions": [{"name": a.name, "args": list(a.args)} for a in self.actions],
            "configs": {k: v.to_dict() for k, v in sorted(self.configs.items())},
            "trajectories": {k: v.to_dict() for k, v in sorted(self.trajectories.items())},
            "placements": {str(k): {"object": o, "position": list(p)} for k, (o, p) in sorted(self.placements.items())},
        }

    @classmethod
    def from_dict(cls, d, problem: ProblemInstance) -> "BoundPlan":
        actions = tuple(problem.ground_step(a["name"], a["args"]) for a in d["actions"])
        return cls(
            actions,
            {k: Pose.from_dict(v) for k, v in d.get("configs", {}).items()},
            {k: Trajectory.from_dict(v) for k, v in d.get("trajectories", {}).items()},
            {int(k): (v["object"], tuple(v["position"])) for k, v in d.get("placements", {}).items()},
        )


@dataclass
class SolveReport:
    outcome: str
    plan: Optional[BoundPlan] = None
    skeletons_tried: int = 0
    feedback: List[BlockingRecord] = field(default_factory=list)
    timing: Dict[str, float] = field(default_factory=dict)
    stream_calls: int = 0
    rounds: List[dict] = field(default_factory=list)
    prune: Optional[dict] = None
    objects_added: List[str] = field(default_factory=list)
    message: str = ""

    def __post_init__(self):
        if self.outcome not in OUTCOMES:
            raise ValueError(f"bad outcome {self.outcome!r}")

    @property
    def solved(self) -> bool:
        return self.outcome == "solved"

    def to_dict(self):
        return {
            "outcome": self.outcome,
            "plan": None if self.plan is None else self.plan.to_dict(),
            "skeletons_tried": self.skeletons_tried,
            "stream_calls": self.stream_calls,
            "feedback": [r.to_dict() for r in self.feedback],
            "timing_ms": {k: round(v * 1000.0, 3) for k, v in sorted(self.timing.items())},
            "rounds": self.rounds,
            "prune": self.prune,
            "objects_added": list(self.objects_added),
            "message": self.message,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


# ------------------------------------------------------------------ avoid set
def clause_avoid(problem: ProblemInstance, state, cap: int = 512) -> FrozenSet[str]:
    """Places negated (as VisitedPlace) in the first goal clause satisfied by
    ``state``; every negated place when the DNF is too large."""
    try:
        clauses = dnf_clauses(problem.goal, cap)
    except FormulaTooLarge:
        return frozenset(f[1] for p, f in problem.goal.literals() if not p and f[0] == "VisitedPlace")
    for c in clauses:
        if all((f in state) == p for p, f in c):
            return frozenset(f[1] for p, f in c if not p and f[0] == "VisitedPlace")
    return frozenset()


# ------------------------------------------------------------------ binding
class Binder:
    """Binds skeletons of one problem. Owns stream caches (per solve)."""

    def __init__(self, problem: ProblemInstance, graph: SceneGraph, config: SolveConfig,
                 avoid: FrozenSet[str] = frozenset()):
        self.problem = problem
        self.graph = graph
        self.config = config
        self.avoid = frozenset(avoid)
        self.params = config.motion_params()
        self.meta = problem.meta
        sp = graph.start_pose()
        self.start = Pose(sp.position, sp.heading)
        self.motion_cache: Dict[tuple, Union[Trajectory, MotionFailure]] = {}
        self.calls = 0
        self.instance_objects = set(problem.objects())

    # deterministic per-symbol randomness
    def _rng(self, *key) -> random.Random:
        return random.Random(":".join(map(str, (self.config.seed,) + key)))

    def _obstacles(self, state, positions, held, avoid) -> ObstacleSet:
        discs = []
        for oid, obj in self.graph.objects.items():
            if oid == held:
                continue
            if oid in self.instance_objects:
                sus = ("Suspicious", oid) in state
            else:
                sus = obj.suspicious
            r = (obj.inflated_radius if sus else obj.radius) + self.config.clearance
            discs.append(Disc(positions[oid], r, oid))
        return ObstacleSet(tuple(discs), frozenset(avoid))

    def _motion(self, p1_pose, p2_pose, p1, p2, obstacles, approach):
        key = (p1_pose, p2_pose, p1, p2, obstacles.key(), approach)
        hit = self.motion_cache.get(key)
        if hit is not None:
            return hit
        self.calls += 1
        rng = self._rng("motion", p1_pose.position, p2_pose.position)
        res = plan_motion(self.graph, p1_pose, p2_pose, p1, p2, obstacles, rng, self.params, approach)
        self.motion_cache[key] = res
        return res

    def _sample_config(self, c, place, obstacles, positions, k, level):
        role, target = self.meta["config_role"][c]
        rng = self._rng("pose", c, level, k)
        self.calls += 1
        if role == "pose":
            return sample_pose_in_place(self.graph, place, obstacles, rng)
        obj = self.graph.objects[target]
        return sample_object_pose(self.graph, obj, obstacles, rng, self.config.r_inspect, self.config.clearance,
                                  place=place, position=positions[target])

    def _place_point(self, obj, pose: Pose, place: str, positions, held):
        r = obj.radius + self.config.clearance + 0.05
        poly = self.graph.places[place].polygon
        for k in range(16):
            th = pose.heading + k * math.pi / 8
            p = (pose.position[0] + r * math.cos(th), pose.position[1] + r * math.sin(th))
            if not geo.point_in_polygon(p, poly, tol=0.0):
                continue
            if any(geo.dist(p, positions[o]) <= self.graph.objects[o].radius + obj.radius
                   for o in positions if o != obj.id):
                continue
            return p
        return None

    def bind(self, skeleton: PlanSkeleton, level: int = 0, deadline: Optional[float] = None):
        budget = self.config.samples_per_skeleton * (2 ** level)
        per_step = self.config.poses_per_step * (2 ** level)
        states = skeleton.states(self.problem)
        avoid_all = clause_avoid(self.problem, states[-1], self.config.dnf_cap) | self.avoid
        configs: Dict[str, Pose] = {"c0": self.start}
        trajs: Dict[str, Trajectory] = {}
        placements: Dict[int, Tuple[str, Tuple[float, float]]] = {}
        positions = {oid: o.position for oid, o in self.graph.objects.items()}
        held = None
        used = 0
        for k, a in enumerate(skeleton.actions):
            if deadline is not None and time.perf_counter() > deadline:
                return BindFailure(k, str(a), "timeout", retryable=True)
            state = states[k]
            if a.name in MOVE_ACTIONS:
                p1, p2, c1, c2, t = a.args
                forbidden = avoid_all - {p1, p2}
                obstacles = self._obstacles(state, positions, held, forbidden)
                role, target = self.meta["config_role"][c2]
                approach = None
                # the hazard disc may only be entered to inspect the object next
                nxt = skeleton.actions[k + 1] if k + 1 < len(skeleton.actions) else None
                inspects_next = nxt is not None and nxt.name == "inspect" and tuple(nxt.args) == (target, c2)
                if role == "inspect" and target in positions and target != held and inspects_next:
                    sus = ("Suspicious", target) in state
                    if sus:
                        obj = self.graph.objects[target]
                        approach = Disc(positions[target], obj.inflated_radius + self.config.clearance, target)
                start_pose = configs[c1]
                records = []
                candidates = []
                if c2 in configs:
                    candidates = [configs[c2]]
                    fixed = True
                else:
                    fixed = False
                done = False
                tries = 0
                sample_i = 0
                while not done:
                    if fixed:
                        if tries >= 1:
                            break
                        pose2 = configs[c2]
                    else:
                        if tries >= per_step or used >= budget:
                            break
                        pose2 = self._sample_config(c2, p2, obstacles, positions, sample_i, level)
                        sample_i += 1
                        used += 1
                        if pose2 is None:
                            records.append(BlockingRecord(skeleton.index, k, str(a), (), "samples_exhausted"))
                            tries += 1
                            continue
                    tries += 1
                    used += 1
                    res = self._motion(start_pose, pose2, p1, p2, obstacles, approach)
                    if isinstance(res, Trajectory):
                        configs[c2] = pose2
                        trajs[t] = res
                        done = True
                    else:
                        records.append(BlockingRecord(skeleton.index, k, str(a), tuple(sorted(res.blockers)),
                                                      res.reason, res.optimistic))
                        if res.reason in ("start_in_collision", "no_route"):
                            break
                if not done:
                    reason = records[-1].reason if records else "samples_exhausted"
                    retry = (not fixed) and reason not in ("start_in_collision", "no_route")
                    return BindFailure(k, str(a), reason, [r for r in records if r.objects] or records[-1:], retry)
            elif a.name == "inspect":
                o, c = a.args
                pose = configs.get(c)
                if pose is None or geo.dist(pose.position, positions[o]) > self.config.r_inspect + 1e-9:
                    return BindFailure(k, str(a), "inspect_pose_out_of_range", retryable=False)
            elif a.name == "pick":
                o, c, p = a.args
                pose = configs.get(c)
                if pose is None or geo.dist(pose.position, positions[o]) > self.config.r_inspect + 1e-9:
                    return BindFailure(k, str(a), "grasp_out_of_reach", retryable=True)
                held = o
            elif a.name == "place":
                o, c, p = a.args
                pose = configs.get(c)
                pt = None if pose is None else self._place_point(self.graph.objects[o], pose, p, positions, held)
                if pt is None:
                    return BindFailure(k, str(a), "no_placement", retryable=True)
                positions[o] = pt
                placements[k] = (o, pt)
                held = None
        return BoundPlan(tuple(skeleton.actions), configs, trajs, placements)


# ------------------------------------------------------------------ solve
def solve(problem: ProblemInstance, graph: SceneGraph, config: Optional[SolveConfig] = None,
          avoid: FrozenSet[str] = frozenset(), deadline: Optional[float] = None,
          task: Optional[CompiledTask] = None) -> SolveReport:
    """Round-robin over skeletons: bind each new one with the base sample
    budget, queue failures for retries with doubled budgets."""
    config = config or SolveConfig()
    t_start = time.perf_counter()
    end = t_start + config.time_budget
    if deadline is not None:
        end = min(end, deadline)
    timing = {"ground": 0.0, "search": 0.0, "bind": 0.0}
    if task is None:
        t0 = time.perf_counter()
        task = compile_task(problem, dnf_cap=config.dnf_cap)
        timing["ground"] = time.perf_counter() - t0
    search = SkeletonSearch(task, config.heuristic, config.algorithm, config.weight)
    binder = Binder(problem, graph, config, avoid)
    feedback: List[BlockingRecord] = []
    retry: deque = deque()
    tried = 0
    new_count = 0
    turn_new = True

    def report(outcome, plan=None, msg=""):
        timing["search"] = search.elapsed
        timing["total"] = time.perf_counter() - t_start
        return SolveReport(outcome, plan, tried, feedback, dict(timing), binder.calls, message=msg)

    while True:
        now = time.perf_counter()
        if now > end:
            return report("timeout")
        sk = None
        level = 0
        can_new = new_count < config.max_skeletons and not search.exhausted
        if can_new and (turn_new or not retry):
            sk = search.next(end)
            if sk is None:
                if search.exhausted:
                    if search.dead_start:
                        return report("infeasible", msg="goal unreachable in the symbolic abstraction")
                    continue
                return report("timeout")
            new_count += 1
        elif retry:
            sk, level = retry.popleft()
        else:
            if search.exhausted or new_count >= config.max_skeletons:
                if new_count == 0:
                    return report("infeasible", msg="no skeleton exists")
                return report("infeasible", msg="all skeletons failed to bind at the maximum budget")
            return report("timeout")
        turn_new = not turn_new
        tried += 1
        t0 = time.perf_counter()
        res = binder.bind(sk, level, end)
        timing["bind"] += time.perf_counter() - t0
        if isinstance(res, BoundPlan):
            if not plan_valid(problem, res.actions):
                raise AssertionError("bound plan failed symbolic validation")
            return report("solved", res)
        feedback.extend(res.records)
        if res.reason == "timeout":
            return report("timeout")
        if res.retryable and level < config.max_doublings:
            retry.append((sk, level + 1))
