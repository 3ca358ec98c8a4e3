"""Incremental object solver: plan with the objects the goal names, add the
objects that block otherwise-feasible motions, repeat; finish with one
attempt over every object before declaring the task infeasible."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set

from . import geometry as geo
from .domains import DomainDefinition, build_problem, domain_of
from .goals import GoalFormula, substitute
from .planner import BlockingRecord, SolveConfig, SolveReport, solve
from .pruning import relevant_places
from .scene_graph import SceneGraph, id_key
from .task_core import ProblemInstance, plan_valid

POLICIES = ("all_blockers", "nearest_blocker")


@dataclass
class IncrementalConfig:
    per_round_budget: float = 10.0
    max_skeletons_per_round: int = 8
    newobj_policy: str = "all_blockers"
    fallback_k: int = 3

    def __post_init__(self):
        if self.per_round_budget <= 0 or self.max_skeletons_per_round <= 0:
            raise ValueError("budgets must be positive")
        if self.newobj_policy not in POLICIES:
            raise ValueError(f"unknown policy {self.newobj_policy!r}")


@dataclass(frozen=True)
class SymbolSet:
    places: FrozenSet[str]
    objects: FrozenSet[str]
    avoid: FrozenSet[str] = frozenset()

    @property
    def symbols(self) -> FrozenSet[str]:
        return frozenset({"robot"}) | self.places | self.objects


def goal_objects(goal: GoalFormula, graph: SceneGraph) -> Set[str]:
    return {s for s in goal.symbols() if s in graph.objects}


def initial_symbols(problem: ProblemInstance, graph: SceneGraph) -> SymbolSet:
    """The start place, the places named by the goal (minus unit-negated
    ones, which become avoid places) and the objects named by the goal."""
    objs = goal_objects(problem.goal, graph)
    kept, avoid = relevant_places(graph, problem.goal, objects=objs)
    return SymbolSet(frozenset(kept), frozenset(objs), frozenset(avoid))


def _goal_anchor(goal: GoalFormula, graph: SceneGraph):
    pts = []
    for pos, f in goal.literals():
        if not pos:
            continue
        for a in f[1:]:
            if a in graph.places:
                pts.append(graph.places[a].centroid)
            elif a in graph.objects:
                pts.append(graph.objects[a].position)
    if not pts:
        return graph.start_pose().position
    return (sum(p[0] for p in pts) / len(pts), sum(p[1] for p in pts) / len(pts))


def new_objects(records: Sequence[BlockingRecord], policy: str = "all_blockers", graph: Optional[SceneGraph] = None,
                remaining: Iterable[str] = (), goal: Optional[GoalFormula] = None, k: int = 3) -> Set[str]:
    """Objects to add after a failed round.

    ``all_blockers``: every object named by any blocking record.
    ``nearest_blocker``: the blocker closest to where its failed motion started.
    Empty feedback falls back to the ``k`` remaining objects nearest the goal.
    """
    remaining = set(remaining)
    named = [r for r in records if r.objects]
    if policy == "all_blockers":
        out = {o for r in named for o in r.objects}
    elif policy == "nearest_blocker":
        best = None
        for r in named:
            origin = r.attempt[0] if r.attempt else None
            for o in r.objects:
                d = 0.0 if origin is None or graph is None else geo.dist(origin, graph.objects[o].position)
                key = (d, id_key(o))
                if best is None or key < best[0]:
                    best = (key, o)
        out = {best[1]} if best else set()
    else:
        raise ValueError(f"unknown policy {policy!r}")
    if remaining:
        out &= remaining
    if not out and graph is not None and remaining:
        anchor = _goal_anchor(goal, graph) if goal is not None else graph.start_pose().position
        ranked = sorted(remaining, key=lambda o: (geo.dist(anchor, graph.objects[o].position), id_key(o)))
        out = set(ranked[:k])
    return out


def instance_for(graph: SceneGraph, domain: DomainDefinition, goal: GoalFormula, objects: Iterable[str],
                 prune: bool = True):
    """(instance, avoid places) over the given objects. Sparse instances keep
    only the non-redundant places; dense instances keep every place."""
    objects = set(objects)
    if domain.encoding == "sparse" and prune:
        kept, avoid = relevant_places(graph, goal, objects=objects)
        goal2 = substitute(goal, lambda f: False if (f[0] == "VisitedPlace" and f[1] in avoid) else None)
        return build_problem(graph, domain, goal2, places=kept, objects=objects), frozenset(avoid)
    return build_problem(graph, domain, goal, objects=objects), frozenset()


def inc_solve(problem: ProblemInstance, graph: SceneGraph, config: Optional[IncrementalConfig] = None,
              solve_config: Optional[SolveConfig] = None, deadline: Optional[float] = None) -> SolveReport:
    """``problem`` is the full instance (all objects); plans are re-validated on it."""
    config = config or IncrementalConfig()
    solve_config = solve_config or SolveConfig()
    t_start = time.perf_counter()
    end = t_start + solve_config.time_budget
    if deadline is not None:
        end = min(end, deadline)
    domain = domain_of(problem)
    goal = problem.goal
    all_objects = set(problem.objects())
    sym = initial_symbols(problem, graph)
    o_i = set(sym.objects) & all_objects | goal_objects(goal, graph)
    rounds: List[dict] = []
    feedback_all: List[BlockingRecord] = []
    timing = {"ground": 0.0, "search": 0.0, "bind": 0.0, "prune": 0.0}
    tried = 0
    calls = 0
    added: List[str] = []

    def finish(outcome, rep=None, msg=""):
        timing["total"] = time.perf_counter() - t_start
        return SolveReport(outcome, rep.plan if rep is not None and outcome == "solved" else None, tried,
                           feedback_all, dict(timing), calls, rounds, None, sorted(added, key=id_key), msg)

    def run(objs, round_cfg):
        nonlocal tried, calls
        t0 = time.perf_counter()
        inst, avoid = instance_for(graph, domain, goal, objs)
        timing["prune"] += time.perf_counter() - t0
        rep = solve(inst, graph, round_cfg, avoid, deadline=end)
        for k in ("ground", "search", "bind"):
            timing[k] += rep.timing.get(k, 0.0)
        tried += rep.skeletons_tried
        calls += rep.stream_calls
        return inst, rep

    while len(o_i) < len(all_objects):
        if time.perf_counter() > end:
            return finish("timeout")
        remaining_t = end - time.perf_counter()
        round_cfg = SolveConfig(**{**solve_config.__dict__,
                                   "time_budget": min(config.per_round_budget, remaining_t),
                                   "max_skeletons": config.max_skeletons_per_round})
        inst, rep = run(o_i, round_cfg)
        feedback_all.extend(rep.feedback)
        entry = {"round": len(rounds) + 1, "objects": sorted(o_i, key=id_key), "outcome": rep.outcome,
                 "skeletons": rep.skeletons_tried}
        if rep.solved:
            if plan_valid(problem, rep.plan.actions):
                entry["added"] = []
                rounds.append(entry)
                return finish("solved", rep)
            entry["note"] = "plan failed validation on the full instance"
        new = new_objects(rep.feedback, config.newobj_policy, graph, all_objects - o_i, goal, config.fallback_k)
        entry["added"] = sorted(new, key=id_key)
        entry["reason"] = "blocking feedback" if any(r.objects for r in rep.feedback) and \
            new <= {o for r in rep.feedback for o in r.objects} else "fallback nearest to goal"
        rounds.append(entry)
        if not new:
            break
        o_i |= new
        added.extend(sorted(new, key=id_key))

    if time.perf_counter() > end:
        return finish("timeout")
    final_cfg = SolveConfig(**{**solve_config.__dict__, "time_budget": end - time.perf_counter()})
    inst, rep = run(all_objects, final_cfg)
    feedback_all.extend(rep.feedback)
    rounds.append({"round": len(rounds) + 1, "objects": "all", "outcome": rep.outcome,
                   "skeletons": rep.skeletons_tried, "added": []})
    if rep.solved and plan_valid(problem, rep.plan.actions):
        return finish("solved", rep)
    if rep.outcome == "timeout":
        return finish("timeout")
    return finish("infeasible", msg=rep.message)
