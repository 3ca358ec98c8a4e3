"""End-to-end planning entry point shared by the CLI and the benchmarks."""
from __future__ import annotations

import time
from typing import Iterable, Optional

from .domains import build_problem, get_domain
from .goals import GoalFormula
from .incremental import IncrementalConfig, inc_solve, instance_for
from .planner import SolveConfig, SolveReport, solve
from .pruning import relevant_places
from .scene_graph import SceneGraph
from .task_core import ProblemInstance

FULL_VALIDATION_LIMIT = 60


def validation_instance(graph: SceneGraph, domain_name: str, encoding: str, goal: GoalFormula,
                        objects: Optional[Iterable[str]] = None) -> ProblemInstance:
    """The unpruned instance a returned plan is checked against.

    Small graphs use every place. Larger ones use every place the pruned
    instance could mention (start, object places, goal places including the
    negated ones) with every object, which keeps the negated goal literals
    checkable without grounding hundreds of unused places.
    """
    domain = get_domain(domain_name, encoding)
    if encoding == "dense" or len(graph.places) <= FULL_VALIDATION_LIMIT:
        return build_problem(graph, domain, goal, objects=objects)
    kept, neg = relevant_places(graph, goal, objects=objects)
    return build_problem(graph, domain, goal, places=kept | neg, objects=objects)


def plan_task(graph: SceneGraph, goal: GoalFormula, domain: str = "inspection", encoding: str = "sparse",
              incremental: bool = False, solve_config: Optional[SolveConfig] = None,
              inc_config: Optional[IncrementalConfig] = None, objects: Optional[Iterable[str]] = None,
              ) -> SolveReport:
    """Plan for ``goal`` on ``graph``. Reported times cover pruning,
    incremental rounds, grounding, search and binding."""
    solve_config = solve_config or SolveConfig()
    t0 = time.perf_counter()
    deadline = t0 + solve_config.time_budget
    objects = set(graph.objects if objects is None else objects)
    dom = get_domain(domain, encoding)
    if incremental:
        full = validation_instance(graph, domain, encoding, goal, objects)
        t_build = time.perf_counter() - t0
        rep = inc_solve(full, graph, inc_config, solve_config, deadline=deadline)
        rep.timing["prune"] = rep.timing.get("prune", 0.0) + t_build
        rep.timing["total"] = time.perf_counter() - t0
        return rep
    inst, avoid = instance_for(graph, dom, goal, objects)
    t_prune = time.perf_counter() - t0
    rep = solve(inst, graph, solve_config, avoid, deadline=deadline)
    rep.timing["prune"] = t_prune
    rep.timing["total"] = time.perf_counter() - t0
    if encoding == "sparse":
        rep.prune = {"kept": len(inst.places()), "removed": len(graph.places) - len(inst.places()),
                     "avoid": sorted(avoid)}
    return rep
