"""Removal of redundant place symbols, and a brute-force redundancy oracle.

A place is kept when some initial or goal fact mentions it. A place whose
``not VisitedPlace`` is a unit clause of the goal's CNF is removed too, and
handed to the motion layer as an avoid place instead.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from .domains import domain_of, restrict
from .goals import FormulaTooLarge, substitute, unit_clauses
from .scene_graph import SceneGraph, id_key
from .task_core import Fact, ProblemInstance

REASONS = ("not_referenced", "negated_visited_clause", "static_analysis")


@dataclass
class PruneResult:
    kept_places: FrozenSet[str]
    removed_places: FrozenSet[str]
    reasons: Dict[str, str]
    removed_facts: FrozenSet[Fact] = frozenset()
    avoid_places: FrozenSet[str] = frozenset()
    notes: List[str] = field(default_factory=list)

    def to_dict(self):
        return {
            "kept": sorted(self.kept_places, key=id_key),
            "removed": len(self.removed_places),
            "reasons": {r: sum(1 for v in self.reasons.values() if v == r) for r in REASONS},
            "avoid": sorted(self.avoid_places, key=id_key),
            "notes": list(self.notes),
        }


def referenced_places(problem: ProblemInstance) -> Set[str]:
    places = set(problem.places())
    out = set()
    for f in (*problem.init, *problem.goal.facts()):
        out.update(a for a in f[1:] if a in places)
    return out


def negated_unit_places(problem: ProblemInstance) -> Tuple[Set[str], Optional[str]]:
    """Places whose ``not VisitedPlace`` is a unit CNF clause (and that no
    initial fact mentions). Second value is a note when the CNF was skipped."""
    try:
        units = unit_clauses(problem.goal)
    except FormulaTooLarge as e:
        return set(), f"negated-clause rule skipped: {e}"
    in_init = {a for f in problem.init for a in f[1:]}
    return {f[1] for pos, f in units if not pos and f[0] == "VisitedPlace" and f[1] not in in_init}, None


def relevant_places(graph: SceneGraph, goal, start: Optional[str] = None,
                    objects: Optional[Iterable[str]] = None) -> Tuple[Set[str], Set[str]]:
    """Fast path equivalent to :func:`prune_places` on an inspection/retrieval
    instance built over the whole graph: (kept places, avoid places), computed
    without materialising the full instance."""
    start = start or graph.start_place()
    objs = set(graph.objects if objects is None else objects) | {s for s in goal.symbols() if s in graph.objects}
    init_places = {start} | {graph.objects[o].place for o in objs}
    goal_places = {s for s in goal.symbols() if s in graph.places}
    try:
        units = unit_clauses(goal)
        neg = {f[1] for pos, f in units if not pos and f[0] == "VisitedPlace"} - init_places
    except FormulaTooLarge:
        neg = set()
    return (init_places | goal_places) - neg, neg


def prune_places(problem: ProblemInstance, graph: SceneGraph, use_static: bool = False):
    """Return (reduced problem, PruneResult)."""
    places = set(problem.places())
    referenced = referenced_places(problem)
    neg, note = negated_unit_places(problem)
    reasons: Dict[str, str] = {}
    for p in places - referenced:
        reasons[p] = "not_referenced"
    for p in neg & places:
        reasons[p] = "negated_visited_clause"
    notes = [note] if note else []
    if use_static:
        extra, diag = static_analysis_report(problem)
        if diag:
            notes.append(diag)
        for p in extra - set(reasons):
            reasons[p] = "static_analysis"
    removed = frozenset(reasons)
    kept = frozenset(places - removed)

    def value(f):
        if f[0] == "VisitedPlace" and f[1] in removed:
            return False
        return None

    goal2 = substitute(problem.goal, value)
    removed_facts = frozenset(
        f for f in (*problem.init, *problem.goal.facts()) if any(a in removed for a in f[1:])
    )
    reduced = restrict(problem, graph, domain_of(problem), kept, problem.objects(), goal=goal2)
    avoid = frozenset(p for p in removed if reasons[p] == "negated_visited_clause")
    return reduced, PruneResult(kept, removed, reasons, removed_facts, avoid, notes)


def static_analysis_report(problem: ProblemInstance) -> Tuple[FrozenSet[str], str]:
    """Places parameterizing neither a static initial fact nor a goal fact,
    valid when every non-move action pins its place parameters with static,
    non-stream predicates. Returns (places, diagnostic)."""
    static = problem.static_predicates()
    certified_preds = {l.predicate for s in problem.streams for l in s.certified}
    pinning = static - certified_preds
    for a in problem.actions:
        if a.name in ("moveRelaxed", "move"):
            continue
        for var, kind in a.params:
            if kind != "place":
                continue
            if not any(l.positive and l.predicate in pinning and var in l.args for l in a.pre):
                return frozenset(), f"static analysis inapplicable: {a.name} does not pin {var} to a static fact"
    places = set(problem.places())
    used = set()
    for f in problem.init:
        if f[0] in static:
            used.update(a for a in f[1:] if a in places)
    for f in problem.goal.facts():
        used.update(a for a in f[1:] if a in places)
    return frozenset(places - used), ""


def static_analysis(problem: ProblemInstance) -> FrozenSet[str]:
    return static_analysis_report(problem)[0]


# ------------------------------------------------------------------ oracle
class OracleInapplicable(ValueError):
    pass


def redundancy_oracle(problem: ProblemInstance, graph: SceneGraph, place: str, depth_cap: int = 5) -> bool:
    """Brute-force check that ``place`` is redundant on a tiny sparse inspection instance.

    Every valid plan of length <= depth_cap whose actions take ``place`` as a
    parameter needs an alternate valid plan with the same motion sequence
    that does not. The alternate keeps every config, trajectory and
    inspection and only drops ``place`` from the actions' place parameters,
    so the motion sequences coincide by construction; its state plan lacks
    ``VisitedPlace(place)`` and every fact about ``place``. It exists iff no
    initial fact mentions ``place`` (actions of the reduced instance cannot
    read facts that were removed) and the goal still holds without
    ``VisitedPlace(place)``.

    Under the sparse encoding any chain of distinct configs is a valid move
    sequence, so the final state depends only on the set of configs visited
    and objects inspected; the enumeration runs over those pairs.
    """
    if problem.encoding != "sparse" or problem.domain != "inspection":
        raise OracleInapplicable("oracle covers the sparse inspection domain only")
    places = problem.places()
    if len(places) > 8 or len(problem.objects()) > 2 or depth_cap > 5:
        raise OracleInapplicable("instance exceeds oracle caps (8 places, 2 objects, depth 5)")
    if place not in places:
        raise OracleInapplicable(f"{place} is not a symbol of the instance")
    role = problem.meta["config_role"]
    cplace = problem.meta["config_place"]
    start = problem.meta["start_place"]
    configs = sorted(role, key=id_key)
    suspicious = {f[1] for f in problem.init if f[0] == "Suspicious"}
    base = set(problem.init)
    in_init = any(place in f[1:] for f in problem.init)

    def final_state(used, inspected):
        state = set(base)
        for c in used:
            state.add(("VisitedPlace", cplace[c]))
        for o in inspected:
            state.discard(("Suspicious", o))
            state.add(("Safe", o))
        return state | problem.certified

    others = [c for c in configs if c != "c0"]
    for k in range(0, depth_cap + 1):
        for extra in itertools.combinations(others, k):
            # a move from c0 takes the start place as a parameter
            mentions = any(cplace[c] == place for c in extra) or (k > 0 and start == place)
            insp_cands = [role[c][1] for c in extra if role[c][0] == "inspect" and role[c][1] in suspicious]
            for r in range(len(insp_cands) + 1):
                if k + r > depth_cap:
                    break
                for inspected in itertools.combinations(insp_cands, r):
                    state = final_state(("c0",) + extra, inspected)
                    if not mentions or not problem.goal.evaluate(state):
                        continue
                    if in_init or not problem.goal.evaluate(state - {("VisitedPlace", place)}):
                        return False
    return True
