from __future__ import annotations

import dataclasses

import pytest

from sgtamp.domains import build_problem, inspection_domain
from sgtamp.generators import gen_grid, grid_id
from sgtamp.goals import And, Not, Or, atom
from sgtamp.planner import clause_avoid
from sgtamp.pruning import (
    OracleInapplicable,
    prune_places,
    redundancy_oracle,
    referenced_places,
    relevant_places,
    static_analysis,
    static_analysis_report,
)
from sgtamp.task_core import L, ActionSchema

V = lambda p: atom("VisitedPlace", p)  # noqa: E731


def fig_scene():
    """2 x 4 cells: P0..P3 on the bottom row, P4..P7 above; robot in P0."""
    return gen_grid(2, 4, cell_size=2.0)


def full(graph, goal, **kw):
    return build_problem(graph, inspection_domain("sparse", **kw), goal)


def test_fig_goal_keeps_p1_but_avoids_it_per_clause():
    g = fig_scene()
    goal = Or((And((V("P6"), Not(V("P1")))), V("P5")))
    reduced, res = prune_places(full(g, goal), g)
    assert res.kept_places == {"P0", "P1", "P5", "P6"}
    assert not res.avoid_places
    # a skeleton ending in the first clause must route around P1
    state = reduced.initial_state() | {("VisitedPlace", "P6")}
    assert clause_avoid(reduced, state) == {"P1"}
    state2 = reduced.initial_state() | {("VisitedPlace", "P5")}
    assert clause_avoid(reduced, state2) == frozenset()


def test_fig_goal_with_unit_avoid_clause():
    g = fig_scene()
    goal = And((Not(V("P1")), Or((V("P6"), V("P5")))))
    reduced, res = prune_places(full(g, goal), g)
    assert res.kept_places == {"P0", "P5", "P6"}
    assert res.reasons["P1"] == "negated_visited_clause"
    assert res.avoid_places == {"P1"}
    assert "P1" not in reduced.symbols
    assert reduced.goal == Or((V("P6"), V("P5")))


def test_goal_naming_every_place_removes_nothing():
    g = gen_grid(2, 3)
    goal = And(tuple(V(p) for p in g.places))
    _, res = prune_places(full(g, goal), g)
    assert not res.removed_places


def test_single_far_visit_on_10x10():
    g = gen_grid(10, 10)
    goal = V(grid_id(9, 9, 10))
    reduced, res = prune_places(full(g, goal), g)
    assert len(res.removed_places) == 98
    assert sorted(reduced.places()) == ["P0", "P99"]
    assert set(res.reasons.values()) == {"not_referenced"}


def test_far_visit_pattern_shrunk_agrees_with_oracle():
    # the oracle's 8-place cap admits a 2 x 4 shrink of the same corner-to-corner pattern
    g = gen_grid(2, 4)
    prob = full(g, V("P7"))
    _, res = prune_places(prob, g)
    assert len(res.removed_places) == 6
    for p in res.removed_places:
        assert redundancy_oracle(prob, g, p)
    assert not redundancy_oracle(prob, g, "P7")


def test_pruning_is_idempotent():
    g = gen_grid(3, 4)
    goal = Or((And((V("P5"), Not(V("P6")))), And((V("P11"), Not(V("P2"))))))
    once, r1 = prune_places(full(g, goal), g)
    twice, r2 = prune_places(once, g)
    assert not r2.removed_places
    assert set(twice.places()) == set(once.places())


def test_relevant_places_matches_prune_places():
    g = gen_grid(4, 4)
    for goal in (V("P15"), And((Not(V("P5")), V("P10"))), Or((V("P3"), And((V("P12"), Not(V("P9"))))))):
        kept, avoid = relevant_places(g, goal)
        _, res = prune_places(full(g, goal), g)
        assert kept == res.kept_places
        assert avoid == res.avoid_places


def test_referenced_places_include_start():
    g = gen_grid(2, 2)
    assert referenced_places(full(g, V("P3"))) == {"P0", "P3"}


# ---------------------------------------------------------------- static analysis
def test_static_analysis_matches_not_referenced_on_inspection():
    g = gen_grid(3, 3)
    prob = full(g, Or((V("P4"), V("P8"))))
    _, res = prune_places(prob, g)
    not_ref = {p for p, r in res.reasons.items() if r == "not_referenced"}
    assert static_analysis(prob) == not_ref


def test_static_analysis_keeps_report_home_places():
    g = gen_grid(3, 3)
    prob = build_problem(g, inspection_domain("sparse", report_home=True), And((atom("Reported"), V("P2"))),
                         home_places=["P6", "P8"])
    removed = static_analysis(prob)
    assert removed == set(g.places) - {"P0", "P2", "P6", "P8"}
    reduced, res = prune_places(prob, g, use_static=True)
    assert {"P6", "P8"} <= res.kept_places


def test_static_analysis_inapplicable_when_an_action_takes_any_place():
    g = gen_grid(2, 2)
    prob = full(g, V("P3"))
    teleport = ActionSchema("teleport", (("?p", "place"),), add=[L("VisitedPlace", "?p")])
    prob2 = dataclasses.replace(prob, actions=prob.actions + (teleport,))
    places, diag = static_analysis_report(prob2)
    assert places == frozenset()
    assert "teleport" in diag


# ---------------------------------------------------------------- redundancy oracle
def test_oracle_on_open_grid():
    g = gen_grid(2, 4)
    prob = full(g, V("P4"))
    assert redundancy_oracle(prob, g, "P7")
    assert not redundancy_oracle(prob, g, "P0")       # start place
    assert not redundancy_oracle(prob, g, "P4")       # goal place


def test_oracle_refuses_large_instances():
    g = gen_grid(3, 4)
    with pytest.raises(OracleInapplicable):
        redundancy_oracle(full(g, V("P4")), g, "P5")
    prob = build_problem(gen_grid(2, 2), inspection_domain("dense"), V("P3"))
    with pytest.raises(OracleInapplicable):
        redundancy_oracle(prob, gen_grid(2, 2), "P1")


def test_oracle_finds_the_figure_place_redundant_though_pruning_keeps_it():
    # every valid plan through P1 satisfies the V5 clause, so dropping P1 keeps it valid;
    # the CNF rule cannot see this and conservatively keeps P1
    g = fig_scene()
    goal = Or((And((V("P6"), Not(V("P1")))), V("P5")))
    prob = full(g, goal)
    assert redundancy_oracle(prob, g, "P1")
    assert "P1" in prune_places(prob, g)[1].kept_places


def test_oracle_on_a_corridor_between_avoided_places():
    g = gen_grid(1, 8)
    prob = full(g, And((Not(V("P1")), Not(V("P7")))))
    _, res = prune_places(prob, g)
    assert res.removed_places == set(g.places) - {"P0"}
    for p in res.removed_places:
        assert redundancy_oracle(prob, g, p)
