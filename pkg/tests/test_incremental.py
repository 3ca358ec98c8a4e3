from __future__ import annotations

import pytest

from sgtamp.domains import build_problem, inspection_domain
from sgtamp.generators import gen_grid
from sgtamp.goals import And, Not, atom
from sgtamp.incremental import IncrementalConfig, inc_solve, initial_symbols, new_objects
from sgtamp.pipeline import plan_task, validation_instance
from sgtamp.planner import BlockingRecord
from sgtamp.scene_graph import ObjectNode
from sgtamp.streams import disc_of
from sgtamp.task_core import plan_valid
from conftest import alley_with, flood_fill_connected

V = lambda p: atom("VisitedPlace", p)  # noqa: E731


def row_scene():
    """3 x 3 grid with one small suspicious object in each top-row cell."""
    g = gen_grid(3, 3)
    return g.with_objects([ObjectNode(f"O{i}", (i - 0.5, 2.5), 0.1, 0.3, "suspicious", f"P{5 + i}")
                           for i in range(1, 4)])


def record(*objs, attempt=None):
    return BlockingRecord(0, 0, "moveRelaxed", tuple(objs), "blocked", attempt)


# ---------------------------------------------------------------- initial symbols
def test_initial_symbols_visit_goal():
    g = row_scene()
    sym = initial_symbols(build_problem(g, inspection_domain(), V("P5")), g)
    assert sym.symbols == {"robot", "P0", "P5"}


def test_initial_symbols_object_goal():
    g = row_scene()
    sym = initial_symbols(build_problem(g, inspection_domain(), atom("Safe", "O3")), g)
    assert sym.objects == {"O3"}
    assert sym.places == {"P0", "P8"}       # the start and the object's place


def test_initial_symbols_negated_place_goes_to_avoid():
    g = row_scene()
    sym = initial_symbols(build_problem(g, inspection_domain(), And((V("P5"), Not(V("P1"))))), g)
    assert "P1" not in sym.symbols
    assert sym.avoid == {"P1"}


# ---------------------------------------------------------------- new objects
def test_new_objects_single_record():
    assert new_objects([record("O1")]) == {"O1"}


def test_new_objects_union_of_blockers():
    assert new_objects([record("O1"), record("O2")], "all_blockers") == {"O1", "O2"}


def test_new_objects_nearest_blocker():
    g = row_scene()
    recs = [record("O3", attempt=((0.5, 0.5), (2.5, 2.5))), record("O1", attempt=((0.5, 0.5), (0.5, 2.5)))]
    assert new_objects(recs, "nearest_blocker", g) == {"O1"}


def test_new_objects_ignores_already_added():
    assert new_objects([record("O1", "O2")], remaining={"O2", "O3"}) == {"O2"}


def test_empty_feedback_falls_back_to_nearest_to_goal():
    g = gen_grid(1, 6).with_objects(
        [ObjectNode(f"O{i}", (i + 0.5, 0.5), 0.05, 0.1, "suspicious", f"P{i}") for i in range(1, 6)])
    out = new_objects([], graph=g, remaining=set(g.objects), goal=V("P5"), k=3)
    assert out == {"O5", "O4", "O3"}


def test_config_validation():
    with pytest.raises(ValueError):
        IncrementalConfig(per_round_budget=0)
    with pytest.raises(ValueError):
        IncrementalConfig(newobj_policy="random")


# ---------------------------------------------------------------- inc_solve
def test_unobstructed_goal_needs_no_objects():
    g = row_scene()
    rep = plan_task(g, V("P2"), incremental=True)
    assert rep.solved
    assert rep.objects_added == []
    assert len(rep.rounds) == 1 and rep.rounds[0]["objects"] == []


def test_single_blocker_is_found_and_inspected():
    # O1 severs the corridor; O2 is suspicious but off to the side
    g = alley_with(("O1", 6.0, 0.0, 0.3, 1.2, "suspicious"), ("O2", 2.5, 0.8, 0.05, 0.15, "suspicious"))
    start, goal_pt = g.start_pose().position, g.places["P11"].centroid
    assert not flood_fill_connected(g, start, goal_pt, [disc_of(g.objects["O1"])])
    assert flood_fill_connected(g, start, goal_pt, [disc_of(g.objects["O2"])])
    rep = plan_task(g, V("P11"), incremental=True)
    assert rep.solved
    r1 = rep.rounds[0]
    assert r1["objects"] == [] and r1["added"] == ["O1"]
    assert rep.objects_added == ["O1"]
    assert ("inspect", "O1") in [(a.name, a.args[0]) for a in rep.plan.actions]
    assert plan_valid(validation_instance(g, "inspection", "sparse", V("P11")), rep.plan.actions)


def test_impossible_goal_is_infeasible_after_all_objects():
    g = row_scene()
    goal = And((V("P4"), Not(V("P4"))))
    rep = plan_task(g, goal, incremental=True)
    assert rep.outcome == "infeasible"
    assert len(rep.rounds) <= len(g.objects) + 1
    assert rep.rounds[-1]["objects"] == "all"


def test_symbol_set_grows_every_round():
    g = row_scene()
    goal = And((V("P4"), Not(V("P4"))))
    full = validation_instance(g, "inspection", "sparse", goal)
    rep = inc_solve(full, g, IncrementalConfig(per_round_budget=5))
    sizes = [len(r["objects"]) for r in rep.rounds if r["objects"] != "all"]
    assert sizes == sorted(set(sizes))
