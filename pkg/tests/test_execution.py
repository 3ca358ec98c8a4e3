from __future__ import annotations

import math

import pytest

from sgtamp.domains import build_problem, inspection_domain
from sgtamp.execution import (
    DT,
    SPEED,
    FollowPath,
    InspectObject,
    MotionSequence,
    UnboundSymbol,
    check_execution_consistency,
    empty_verifier,
    extend_state_plan,
    motion_sequence,
    simulate,
    v_place,
)
from sgtamp.generators import gen_grid
from sgtamp.goals import And, Not, atom
from sgtamp.pipeline import plan_task
from sgtamp.planner import BoundPlan
from sgtamp.streams import Pose, Trajectory, make_trajectory
from sgtamp.task_core import plan_valid, state_plan
from conftest import blocked_alley, start_of

V = lambda p: atom("VisitedPlace", p)  # noqa: E731
VF = lambda p: ("VisitedPlace", p)  # noqa: E731


def straight(graph, a, b):
    return make_trajectory(graph, [a, b])


def move_plan(graph, goal, target_place, target_pos, traj=None):
    """One moveRelaxed from the start to ``target_pos`` along ``traj`` (straight by default)."""
    prob = build_problem(graph, inspection_domain(), goal)
    start = graph.start_pose()
    c2 = f"q_{target_place}"
    t = f"t_c0-{c2}"
    act = prob.ground_step("moveRelaxed", (graph.start_place(), target_place, "c0", c2, t))
    traj = traj or straight(graph, start.position, target_pos)
    return prob, BoundPlan((act,), {"c0": Pose(start.position, start.heading), c2: Pose(target_pos)}, {t: traj})


# ---------------------------------------------------------------- motion sequences
def test_empty_plan_gives_empty_sequence():
    ms = motion_sequence(BoundPlan((), {}, {}))
    assert len(ms) == 0 and ms.grouping == ()


def test_move_then_inspect_maps_to_follow_then_inspect():
    g = blocked_alley()
    prob = build_problem(g, inspection_domain(), atom("Safe", "O1"))
    acts = (prob.ground_step("moveRelaxed", ("P0", "P4", "c0", "qi_O1", "t_c0-qi_O1")),
            prob.ground_step("inspect", ("O1", "qi_O1")))
    traj = straight(g, (0.5, 0.0), (4.5, 0.0))
    plan = BoundPlan(acts, {"c0": start_of(g), "qi_O1": Pose((4.5, 0.0))}, {"t_c0-qi_O1": traj})
    ms = motion_sequence(plan)
    assert ms.primitives == (FollowPath("t_c0-qi_O1", traj), InspectObject("O1"))
    assert ms.grouping == ((0,), (1,))


def test_unbound_trajectory_is_reported():
    g = gen_grid(1, 2)
    prob = build_problem(g, inspection_domain(), V("P1"))
    act = prob.ground_step("moveRelaxed", ("P0", "P1", "c0", "q_P1", "t_c0-q_P1"))
    with pytest.raises(UnboundSymbol):
        motion_sequence(BoundPlan((act,), {}, {}))


# ---------------------------------------------------------------- place verifier
def test_diagonal_through_a_corner_visits_four_places():
    # 2 x 4 grid of unit cells: the diagonal P0 -> P5 passes the shared corner (1, 1)
    g = gen_grid(2, 4)
    traj = straight(g, (0.5, 0.5), (1.5, 1.5))
    assert v_place([FollowPath("t", traj)], g) == {VF("P0"), VF("P1"), VF("P4"), VF("P5")}


def test_verifier_of_empty_subsequence_and_non_motion():
    g = gen_grid(2, 2)
    assert v_place([], g) == frozenset()
    assert v_place([InspectObject("O1")], g) == frozenset()


def test_zero_length_trajectory_visits_its_place():
    g = gen_grid(2, 2)
    traj = Trajectory((Pose((1.5, 0.5)),), ("P1",))
    assert v_place([FollowPath("t", traj)], g) == {VF("P1")}


# ---------------------------------------------------------------- extended state plans
def test_empty_verifier_reproduces_the_state_plan():
    g = gen_grid(2, 2)
    prob, plan = move_plan(g, V("P3"), "P3", (1.5, 1.5))
    ext = extend_state_plan(prob, plan, motion_sequence(plan), empty_verifier)
    assert ext.states == state_plan(prob, plan.actions).states


def test_verifier_facts_persist_until_deleted():
    g = blocked_alley()
    prob = build_problem(g, inspection_domain(), atom("Safe", "O1"))
    acts = (prob.ground_step("moveRelaxed", ("P0", "P4", "c0", "qi_O1", "t_c0-qi_O1")),
            prob.ground_step("inspect", ("O1", "qi_O1")))
    plan = BoundPlan(acts, {"c0": start_of(g), "qi_O1": Pose((4.5, 0.0))},
                     {"t_c0-qi_O1": straight(g, (0.5, 0.0), (4.5, 0.0))})
    ms = motion_sequence(plan)

    def verifier(prims):
        # at the move: one inert marker and a fact the inspection deletes later
        return frozenset({("Marker",), ("Suspicious", "O1")}) if isinstance(prims[0], FollowPath) else frozenset()

    ext = extend_state_plan(prob, plan, ms, verifier)
    assert ("Marker",) in ext.states[1] and ("Marker",) in ext.states[2]
    assert ("Suspicious", "O1") not in ext.states[2]


def test_crossing_an_avoided_place_is_a_violation():
    g = gen_grid(2, 4)
    goal = And((V("P5"), Not(V("P1"))))
    prob, plan = move_plan(g, goal, "P5", (1.5, 1.5))
    # symbolically the plan is fine: only P0 and P5 are declared visited
    assert plan_valid(prob, plan.actions)
    res = check_execution_consistency(prob, plan, motion_sequence(plan), g)
    assert not res.ok
    assert any("VisitedPlace(P1)" in v for v in res.violations)


def test_detour_around_the_avoided_place_is_consistent():
    g = gen_grid(2, 4)
    goal = And((V("P5"), Not(V("P1"))))
    traj = make_trajectory(g, [(0.5, 0.5), (0.5, 1.5), (1.5, 1.5)])
    prob, plan = move_plan(g, goal, "P5", (1.5, 1.5), traj)
    res = check_execution_consistency(prob, plan, motion_sequence(plan), g)
    assert res.ok, res.violations


# ---------------------------------------------------------------- simulator
def test_simulating_nothing_gives_one_tick():
    g = gen_grid(2, 2)
    trace = simulate(MotionSequence((), ()), g)
    assert len(trace.ticks) == 1 and trace.faults == []


def test_tick_count_of_a_straight_path():
    g = gen_grid(1, 3)
    traj = straight(g, (0.5, 0.5), (2.5, 0.5))
    trace = simulate(MotionSequence((FollowPath("t", traj),), ((0,),)), g)
    assert len(trace.ticks) == math.ceil(2.0 / (SPEED * DT)) + 1
    assert trace.ticks[-1].position == pytest.approx((2.5, 0.5))
    assert [t.place for t in trace.ticks][::20] == ["P0", "P1", "P2"]


def test_driving_through_a_hazard_is_a_fault():
    g = blocked_alley()
    traj = straight(g, (0.5, 0.0), (11.5, 0.0))
    trace = simulate(MotionSequence((FollowPath("t", traj),), ((0,),)), g)
    assert trace.faults and "O1" in trace.faults[0]


def test_planned_alley_run_is_fault_free_and_neutralises_the_object():
    g = blocked_alley()
    rep = plan_task(g, V("P11"), incremental=False)
    trace = simulate(motion_sequence(rep.plan), g)
    assert trace.faults == []
    assert "O1" in trace.ticks[0].suspicious
    assert "O1" not in trace.ticks[-1].suspicious
    assert trace.ticks[-1].place == "P11"
