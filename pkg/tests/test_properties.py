"""Property-based checks of the invariants the planner relies on."""
from __future__ import annotations

import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from sgtamp.domains import build_problem, inspection_domain
from sgtamp.execution import MotionSequence, empty_verifier, extend_state_plan
from sgtamp.generators import gen_grid
from sgtamp.goals import FALSE, TRUE, And, Atom, Not, Or, cnf_clauses, sample_goal, to_cnf, to_dnf, unit_clauses
from sgtamp.pruning import prune_places
from sgtamp.search import ground_all
from sgtamp.streams import Disc, route, route_length, segment_free
from sgtamp.task_core import GroundAction, applicable, apply, plan_valid, state_plan
from conftest import dijkstra_length

PROPS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])

FACTS = [("VisitedPlace", f"P{i}") for i in range(4)]
atoms = st.sampled_from(FACTS).map(Atom)
literals = st.one_of(atoms, atoms.map(Not))
formulas = st.recursive(
    st.one_of(literals, st.just(TRUE), st.just(FALSE)),
    lambda kids: st.one_of(st.lists(kids, min_size=1, max_size=3).map(lambda xs: And(tuple(xs))),
                           st.lists(kids, min_size=1, max_size=3).map(lambda xs: Or(tuple(xs)))),
    max_leaves=8,
)


def states():
    for bits in itertools.product((False, True), repeat=len(FACTS)):
        yield {f for f, v in zip(FACTS, bits) if v}


# ---------------------------------------------------------------- goal formulas
@PROPS
@given(formulas)
def test_normal_forms_are_equivalent(f):
    cnf, dnf = to_cnf(f), to_dnf(f)
    for s in states():
        assert cnf.evaluate(s) == f.evaluate(s) == dnf.evaluate(s)


@PROPS
@given(formulas)
def test_unit_clauses_match_the_expanded_cnf(f):
    expected = sorted((next(iter(c)) for c in cnf_clauses(f) if len(c) == 1), key=lambda l: (l[1], not l[0]))
    assert unit_clauses(f) == expected


@PROPS
@given(formulas)
def test_unit_clauses_are_entailed(f):
    for pos, fact in unit_clauses(f):
        for s in states():
            if f.evaluate(s):
                assert (fact in s) == pos


# ---------------------------------------------------------------- geometry
GRID = gen_grid(4, 4)
coords = st.floats(min_value=-0.5, max_value=4.5, allow_nan=False)
points = st.tuples(coords, coords)


@PROPS
@given(points, points)
def test_place_intersections_ignore_direction(a, b):
    assert GRID.segment_place_intersections((a, b)) == GRID.segment_place_intersections((b, a))


@PROPS
@given(points, points, points, st.floats(min_value=0.05, max_value=1.5))
def test_segment_free_agrees_with_dense_sampling(a, b, c, r):
    length = math.dist(a, b)
    n = max(2, int(math.ceil(length / 1e-4)) + 1)
    t = np.linspace(0.0, 1.0, n)
    xs = a[0] + t * (b[0] - a[0])
    ys = a[1] + t * (b[1] - a[1])
    sampled = float(np.min(np.hypot(xs - c[0], ys - c[1])))
    # the sampled minimum overestimates the true one by at most half a step
    assume(abs(sampled - r) > 1e-3)
    assert segment_free((a, b), [Disc(c, r, "O")]) == (sampled > r)


@PROPS
@given(st.sets(st.integers(min_value=0, max_value=35), max_size=14), st.integers(0, 35), st.integers(0, 35))
def test_route_matches_dijkstra(avoid_ids, s, g):
    graph = gen_grid(6, 6)
    start, goal = f"P{s}", f"P{g}"
    avoid = {f"P{i}" for i in avoid_ids}
    res = route(graph, start, goal, avoid)
    expected = dijkstra_length(graph, start, goal, avoid)
    if expected is None:
        assert res.places is None
    else:
        assert route_length(graph, res.places) == pytest.approx(expected)
        assert not (set(res.places[1:-1]) & avoid)


# ---------------------------------------------------------------- STRIPS semantics
PRED_FACTS = [("F", str(i)) for i in range(5)]
fact_sets = st.frozensets(st.sampled_from(PRED_FACTS))


@st.composite
def ground_actions(draw):
    pre = draw(fact_sets)
    neg = draw(fact_sets) - pre
    add = draw(fact_sets)
    dele = draw(fact_sets) - add
    return GroundAction("a", (), pre, neg, add, dele)


@PROPS
@given(fact_sets, ground_actions())
def test_apply_is_delete_then_add(state, a):
    assume(applicable(state, a))
    out = apply(state, a)
    assert out == (state - a.delete) | a.add
    assert a.add <= out and not (a.delete & out)


def random_walk(problem, seed, length):
    rng = random.Random(seed)
    state = problem.initial_state()
    acts = ground_all(problem)
    plan = []
    for _ in range(length):
        ok = [a for a in acts if applicable(state, a)]
        if not ok:
            break
        a = rng.choice(ok)
        plan.append(a)
        state = apply(state, a)
    return plan


WALK_GRAPH = gen_grid(2, 3)
WALK_PROBLEM = build_problem(WALK_GRAPH, inspection_domain(), TRUE)


@PROPS
@given(st.integers(0, 10_000), st.integers(0, 6))
def test_prefixes_of_applicable_walks_are_valid(seed, length):
    plan = random_walk(WALK_PROBLEM, seed, length)
    for k in range(len(plan) + 1):
        assert plan_valid(WALK_PROBLEM, plan[:k])


@PROPS
@given(st.integers(0, 10_000), st.integers(0, 6))
def test_empty_verifier_changes_nothing(seed, length):
    plan = random_walk(WALK_PROBLEM, seed, length)
    ms = MotionSequence((), tuple(() for _ in plan))
    ext = extend_state_plan(WALK_PROBLEM, plan, ms, empty_verifier)
    assert ext.states == state_plan(WALK_PROBLEM, plan).states


# ---------------------------------------------------------------- pruning
PRUNE_GRAPH = gen_grid(3, 4)


@PROPS
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 10_000))
def test_pruning_is_idempotent(n, k, seed):
    goal = sample_goal(PRUNE_GRAPH, n, k, rng_seed=seed, include_safe=False)
    once, _ = prune_places(build_problem(PRUNE_GRAPH, inspection_domain(), goal), PRUNE_GRAPH)
    twice, res = prune_places(once, PRUNE_GRAPH)
    assert not res.removed_places
    assert set(twice.places()) == set(once.places())
