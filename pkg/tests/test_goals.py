from __future__ import annotations

import itertools

import pytest

from sgtamp.generators import gen_grid
from sgtamp.goals import (
    FALSE,
    TRUE,
    And,
    Atom,
    FormulaTooLarge,
    GoalError,
    Not,
    Or,
    atom,
    cnf_clauses,
    goal_from_dict,
    goal_shape,
    goal_to_dict,
    sample_goal,
    substitute,
    to_cnf,
    to_dnf,
    unit_clauses,
)

a, b, c = atom("VisitedPlace", "P1"), atom("VisitedPlace", "P2"), atom("VisitedPlace", "P3")


def truth_table_equal(f, g):
    facts = sorted(f.facts() | g.facts())
    for bits in itertools.product((False, True), repeat=len(facts)):
        state = {x for x, v in zip(facts, bits) if v}
        if f.evaluate(state) != g.evaluate(state):
            return False
    return True


def test_constants():
    assert TRUE.evaluate(set())
    assert not FALSE.evaluate({("VisitedPlace", "P1")})


def test_negated_literal_is_its_own_cnf():
    f = Not(a)
    assert to_cnf(f) == f


def test_distribution_factors_common_literal():
    f = Or((And((a, b)), And((a, c))))
    assert to_cnf(f) == And((a, Or((b, c))))


def test_dnf_of_cnf_round_trip():
    f = And((Or((a, b)), Or((Not(a), c))))
    assert truth_table_equal(f, to_dnf(f))
    assert truth_table_equal(f, to_cnf(to_dnf(f)))


def test_tautology_and_contradiction():
    assert to_cnf(Or((a, Not(a)))) == TRUE
    assert to_dnf(And((a, Not(a)))) == FALSE


def test_cap_raises():
    clauses = [And((atom("VisitedPlace", f"P{2 * i}"), atom("VisitedPlace", f"P{2 * i + 1}"))) for i in range(12)]
    with pytest.raises(FormulaTooLarge):
        cnf_clauses(Or(tuple(clauses)), cap=64)


def test_unit_clauses_of_large_dnf_without_expansion():
    # 30 clauses that all share not V(P99): the CNF would have 2^30 clauses
    shared = Not(atom("VisitedPlace", "P99"))
    clauses = [And((shared, atom("VisitedPlace", f"P{i}"), atom("VisitedPlace", f"P{i + 40}"))) for i in range(30)]
    units = unit_clauses(Or(tuple(clauses)))
    assert units == [(False, ("VisitedPlace", "P99"))]


def test_unit_clauses_fig_goal():
    g = Or((And((atom("VisitedPlace", "P6"), Not(atom("VisitedPlace", "P1")))), atom("VisitedPlace", "P5")))
    # (V6 or V5) and (not V1 or V5): no unit clause
    assert unit_clauses(g) == []
    g2 = And((Not(atom("VisitedPlace", "P1")), Or((atom("VisitedPlace", "P6"), atom("VisitedPlace", "P5")))))
    assert unit_clauses(g2) == [(False, ("VisitedPlace", "P1"))]


def test_substitute_folds_constants():
    g = Or((And((a, Not(b))), c))
    assert substitute(g, lambda f: False if f == ("VisitedPlace", "P3") else None) == And((a, Not(b)))
    assert substitute(g, lambda f: True if f == ("VisitedPlace", "P3") else None) == TRUE


def test_dict_round_trip():
    g = Or((And((a, Not(b))), atom("Safe", "O1")))
    assert goal_from_dict(goal_to_dict(g)) == g


def test_dict_accepts_string_facts_and_constants():
    assert goal_from_dict({"and": ["VisitedPlace(P1)", {"not": "VisitedPlace(P2)"}]}) == And((a, Not(b)))
    assert goal_from_dict(True) == TRUE


def test_dict_rejects_garbage():
    with pytest.raises(GoalError):
        goal_from_dict({"xor": []})


# ---------------------------------------------------------------- sampler
def test_sample_2_3_is_or_of_two_conjunctions():
    g = sample_goal(gen_grid(10, 10), 2, 3, rng_seed=1)
    assert isinstance(g, Or) and len(g.children) == 2
    assert all(isinstance(ch, And) and len(ch.children) == 3 for ch in g.children)
    assert goal_shape(g) == (2, 6)


def test_sample_1_1_is_single_literal():
    g = sample_goal(gen_grid(3, 3), 1, 1, rng_seed=4)
    assert isinstance(g, (Atom, Not))


def test_sample_deterministic():
    grid = gen_grid(5, 5)
    assert sample_goal(grid, 3, 3, rng_seed=7) == sample_goal(grid, 3, 3, rng_seed=7)


def test_sample_never_start_place_and_no_contradiction():
    grid = gen_grid(4, 4)
    for s in range(30):
        g = sample_goal(grid, 3, 4, rng_seed=s, start_place="P0")
        assert "P0" not in g.symbols()
        for clause in g.children:
            facts = [f for _, f in clause.literals()]
            assert len(facts) == len(set(facts))


def test_sample_insufficient_candidates():
    with pytest.raises(GoalError):
        sample_goal(gen_grid(1, 2), 1, 3, start_place="P0", include_safe=False)
