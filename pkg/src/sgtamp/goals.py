"""Goal formulas in negation-normal form, CNF/DNF conversion and the (N, K) sampler."""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .task_core import Fact, fact_str, parse_fact

DEFAULT_CAP = 4096


class GoalError(ValueError):
    pass


class FormulaTooLarge(GoalError):
    """Normal-form conversion would exceed the clause cap; callers should skip
    any optimisation that needs the normal form."""


# A literal is (positive, fact).
Literal = Tuple[bool, Fact]


class GoalFormula:
    def evaluate(self, state) -> bool:
        raise NotImplementedError

    def literals(self) -> Iterable[Literal]:
        raise NotImplementedError

    def facts(self) -> FrozenSet[Fact]:
        return frozenset(f for _, f in self.literals())

    def symbols(self) -> FrozenSet[str]:
        return frozenset(a for f in self.facts() for a in f[1:])

    def __and__(self, other):
        return And((self, other))

    def __or__(self, other):
        return Or((self, other))


@dataclass(frozen=True)
class Atom(GoalFormula):
    fact: Fact

    def evaluate(self, state) -> bool:
        return self.fact in state

    def literals(self):
        yield (True, self.fact)

    def __invert__(self):
        return Not(self)

    def __str__(self):
        return fact_str(self.fact)


@dataclass(frozen=True)
class Not(GoalFormula):
    atom: Atom

    def __post_init__(self):
        if not isinstance(self.atom, Atom):
            raise GoalError("negation may only wrap a fact (negation-normal form)")

    def evaluate(self, state) -> bool:
        return self.atom.fact not in state

    def literals(self):
        yield (False, self.atom.fact)

    def __str__(self):
        return f"not {self.atom}"


@dataclass(frozen=True)
class And(GoalFormula):
    children: Tuple[GoalFormula, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))

    def evaluate(self, state) -> bool:
        return all(c.evaluate(state) for c in self.children)

    def literals(self):
        for c in self.children:
            yield from c.literals()

    def __str__(self):
        if not self.children:
            return "true"
        return "(" + " and ".join(map(str, self.children)) + ")"


@dataclass(frozen=True)
class Or(GoalFormula):
    children: Tuple[GoalFormula, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))

    def evaluate(self, state) -> bool:
        return any(c.evaluate(state) for c in self.children)

    def literals(self):
        for c in self.children:
            yield from c.literals()

    def __str__(self):
        if not self.children:
            return "false"
        return "(" + " or ".join(map(str, self.children)) + ")"


TRUE = And(())
FALSE = Or(())


def atom(name: str, *args: str) -> Atom:
    return Atom((name, *args))


def lit(positive: bool, f: Fact) -> GoalFormula:
    return Atom(f) if positive else Not(Atom(f))


# ------------------------------------------------------------------ normal forms
def _lit_key(l: Literal):
    return (l[1], not l[0])


def _simplify_clauses(clauses: Iterable[FrozenSet[Literal]]) -> List[FrozenSet[Literal]]:
    """Drop complementary-literal clauses and subsumed clauses."""
    out = []
    for c in clauses:
        if any((not p, f) in c for p, f in c):
            continue
        out.append(c)
    out = sorted(set(out), key=lambda c: (len(c), sorted(map(_lit_key, c))))
    kept: List[FrozenSet[Literal]] = []
    for c in out:
        if not any(k <= c for k in kept):
            kept.append(c)
    return kept


def _normal(formula: GoalFormula, outer, cap: int) -> List[FrozenSet[Literal]]:
    """Clause sets for CNF (outer=And) or DNF (outer=Or)."""
    if isinstance(formula, Atom):
        return [frozenset([(True, formula.fact)])]
    if isinstance(formula, Not):
        return [frozenset([(False, formula.atom.fact)])]
    same = isinstance(formula, outer)
    parts = [_normal(c, outer, cap) for c in formula.children]
    if same:
        res = [c for p in parts for c in p]
        if len(res) > cap:
            raise FormulaTooLarge(f"normal form exceeds {cap} clauses")
        return _simplify_clauses(res)
    # distribute
    res: List[FrozenSet[Literal]] = [frozenset()]
    for p in parts:
        if len(res) * len(p) > cap * 4:
            raise FormulaTooLarge(f"normal form exceeds {cap} clauses")
        res = _simplify_clauses(a | b for a in res for b in p)
        if len(res) > cap:
            raise FormulaTooLarge(f"normal form exceeds {cap} clauses")
    return res


def cnf_clauses(goal: GoalFormula, cap: int = DEFAULT_CAP) -> List[FrozenSet[Literal]]:
    return _normal(goal, And, cap)


def dnf_clauses(goal: GoalFormula, cap: int = DEFAULT_CAP) -> List[FrozenSet[Literal]]:
    return _normal(goal, Or, cap)


def _rebuild(clauses, inner, outer) -> GoalFormula:
    built = []
    for c in clauses:
        ls = [lit(p, f) for p, f in sorted(c, key=_lit_key)]
        built.append(ls[0] if len(ls) == 1 else inner(tuple(ls)))
    if len(built) == 1:
        return built[0]
    return outer(tuple(built))


def to_cnf(goal: GoalFormula, cap: int = DEFAULT_CAP) -> GoalFormula:
    """Logically equivalent conjunction of disjunctive clauses.

    Raises FormulaTooLarge when more than ``cap`` clauses would be produced.
    """
    return _rebuild(cnf_clauses(goal, cap), Or, And)


def to_dnf(goal: GoalFormula, cap: int = DEFAULT_CAP) -> GoalFormula:
    return _rebuild(dnf_clauses(goal, cap), And, Or)


def _small_clauses(formula: GoalFormula) -> Set[FrozenSet[Literal]]:
    """The CNF clauses of size <= 1, computed without distributing.

    A clause of a distributed disjunction has size <= 1 only if every factor
    does, and subsumption only removes units in favour of the empty clause,
    so this matches the small clauses of :func:`cnf_clauses` exactly.
    """
    if isinstance(formula, Atom):
        return {frozenset([(True, formula.fact)])}
    if isinstance(formula, Not):
        return {frozenset([(False, formula.atom.fact)])}
    parts = [_small_clauses(c) for c in formula.children]
    empty = frozenset()
    if isinstance(formula, And):
        out = set().union(*parts)
    elif all(empty in p for p in parts):
        out = {empty}
    else:
        lits = set().union(*parts) - {empty}
        out = {c for c in lits if all(c in p or empty in p for p in parts)}
    return {empty} if empty in out else out


def unit_clauses(goal: GoalFormula, cap: int = DEFAULT_CAP) -> List[Literal]:
    """Literals that appear as single-literal clauses of the CNF.

    ``cap`` is accepted for signature compatibility; no expansion happens.
    """
    return sorted((next(iter(c)) for c in _small_clauses(goal) if c), key=_lit_key)


def substitute(goal: GoalFormula, value: Callable[[Fact], Optional[bool]]) -> GoalFormula:
    """Replace facts for which ``value`` returns a bool by that constant and simplify."""
    if isinstance(goal, Atom):
        v = value(goal.fact)
        return goal if v is None else (TRUE if v else FALSE)
    if isinstance(goal, Not):
        v = value(goal.atom.fact)
        return goal if v is None else (FALSE if v else TRUE)
    kids = [substitute(c, value) for c in goal.children]
    if isinstance(goal, And):
        if any(k == FALSE for k in kids):
            return FALSE
        kids = [k for k in kids if k != TRUE]
        return kids[0] if len(kids) == 1 else And(tuple(kids))
    if any(k == TRUE for k in kids):
        return TRUE
    kids = [k for k in kids if k != FALSE]
    return kids[0] if len(kids) == 1 else Or(tuple(kids))


# ------------------------------------------------------------------ json
def goal_from_dict(d) -> GoalFormula:
    """Parse the JSON goal form. Besides ``{"fact": {...}}`` nodes, a string
    such as ``"VisitedPlace(P1)"`` is read as a fact and ``true``/``false``
    as the constants."""
    if isinstance(d, bool):
        return TRUE if d else FALSE
    if isinstance(d, str):
        f = parse_fact(d)
        if not f[0].isidentifier():
            raise GoalError(f"bad fact {d!r}")
        return Atom(f)
    if not isinstance(d, dict) or len(d) != 1:
        raise GoalError(f"goal node must be an object with one key, got {d!r}")
    (key, val), = d.items()
    if key in ("forall", "exists"):
        raise GoalError(f"quantified goals ({key!r}) are not supported")
    if key == "fact":
        if not isinstance(val, dict) or not isinstance(val.get("name"), str):
            raise GoalError(f"bad fact node {val!r}")
        return Atom((val["name"], *[str(a) for a in val.get("args", [])]))
    if key in ("and", "or"):
        if not isinstance(val, list):
            raise GoalError(f"{key!r} expects a list")
        kids = tuple(goal_from_dict(v) for v in val)
        return And(kids) if key == "and" else Or(kids)
    if key == "not":
        return _negate(goal_from_dict(val))
    raise GoalError(f"unknown goal key {key!r}")


def _negate(g: GoalFormula) -> GoalFormula:
    if isinstance(g, Atom):
        return Not(g)
    if isinstance(g, Not):
        return g.atom
    if isinstance(g, And):
        return Or(tuple(_negate(c) for c in g.children))
    return And(tuple(_negate(c) for c in g.children))


def goal_to_dict(g: GoalFormula) -> dict:
    if isinstance(g, Atom):
        return {"fact": {"name": g.fact[0], "args": list(g.fact[1:])}}
    if isinstance(g, Not):
        return {"not": goal_to_dict(g.atom)}
    key = "and" if isinstance(g, And) else "or"
    return {key: [goal_to_dict(c) for c in g.children]}


# ------------------------------------------------------------------ sampler
def sample_goal(
    graph,
    n: int,
    k: int,
    rng_seed: int = 0,
    *,
    start_place: Optional[str] = None,
    negate_prob: float = 0.5,
    include_safe: bool = True,
    places: Optional[Sequence[str]] = None,
    objects: Optional[Sequence[str]] = None,
) -> GoalFormula:
    """DNF with ``n`` clauses of ``k`` literals over VisitedPlace / not VisitedPlace / Safe.

    Each clause draws ``k`` distinct symbols, so no clause holds a literal and
    its negation. The robot's start place is never sampled.
    """
    if n < 1 or k < 1:
        raise GoalError("n and k must be >= 1")
    rng = random.Random(rng_seed)
    place_ids = [p for p in (places if places is not None else graph.places) if p != start_place]
    object_ids = list(objects if objects is not None else graph.objects) if include_safe else []
    symbols = [("place", p) for p in place_ids] + [("object", o) for o in object_ids]
    if len(symbols) < k:
        raise GoalError(f"only {len(symbols)} candidate symbols for clauses of {k} literals")
    clauses = []
    for _ in range(n):
        picked = rng.sample(symbols, k)
        lits = []
        for kind, s in picked:
            if kind == "object":
                lits.append(Atom(("Safe", s)))
            elif rng.random() < negate_prob:
                lits.append(Not(Atom(("VisitedPlace", s))))
            else:
                lits.append(Atom(("VisitedPlace", s)))
        clauses.append(lits[0] if k == 1 else And(tuple(lits)))
    return clauses[0] if n == 1 else Or(tuple(clauses))


def goal_shape(goal: GoalFormula) -> Tuple[int, int]:
    """(number of top-level clauses, literal count) for reporting."""
    n = len(goal.children) if isinstance(goal, Or) else 1
    return n, sum(1 for _ in goal.literals())
