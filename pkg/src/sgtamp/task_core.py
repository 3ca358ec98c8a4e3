"""Ground symbolic planning substrate: facts, action schemas, problem instances,
state transition and plan validation.

Facts are plain tuples ``(predicate, arg0, arg1, ...)`` so they hash cheaply and
sort deterministically.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

Fact = Tuple[str, ...]

SYMBOL_KINDS = ("place", "object", "config", "trajectory", "robot")


class BindingError(ValueError):
    pass


class PlanValidationError(ValueError):
    """The plan refers to something the problem does not declare (distinct from an invalid plan)."""


def fact_str(f: Fact) -> str:
    return f"{f[0]}({', '.join(f[1:])})"


def parse_fact(text: str) -> Fact:
    """Inverse of :func:`fact_str`: ``"VisitedPlace(P1)"`` -> ``("VisitedPlace", "P1")``."""
    text = text.strip()
    if "(" not in text:
        return (text,)
    name, rest = text.split("(", 1)
    rest = rest.rstrip().rstrip(")")
    args = [a.strip() for a in rest.split(",") if a.strip()]
    return (name.strip(), *args)


@dataclass(frozen=True)
class Literal:
    """Schema-level literal; ``args`` are parameter variables (``?x``) or constants."""
    predicate: str
    args: Tuple[str, ...] = ()
    positive: bool = True

    def ground(self, binding: Mapping[str, str]) -> Fact:
        return (self.predicate, *[binding.get(a, a) for a in self.args])

    def __str__(self):
        s = f"{self.predicate}({', '.join(self.args)})"
        return s if self.positive else f"not {s}"


def L(predicate: str, *args: str) -> Literal:
    return Literal(predicate, tuple(args))


def NL(predicate: str, *args: str) -> Literal:
    return Literal(predicate, tuple(args), False)


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: Tuple[Tuple[str, str], ...]          # (variable, kind)
    pre: Tuple[Literal, ...] = ()
    add: Tuple[Literal, ...] = ()
    delete: Tuple[Literal, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(tuple(p) for p in self.params))
        object.__setattr__(self, "pre", tuple(self.pre))
        object.__setattr__(self, "add", tuple(self.add))
        object.__setattr__(self, "delete", tuple(self.delete))
        variables = {v for v, _ in self.params}
        if len(variables) != len(self.params):
            raise ValueError(f"{self.name}: duplicate parameter")
        for _, kind in self.params:
            if kind not in SYMBOL_KINDS:
                raise ValueError(f"{self.name}: unknown parameter kind {kind!r}")
        for lit in (*self.pre, *self.add, *self.delete):
            for a in lit.args:
                if a.startswith("?") and a not in variables:
                    raise ValueError(f"{self.name}: literal {lit} uses undeclared variable {a}")
        for lit in (*self.add, *self.delete):
            if not lit.positive:
                raise ValueError(f"{self.name}: effects are written as positive literals")
        adds = {(l.predicate, l.args) for l in self.add}
        if any((l.predicate, l.args) in adds for l in self.delete):
            raise ValueError(f"{self.name}: add and delete effects overlap")

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(v for v, _ in self.params)


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: Tuple[str, ...]
    pre_pos: FrozenSet[Fact] = frozenset()
    pre_neg: FrozenSet[Fact] = frozenset()
    add: FrozenSet[Fact] = frozenset()
    delete: FrozenSet[Fact] = frozenset()

    def __str__(self):
        return f"{self.name}({', '.join(self.args)})"

    @property
    def key(self) -> Tuple[str, ...]:
        return (self.name, *self.args)


def ground(schema: ActionSchema, bindings: Mapping[str, str], symbols: Optional[Mapping[str, str]] = None) -> GroundAction:
    """Instantiate ``schema``. ``bindings`` maps each parameter variable to a symbol;
    when ``symbols`` (symbol -> kind) is given, kinds are checked."""
    missing = [v for v in schema.variables if v not in bindings]
    if missing:
        raise BindingError(f"{schema.name}: unbound parameters {missing}")
    if symbols is not None:
        for var, kind in schema.params:
            sym = bindings[var]
            if sym not in symbols:
                raise BindingError(f"{schema.name}: unknown symbol {sym!r}")
            if symbols[sym] != kind:
                raise BindingError(f"{schema.name}: {var} expects a {kind}, got {sym!r} ({symbols[sym]})")
    pos = frozenset(l.ground(bindings) for l in schema.pre if l.positive)
    neg = frozenset(l.ground(bindings) for l in schema.pre if not l.positive)
    return GroundAction(
        schema.name,
        tuple(bindings[v] for v in schema.variables),
        pos,
        neg,
        frozenset(l.ground(bindings) for l in schema.add),
        frozenset(l.ground(bindings) for l in schema.delete),
    )


def applicable(state: FrozenSet[Fact], action: GroundAction) -> bool:
    return action.pre_pos <= state and not (action.pre_neg & state)


def apply(state: FrozenSet[Fact], action: GroundAction) -> FrozenSet[Fact]:
    return (frozenset(state) - action.delete) | action.add


@dataclass(frozen=True)
class Stream:
    """Declared sampler. ``certified`` holds fact templates over ``inputs`` and ``outputs``."""
    name: str
    inputs: Tuple[Tuple[str, str], ...]
    outputs: Tuple[Tuple[str, str], ...]
    certified: Tuple[Literal, ...]

    def __post_init__(self):
        names = {v for v, _ in self.inputs} | {v for v, _ in self.outputs}
        for lit in self.certified:
            for a in lit.args:
                if a.startswith("?") and a not in names:
                    raise ValueError(f"stream {self.name}: certified fact {lit} uses {a} outside inputs/outputs")


@dataclass(frozen=True)
class ProblemInstance:
    """The tuple (predicates, actions, streams, symbols, init, goal).

    ``certified`` holds optimistic stream facts: static facts assumed true
    during skeleton search and established by the streams during binding.
    They are part of every state but are not initial facts of the scene.
    """
    predicates: Mapping[str, int]
    actions: Tuple[ActionSchema, ...]
    streams: Tuple[Stream, ...]
    symbols: Mapping[str, str]
    init: FrozenSet[Fact]
    goal: "object"
    certified: FrozenSet[Fact] = frozenset()
    domain: str = "inspection"
    encoding: str = "sparse"
    meta: Mapping[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for f in (*self.init, *self.certified, *self.goal.facts()):
            self.check_fact(f)

    def check_fact(self, f: Fact) -> None:
        name, args = f[0], f[1:]
        if name not in self.predicates:
            raise PlanValidationError(f"undeclared predicate in {fact_str(f)}")
        if self.predicates[name] != len(args):
            raise PlanValidationError(f"arity mismatch in {fact_str(f)}")
        for a in args:
            if a not in self.symbols:
                raise PlanValidationError(f"undeclared symbol {a!r} in {fact_str(f)}")

    def initial_state(self) -> FrozenSet[Fact]:
        return self.init | self.certified

    def schema(self, name: str) -> ActionSchema:
        for a in self.actions:
            if a.name == name:
                return a
        raise PlanValidationError(f"unknown action {name!r}")

    def ground_step(self, name: str, args: Sequence[str]) -> GroundAction:
        schema = self.schema(name)
        if len(args) != len(schema.params):
            raise PlanValidationError(f"{name} takes {len(schema.params)} arguments, got {len(args)}")
        for a in args:
            if a not in self.symbols:
                raise PlanValidationError(f"undeclared symbol {a!r} in {name}")
        try:
            return ground(schema, dict(zip(schema.variables, args)), self.symbols)
        except BindingError as e:
            raise PlanValidationError(str(e)) from None

    def places(self) -> List[str]:
        return [s for s, k in self.symbols.items() if k == "place"]

    def objects(self) -> List[str]:
        return [s for s, k in self.symbols.items() if k == "object"]

    def static_predicates(self) -> FrozenSet[str]:
        changed = {l.predicate for a in self.actions for l in (*a.add, *a.delete)}
        return frozenset(p for p in self.predicates if p not in changed)


def _step_key(step) -> Tuple[str, Tuple[str, ...]]:
    if isinstance(step, GroundAction):
        return step.name, step.args
    if isinstance(step, (tuple, list)):
        return step[0], tuple(step[1:])
    name = getattr(step, "name")
    return name, tuple(getattr(step, "args"))


@dataclass(frozen=True)
class StatePlan:
    states: Tuple[FrozenSet[Fact], ...]
    actions: Tuple[GroundAction, ...]


def state_plan(problem: ProblemInstance, plan: Sequence) -> StatePlan:
    """States I0..IN obtained by applying the plan (no applicability check)."""
    actions = tuple(problem.ground_step(*_step_key(s)) for s in plan)
    states = [problem.initial_state()]
    for a in actions:
        states.append(apply(states[-1], a))
    return StatePlan(tuple(states), actions)


def plan_valid(problem: ProblemInstance, plan: Sequence, goal=None) -> bool:
    """True iff every step is applicable in its predecessor state and the final
    state satisfies the goal. Steps may be GroundActions or ``(name, *args)``
    tuples; each is re-grounded from the problem's own schemas."""
    goal = problem.goal if goal is None else goal
    state = problem.initial_state()
    for step in plan:
        a = problem.ground_step(*_step_key(step))
        if not applicable(state, a):
            return False
        state = apply(state, a)
    return goal.evaluate(state)


def first_violation(problem: ProblemInstance, plan: Sequence) -> Optional[str]:
    """Human-readable description of the first validity violation, or None."""
    state = problem.initial_state()
    for i, step in enumerate(plan):
        a = problem.ground_step(*_step_key(step))
        miss = sorted(a.pre_pos - state)
        if miss:
            return f"step {i} {a}: precondition {fact_str(miss[0])} does not hold"
        bad = sorted(a.pre_neg & state)
        if bad:
            return f"step {i} {a}: negated precondition {fact_str(bad[0])} holds"
        state = apply(state, a)
    if not problem.goal.evaluate(state):
        return "final state does not satisfy the goal"
    return None
