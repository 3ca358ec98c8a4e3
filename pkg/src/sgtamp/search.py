"""Grounding and forward state-space search for plan skeletons.

The problem is grounded by joining static preconditions against the static
facts (initial facts plus optimistic stream facts), then compiled to integer
bitmasks over the *relevant* fluent facts: those appearing in some action
precondition or in the goal. Search runs over these bitmask states.
"""
from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Set, Tuple

from .goals import FALSE, TRUE, FormulaTooLarge, GoalFormula, dnf_clauses, substitute
from .task_core import ActionSchema, Fact, GroundAction, ProblemInstance, apply, ground

INF = math.inf
HEURISTICS = ("hff", "goal_count", "blind")
ALGORITHMS = ("astar", "gbfs")


# ------------------------------------------------------------------ grounding
def _index_facts(facts):
    by_pred: Dict[str, List[Fact]] = {}
    by_arg: Dict[Tuple[str, int, str], List[Fact]] = {}
    for f in sorted(facts):
        by_pred.setdefault(f[0], []).append(f)
        for i, a in enumerate(f[1:]):
            by_arg.setdefault((f[0], i, a), []).append(f)
    return by_pred, by_arg


def ground_all(problem: ProblemInstance) -> List[GroundAction]:
    """All ground actions whose static preconditions hold, in a deterministic order."""
    static_preds = problem.static_predicates()
    static_facts = frozenset(f for f in problem.initial_state() if f[0] in static_preds)
    by_pred, by_arg = _index_facts(static_facts)
    by_kind: Dict[str, List[str]] = {}
    for s, k in problem.symbols.items():
        by_kind.setdefault(k, []).append(s)
    for k in by_kind:
        by_kind[k].sort()
    out: List[GroundAction] = []
    for schema in problem.actions:
        out.extend(_ground_schema(schema, static_preds, static_facts, by_pred, by_arg, by_kind))
    return out


def _ground_schema(schema: ActionSchema, static_preds, static_facts, by_pred, by_arg, by_kind):
    lits = [l for l in schema.pre if l.positive and l.predicate in static_preds]
    kinds = dict(schema.params)
    kind_sets = {k: frozenset(by_kind.get(k, ())) for k in set(kinds.values())}
    results = []

    def candidates(lit, binding):
        best = None
        for i, a in enumerate(lit.args):
            val = binding.get(a) if a.startswith("?") else a
            if val is not None:
                lst = by_arg.get((lit.predicate, i, val), [])
                if best is None or len(lst) < len(best):
                    best = lst
        return by_pred.get(lit.predicate, []) if best is None else best

    def rec(remaining, binding):
        if not remaining:
            free = [v for v in schema.variables if v not in binding]
            for combo in itertools.product(*(by_kind.get(kinds[v], []) for v in free)):
                b = dict(binding)
                b.update(zip(free, combo))
                ga = ground(schema, b)
                if ga.pre_neg & static_facts:
                    continue
                results.append(ga)
            return
        # most-constrained literal first
        j = max(range(len(remaining)),
                key=lambda k: sum(1 for a in remaining[k].args if not a.startswith("?") or a in binding))
        lit = remaining[j]
        rest = remaining[:j] + remaining[j + 1:]
        for f in candidates(lit, binding):
            b = dict(binding)
            ok = True
            for a, val in zip(lit.args, f[1:]):
                if a.startswith("?"):
                    if b.setdefault(a, val) != val:
                        ok = False
                        break
                elif a != val:
                    ok = False
                    break
            if ok and all(b[v] in kind_sets[kinds[v]] for v in lit.args if v.startswith("?")):
                rec(rest, b)

    rec(lits, {})
    return results


# ------------------------------------------------------------------ compilation
@dataclass
class CompiledTask:
    problem: ProblemInstance
    actions: List[GroundAction]
    facts: List[Fact]
    index: Dict[Fact, int]
    pre: List[int]
    neg: List[int]
    add: List[int]
    dele: List[int]
    pre_lists: List[Tuple[int, ...]]
    add_lists: List[Tuple[int, ...]]
    init: int
    static_facts: FrozenSet[Fact]
    goal: GoalFormula
    clauses: Optional[List[Tuple[int, int]]]
    undeletable: int
    keyed: Dict[int, List[int]] = field(default_factory=dict)
    unkeyed: List[int] = field(default_factory=list)
    pre_of: List[List[int]] = field(default_factory=list)
    statically_false: bool = False

    @property
    def n_facts(self) -> int:
        return len(self.facts)

    def decode(self, mask: int) -> FrozenSet[Fact]:
        out = []
        while mask:
            low = mask & -mask
            out.append(self.facts[low.bit_length() - 1])
            mask ^= low
        return frozenset(out)

    def is_goal(self, s: int) -> bool:
        if self.clauses is not None:
            return any((s & p) == p and not (s & n) for p, n in self.clauses)
        return self.goal.evaluate(self.decode(s) | self.static_facts)

    def applicable(self, s: int) -> List[int]:
        out = []
        pre, neg = self.pre, self.neg
        cands = list(self.unkeyed)
        m = s
        while m:
            low = m & -m
            cands.extend(self.keyed.get(low.bit_length() - 1, ()))
            m ^= low
        cands.sort()
        for a in cands:
            if (s & pre[a]) == pre[a] and not (s & neg[a]):
                out.append(a)
        return out

    def successor(self, s: int, a: int) -> int:
        return (s & ~self.dele[a]) | self.add[a]


def _bits(mask: int) -> List[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def compile_task(problem: ProblemInstance, actions: Optional[List[GroundAction]] = None,
                 dnf_cap: int = 512) -> CompiledTask:
    if actions is None:
        actions = ground_all(problem)
    static_preds = problem.static_predicates()
    static_facts = frozenset(f for f in problem.initial_state() if f[0] in static_preds)

    def static_value(f):
        return (f in static_facts) if f[0] in static_preds else None

    goal = substitute(problem.goal, static_value)
    relevant: Set[Fact] = set()
    for a in actions:
        relevant.update(f for f in a.pre_pos if f[0] not in static_preds)
        relevant.update(f for f in a.pre_neg if f[0] not in static_preds)
    relevant.update(goal.facts())
    facts = sorted(relevant)
    index = {f: i for i, f in enumerate(facts)}

    def mask(fs):
        m = 0
        for f in fs:
            i = index.get(f)
            if i is not None:
                m |= 1 << i
        return m

    kept, pre, neg, add, dele, pre_lists, add_lists = [], [], [], [], [], [], []
    for a in actions:
        am, dm = mask(a.add), mask(a.delete)
        dm &= ~am
        if am == 0 and dm == 0:
            continue
        kept.append(a)
        pm = mask(f for f in a.pre_pos if f[0] not in static_preds)
        pre.append(pm)
        neg.append(mask(f for f in a.pre_neg if f[0] not in static_preds))
        add.append(am)
        dele.append(dm)
        pre_lists.append(tuple(_bits(pm)))
        add_lists.append(tuple(_bits(am)))
    deletable = 0
    for d in dele:
        deletable |= d
    undeletable = ((1 << len(facts)) - 1) & ~deletable
    init = mask(problem.initial_state())

    clauses = None
    statically_false = goal == FALSE
    if goal != TRUE and not statically_false:
        try:
            cl = dnf_clauses(goal, dnf_cap)
            clauses = [(mask(f for p, f in c if p), mask(f for p, f in c if not p)) for c in cl]
            statically_false = not clauses
        except FormulaTooLarge:
            clauses = None
    elif goal == TRUE:
        clauses = [(0, 0)]

    # successor index: key every action on its rarest positive precondition
    count: Dict[int, int] = {}
    for pl in pre_lists:
        for i in pl:
            count[i] = count.get(i, 0) + 1
    keyed: Dict[int, List[int]] = {}
    unkeyed: List[int] = []
    pre_of: List[List[int]] = [[] for _ in facts]
    for ai, pl in enumerate(pre_lists):
        if pl:
            k = min(pl, key=lambda i: (count[i], i))
            keyed.setdefault(k, []).append(ai)
        else:
            unkeyed.append(ai)
        for i in pl:
            pre_of[i].append(ai)
    return CompiledTask(problem, kept, facts, index, pre, neg, add, dele, pre_lists, add_lists, init,
                        static_facts, goal, clauses, undeletable, keyed, unkeyed, pre_of, statically_false)


# ------------------------------------------------------------------ heuristics
class Heuristic:
    def __init__(self, task: CompiledTask):
        self.task = task

    def __call__(self, s: int) -> float:
        raise NotImplementedError


class Blind(Heuristic):
    def __call__(self, s):
        return 0 if self.task.is_goal(s) else 1


class GoalCount(Heuristic):
    """Unsatisfied literals of the closest DNF clause (infinite when a violated
    negative literal can never be deleted)."""

    def __call__(self, s):
        t = self.task
        if t.clauses is None:
            return 0
        best = INF
        for p, n in t.clauses:
            if s & n & t.undeletable:
                continue
            h = bin(p & ~s).count("1") + bin(n & s).count("1")
            if h < best:
                best = h
        return best


class HFF(Heuristic):
    """FF relaxed-plan heuristic: relaxed reachability ignoring deletes and
    negative preconditions, relaxed plan extracted per DNF clause, minimum taken."""

    def __init__(self, task: CompiledTask):
        super().__init__(task)
        goal_bits = 0
        if task.clauses:
            for p, _ in task.clauses:
                goal_bits |= p
        self.goal_bits = goal_bits
        self.n_pre = [len(pl) for pl in task.pre_lists]
        self.free_actions = [a for a, pl in enumerate(task.pre_lists) if not pl]

    def __call__(self, s):
        t = self.task
        if t.clauses is None:
            return 0
        clauses = [(p, n) for p, n in t.clauses if not (s & n & t.undeletable)]
        if not clauses:
            return INF
        need = 0
        for p, _ in clauses:
            need |= p
        supporter: Dict[int, int] = {}
        reached = s
        if (reached & need) != need:
            unsat = list(self.n_pre)
            add_lists, pre_of = t.add_lists, t.pre_of
            frontier = []
            for a in self.free_actions:
                for g in add_lists[a]:
                    if not (reached >> g) & 1:
                        reached |= 1 << g
                        supporter[g] = a
                        frontier.append(g)
            frontier.extend(_bits(s))
            while frontier and (reached & need) != need:
                nxt = []
                for f in frontier:
                    for a in pre_of[f]:
                        unsat[a] -= 1
                        if unsat[a] == 0:
                            for g in add_lists[a]:
                                if not (reached >> g) & 1:
                                    reached |= 1 << g
                                    supporter[g] = a
                                    nxt.append(g)
                frontier = nxt
        best = INF
        for p, n in clauses:
            if (reached & p) != p:
                continue
            plan: Set[int] = set()
            stack = _bits(p & ~s)
            while stack:
                g = stack.pop()
                a = supporter[g]
                if a in plan:
                    continue
                plan.add(a)
                for q in t.pre_lists[a]:
                    if not (s >> q) & 1:
                        stack.append(q)
            h = len(plan) + bin(n & s).count("1")
            if h < best:
                best = h
        return best


def make_heuristic(name: str, task: CompiledTask) -> Heuristic:
    if name == "hff":
        return HFF(task)
    if name == "goal_count":
        return GoalCount(task)
    if name == "blind":
        return Blind(task)
    raise ValueError(f"unknown heuristic {name!r}")


# ------------------------------------------------------------------ skeletons
@dataclass(frozen=True)
class PlanSkeleton:
    """Ground action sequence whose continuous parameters are still optimistic."""
    actions: Tuple[GroundAction, ...]
    cost: int
    index: int = 0

    def states(self, problem: ProblemInstance) -> List[FrozenSet[Fact]]:
        out = [problem.initial_state()]
        for a in self.actions:
            out.append(apply(out[-1], a))
        return out

    def __len__(self):
        return len(self.actions)


class SkeletonSearch:
    """Lazy best-first enumeration of goal-reaching action sequences.

    Search continues past goal nodes so that later calls yield further,
    distinct skeletons (one per distinct goal state). A goal state is expanded
    on the call after it was yielded, so a skeleton may extend a shorter one
    (e.g. move to an inspection pose, then inspect). With ``algorithm="astar"`` and an admissible heuristic the
    yielded costs are nondecreasing.
    """

    def __init__(self, task: CompiledTask, heuristic: str = "hff", algorithm: str = "astar",
                 weight: float = 1.0, max_expansions: Optional[int] = None):
        if algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algorithm!r}")
        self.task = task
        self.h = make_heuristic(heuristic, task)
        self.algorithm = algorithm
        self.weight = weight
        self.max_expansions = max_expansions
        self.expanded = 0
        self.generated = 0
        self.yielded = 0
        self.exhausted = False
        self.elapsed = 0.0
        self._g: Dict[int, int] = {}
        self._parent: Dict[int, Tuple[Optional[int], int]] = {}
        self._closed: Set[int] = set()
        self._open: List = []
        self._counter = itertools.count()
        self._started = False
        self.dead_start = False
        self._pending: Optional[Tuple[int, int]] = None

    def _push(self, s, g, h):
        f = h if self.algorithm == "gbfs" else g + self.weight * h
        heapq.heappush(self._open, (f, h, next(self._counter), s, g))

    def _start(self):
        self._started = True
        t = self.task
        if t.statically_false:
            self.exhausted = True
            self.dead_start = True
            return
        h0 = self.h(t.init)
        if h0 == INF:
            self.exhausted = True
            self.dead_start = True
            return
        self._g[t.init] = 0
        self._parent[t.init] = (None, -1)
        self._push(t.init, 0, h0)

    def _path(self, s) -> List[int]:
        out = []
        while True:
            prev, a = self._parent[s]
            if prev is None:
                break
            out.append(a)
            s = prev
        return out[::-1]

    def next(self, deadline: Optional[float] = None) -> Optional[PlanSkeleton]:
        """Next skeleton, or None when the space is exhausted or the deadline passes."""
        t0 = time.perf_counter()
        try:
            return self._next(deadline)
        finally:
            self.elapsed += time.perf_counter() - t0

    def _next(self, deadline):
        if not self._started:
            self._start()
        t = self.task
        if self._pending is not None:
            s, g = self._pending
            self._pending = None
            self._expand(s, g)
        while self._open:
            if deadline is not None and (self.expanded & 63) == 0 and time.perf_counter() > deadline:
                return None
            if self.max_expansions is not None and self.expanded >= self.max_expansions:
                self.exhausted = True
                return None
            f, h, _, s, g = heapq.heappop(self._open)
            if s in self._closed or g > self._g.get(s, INF):
                continue
            self._closed.add(s)
            if t.is_goal(s):
                path = self._path(s)
                self.yielded += 1
                self._pending = (s, g)
                return PlanSkeleton(tuple(t.actions[a] for a in path), len(path), self.yielded - 1)
            self._expand(s, g)
        self.exhausted = True
        return None

    def _expand(self, s, g):
        t = self.task
        self.expanded += 1
        for a in t.applicable(s):
            s2 = t.successor(s, a)
            g2 = g + 1
            if g2 >= self._g.get(s2, INF):
                continue
            h2 = self.h(s2)
            if h2 == INF:
                continue
            self.generated += 1
            self._g[s2] = g2
            self._parent[s2] = (s, a)
            self._closed.discard(s2)
            self._push(s2, g2, h2)

    def __iter__(self) -> Iterator[PlanSkeleton]:
        while True:
            sk = self.next()
            if sk is None:
                return
            yield sk


def skeletons(problem: ProblemInstance, max_k: int = 10, budget: Optional[float] = None,
              heuristic: str = "hff", algorithm: str = "astar") -> Iterator[PlanSkeleton]:
    """Up to ``max_k`` skeletons within ``budget`` seconds (lazy)."""
    deadline = None if budget is None else time.perf_counter() + budget
    search = SkeletonSearch(compile_task(problem), heuristic, algorithm)
    for _ in range(max_k):
        sk = search.next(deadline)
        if sk is None:
            return
        yield sk
