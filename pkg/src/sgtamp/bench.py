"""Benchmark drivers: dense-vs-sparse scaling, goal-complexity sweep and the
obstruction protocol. Every trial becomes one CSV row."""
from __future__ import annotations

import csv
import io
import json
import os
import random
import statistics
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .execution import check_execution_consistency, motion_sequence, simulate
from .generators import gen_alley, gen_grid, gen_random
from .goals import GoalFormula, atom, goal_shape, sample_goal
from .incremental import IncrementalConfig
from .pipeline import plan_task, validation_instance
from .planner import SolveConfig, SolveReport
from .scene_graph import SceneGraph, id_key
from .task_core import plan_valid

CSV_COLUMNS = (
    "env", "kind", "places", "objects", "encoding", "incremental", "goal_n", "goal_k", "unique_symbols",
    "seed", "outcome", "time_total_ms", "time_prune_ms", "time_search_ms", "time_bind_ms", "objects_added",
    "plan_len",
)
TIME_COLUMNS = ("time_total_ms", "time_prune_ms", "time_search_ms", "time_bind_ms")
MODES = ("scale", "complexity", "obstruction")
ARMS = ("no_suspicious", "all_upfront", "incremental")


@dataclass
class TrialRecord:
    env: str
    kind: str
    places: int
    objects: int
    encoding: str
    incremental: str
    goal_n: int
    goal_k: int
    unique_symbols: int
    seed: int
    outcome: str
    time_total_ms: float
    time_prune_ms: float
    time_search_ms: float
    time_bind_ms: float
    objects_added: int
    plan_len: int
    # not written to the CSV
    inspects: int = 0
    valid: Optional[bool] = None
    faults: int = 0

    def row(self, mask_timings: bool = False) -> List[str]:
        d = asdict(self)
        out = []
        for c in CSV_COLUMNS:
            v = d[c]
            if c in TIME_COLUMNS:
                v = "" if mask_timings else f"{v:.3f}"
            out.append(str(v))
        return out


def seed_override(seed: int) -> int:
    env = os.environ.get("SGTAMP_SEED")
    return int(env) if env not in (None, "") else seed


# ------------------------------------------------------------------ environments
def make_env(spec: dict) -> Tuple[str, SceneGraph]:
    kind = spec.get("kind", "grid")
    seed = int(spec.get("seed", 0))
    if kind == "grid":
        rows, cols = int(spec.get("rows", 10)), int(spec.get("cols", 10))
        return spec.get("name", f"grid{rows}x{cols}"), gen_grid(rows, cols)
    if kind == "alley":
        g = gen_alley(float(spec.get("length", 12.0)), float(spec.get("width", 2.0)), float(spec.get("cell", 1.0)))
        return spec.get("name", "alley"), g
    if kind == "random":
        n = int(spec.get("places", 500))
        return spec.get("name", f"random{n}"), gen_random(n, int(spec.get("objects", 0)), rng_seed=seed)
    raise ValueError(f"unknown env kind {kind!r}")


def obstruction_scene(places: int = 557, objects: int = 28, active: int = 13, seed: int = 0):
    """(all-safe graph, graph with ``active`` objects marked suspicious, active ids).
    Each object's inflated radius exceeds half the road width, so an active
    object closes the street it stands on."""
    g0 = gen_random(places, objects, rng_seed=seed)
    rng = random.Random(f"obstruction:{seed}")
    act = sorted(rng.sample(sorted(g0.objects, key=id_key), min(active, len(g0.objects))), key=id_key)
    return g0, g0.with_status(act, "suspicious"), act


def obstruction_goal(graph: SceneGraph, active: Sequence[str], index: int) -> GoalFormula:
    """Either Visited(P) for a random place or Safe(O) for a random active object."""
    r = random.Random(f"goal:{index}")
    if active and r.random() >= 0.5:
        return atom("Safe", r.choice(list(active)))
    return atom("VisitedPlace", r.choice(sorted(set(graph.places) - {graph.start_place()}, key=id_key)))


# ------------------------------------------------------------------ trials
def unique_symbols(goal: GoalFormula) -> int:
    return len(goal.symbols())


def run_trial(env: str, kind: str, graph: SceneGraph, goal: GoalFormula, encoding: str, incremental: bool,
              seed: int, budget: float, shape: Optional[Tuple[int, int]] = None, domain: str = "inspection",
              check: bool = True) -> TrialRecord:
    cfg = SolveConfig(time_budget=budget, seed=seed)
    rep = plan_task(graph, goal, domain, encoding, incremental, cfg, IncrementalConfig())
    n, k = shape or goal_shape(goal)
    plan_len = len(rep.plan) if rep.plan is not None else 0
    ms = {key: 1000.0 * rep.timing.get(key, 0.0) for key in ("total", "prune", "search", "bind")}
    rec = TrialRecord(env, kind, len(graph.places), len(graph.objects), encoding, "on" if incremental else "off",
                      n, k, unique_symbols(goal), seed, rep.outcome, ms["total"], ms["prune"], ms["search"],
                      ms["bind"], len(rep.objects_added), plan_len)
    if rep.plan is not None:
        rec.inspects = sum(1 for a in rep.plan.actions if a.name == "inspect")
        if check:
            rec.valid, rec.faults = check_report(graph, goal, domain, encoding, rep)
    return rec


def check_report(graph, goal, domain, encoding, rep: SolveReport) -> Tuple[bool, int]:
    """(plan_valid and execution-consistent on the unpruned instance, simulator faults)."""
    full = validation_instance(graph, domain, encoding, goal)
    ms = motion_sequence(rep.plan)
    ok = plan_valid(full, rep.plan.actions) and bool(check_execution_consistency(full, rep.plan, ms, graph))
    return ok, len(simulate(ms, graph).faults)


def run_scale(cfg: dict, seed: int) -> List[TrialRecord]:
    n, k = cfg.get("goal", [3, 3])
    out = []
    for spec in cfg.get("envs", [{"kind": "grid", "rows": 10, "cols": 10}]):
        name, g = make_env(spec)
        for i in range(int(cfg.get("seeds", 10))):
            s = seed + i
            goal = sample_goal(g, n, k, rng_seed=s, include_safe=False)
            for enc in cfg.get("encodings", ["sparse", "dense"]):
                out.append(run_trial(name, spec.get("kind", "grid"), g, goal, enc, False, s,
                                     float(cfg.get("budget", 60)), (n, k)))
    return out


def run_complexity(cfg: dict, seed: int) -> List[TrialRecord]:
    spec = cfg.get("env", {"kind": "grid", "rows": 10, "cols": 10})
    name, g = make_env(spec)
    out = []
    for k in cfg.get("k", [5]):
        for n in cfg.get("n", [1, 2, 3, 4, 5]):
            for i in range(int(cfg.get("seeds", 10))):
                s = seed + i
                goal = sample_goal(g, n, k, rng_seed=s, include_safe=False)
                for enc in cfg.get("encodings", ["sparse", "dense"]):
                    out.append(run_trial(name, spec.get("kind", "grid"), g, goal, enc, False, s,
                                         float(cfg.get("budget", 60)), (n, k)))
    return out


def run_obstruction(cfg: dict, seed: int) -> List[TrialRecord]:
    places = int(cfg.get("places", 557))
    g0, g1, act = obstruction_scene(places, int(cfg.get("objects", 28)), int(cfg.get("active", 13)),
                                    int(cfg.get("scene_seed", 0)))
    out = []
    for arm in cfg.get("arms", list(ARMS)):
        if arm not in ARMS:
            raise ValueError(f"unknown arm {arm!r}")
        graph = g0 if arm == "no_suspicious" else g1
        inc = arm != "all_upfront"
        for i in range(int(cfg.get("goals", 20))):
            goal = obstruction_goal(g0, act, seed + i)
            out.append(run_trial(f"random{places}:{arm}", "random", graph, goal, "sparse", inc, seed + i,
                                 float(cfg.get("budget", 60)), (1, 1)))
    return out


RUNNERS = {"scale": run_scale, "complexity": run_complexity, "obstruction": run_obstruction}


def run_bench(mode: str, cfg: dict, seed: int = 0) -> List[TrialRecord]:
    if mode not in RUNNERS:
        raise ValueError(f"unknown bench mode {mode!r}")
    return RUNNERS[mode](cfg, seed_override(seed))


def to_csv(records: Sequence[TrialRecord], mask_timings: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(r.row(mask_timings))
    return buf.getvalue()


def summarize(mode: str, records: Sequence[TrialRecord]) -> dict:
    groups: Dict[str, List[TrialRecord]] = {}
    for r in records:
        if mode == "obstruction":
            key = r.env.split(":")[-1]
        elif mode == "complexity":
            key = f"{r.encoding}:{r.unique_symbols}"
        else:
            key = f"{r.env}:{r.encoding}"
        groups.setdefault(key, []).append(r)
    out = {}
    for key, rs in groups.items():
        out[key] = {
            "trials": len(rs),
            "solved": sum(r.outcome == "solved" for r in rs),
            "timeout": sum(r.outcome == "timeout" for r in rs),
            "median_ms": round(statistics.median(r.time_total_ms for r in rs), 3),
            "with_inspect": sum(r.outcome == "solved" and r.inspects > 0 for r in rs),
            "invalid": sum(r.valid is False for r in rs),
            "faults": sum(r.faults for r in rs),
        }
    return out


def load_config(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
