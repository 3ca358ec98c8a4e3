"""Command-line front end: ``gen``, ``plan``, ``validate`` and ``bench``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import bench as benchmod
from .domains import DOMAIN_NAMES
from .execution import check_execution_consistency, motion_sequence, simulate
from .generators import gen_alley, gen_grid, gen_random
from .goals import GoalError, goal_from_dict
from .incremental import IncrementalConfig
from .pipeline import plan_task, validation_instance
from .planner import BoundPlan, SolveConfig
from .scene_graph import SceneGraphError, load, save
from .svg import render_svg
from .task_core import PlanValidationError, first_violation

EXIT_CODES = {"solved": 0, "infeasible": 2, "timeout": 3}
log = logging.getLogger("sgtamp")


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def cmd_gen(args) -> int:
    if args.kind == "grid":
        if args.places is not None:
            raise SystemExit("gen: --places is not used with --kind grid (use --rows/--cols)")
        g = gen_grid(args.rows, args.cols)
    elif args.kind == "alley":
        g = gen_alley(args.length, args.width)
    else:
        if args.places is None:
            raise SystemExit("gen: --kind random needs --places")
        g = gen_random(args.places, args.objects, rng_seed=benchmod.seed_override(args.seed))
    if args.objects and args.kind != "random":
        log.warning("--objects is only used by --kind random")
    save(g, args.out)
    print(f"wrote {len(g.places)} places, {len(g.objects)} objects to {args.out}")
    return 0


def cmd_plan(args) -> int:
    try:
        graph = load(args.scene)
        goal = goal_from_dict(_read_json(args.goal))
    except (OSError, ValueError, SceneGraphError, GoalError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    cfg = SolveConfig(time_budget=args.budget, seed=benchmod.seed_override(args.seed))
    rep = plan_task(graph, goal, args.domain, args.encoding, args.incremental == "on", cfg, IncrementalConfig())
    out = rep.to_dict()
    out.update(domain=args.domain, encoding=args.encoding)
    text = json.dumps(out, indent=2)
    try:
        if args.out_plan:
            with open(args.out_plan, "w") as fh:
                fh.write(text + "\n")
        else:
            print(text)
        if args.out_svg:
            with open(args.out_svg, "w") as fh:
                fh.write(render_svg(graph, rep.plan))
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"{rep.outcome}: {len(rep.plan) if rep.plan else 0} actions, "
          f"{rep.timing.get('total', 0.0) * 1000:.1f} ms", file=sys.stderr)
    return EXIT_CODES[rep.outcome]


def cmd_validate(args) -> int:
    try:
        graph = load(args.scene)
        goal = goal_from_dict(_read_json(args.goal))
        data = _read_json(args.plan)
    except (OSError, ValueError, SceneGraphError, GoalError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    plan_d = data.get("plan", data) if "actions" not in data else data
    if plan_d is None:
        print("error: the file holds no plan", file=sys.stderr)
        return 1
    domain = args.domain or data.get("domain", "inspection")
    encoding = args.encoding or data.get("encoding", "sparse")
    problem = validation_instance(graph, domain, encoding, goal)
    try:
        plan = BoundPlan.from_dict(plan_d, problem)
    except PlanValidationError as e:
        print(f"invalid: {e}")
        return 4
    v = first_violation(problem, plan.actions)
    if v:
        print(f"invalid: {v}")
        return 4
    try:
        ms = motion_sequence(plan)
    except ValueError as e:
        print(f"invalid: {e}")
        return 4
    res = check_execution_consistency(problem, plan, ms, graph)
    if not res.ok:
        print(f"inconsistent: {res.violations[0]}")
        return 5
    faults = simulate(ms, graph).faults
    if faults:
        print(f"execution fault: {faults[0]}")
        return 6
    print(f"ok: {len(plan)} actions valid and execution consistent")
    return 0


def cmd_bench(args) -> int:
    try:
        cfg = benchmod.load_config(args.config) if args.config else {}
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    if args.budget is not None:
        cfg["budget"] = args.budget
    if args.seeds is not None:
        key = "goals" if args.mode == "obstruction" else "seeds"
        cfg[key] = args.seeds
    records = benchmod.run_bench(args.mode, cfg, args.seed)
    text = benchmod.to_csv(records, args.mask_timings)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    summary = benchmod.summarize(args.mode, records)
    if args.summary:
        with open(args.summary, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
    for key in sorted(summary):
        s = summary[key]
        print(f"{key}: solved {s['solved']}/{s['trials']}, median {s['median_ms']:.1f} ms, "
              f"with inspect {s['with_inspect']}, invalid {s['invalid']}, faults {s['faults']}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sgtamp", description="Scene-graph task and motion planner")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a scene graph")
    g.add_argument("--kind", choices=("grid", "alley", "random"), required=True)
    g.add_argument("--rows", type=int, default=10)
    g.add_argument("--cols", type=int, default=10)
    g.add_argument("--places", type=int)
    g.add_argument("--objects", type=int, default=0)
    g.add_argument("--length", type=float, default=12.0)
    g.add_argument("--width", type=float, default=2.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    p = sub.add_parser("plan", help="plan for a goal")
    p.add_argument("--scene", required=True)
    p.add_argument("--goal", required=True, help="goal JSON file")
    p.add_argument("--domain", choices=DOMAIN_NAMES, default="inspection")
    p.add_argument("--encoding", choices=("sparse", "dense"), default="sparse")
    p.add_argument("--incremental", choices=("on", "off"), default="on")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=float, default=60.0)
    p.add_argument("--out-plan")
    p.add_argument("--out-svg")
    p.set_defaults(func=cmd_plan)

    v = sub.add_parser("validate", help="check a plan for validity and execution consistency")
    v.add_argument("--scene", required=True)
    v.add_argument("--goal", required=True)
    v.add_argument("--plan", required=True)
    v.add_argument("--domain", choices=DOMAIN_NAMES)
    v.add_argument("--encoding", choices=("sparse", "dense"))
    v.set_defaults(func=cmd_validate)

    b = sub.add_parser("bench", help="run a benchmark")
    b.add_argument("mode", choices=benchmod.MODES)
    b.add_argument("--config", help="JSON trial matrix")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--seeds", type=int, help="trials per cell (goals for obstruction)")
    b.add_argument("--budget", type=float)
    b.add_argument("--out", help="CSV path (stdout if omitted)")
    b.add_argument("--summary", help="JSON summary path")
    b.add_argument("--mask-timings", action="store_true", help="blank the timing columns")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
