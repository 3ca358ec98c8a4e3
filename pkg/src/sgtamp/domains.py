"""Inspection and Retrieval planning domains, and instantiation of problems over a scene graph.

Config symbols are place-located: ``c0`` is the robot's initial configuration,
``q_<place>`` a pose inside a place, ``qi_<obj>`` an inspection pose and
``qg_<obj>`` a grasp pose next to an object. One trajectory symbol
``t_<c1>-<c2>`` exists per ordered config pair the encoding allows.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .goals import GoalFormula
from .scene_graph import SceneGraph, id_key
from .task_core import L, NL, ActionSchema, Fact, ProblemInstance, Stream

ENCODINGS = ("sparse", "dense")

BASE_PREDICATES = {
    "AtConfig": 1,
    "AtPlace": 1,
    "AtRoom": 1,
    "VisitedPlace": 1,
    "PlaceInRoom": 2,
    "Connected": 2,
    "PoseInPlace": 2,
    "InspectPose": 2,
    "Trajectory": 3,
    "Suspicious": 1,
    "Safe": 1,
    "ObjectAtPlace": 2,
}
RETRIEVAL_PREDICATES = {"Holding": 1, "HandEmpty": 0, "GraspPose": 2}
REPORT_PREDICATES = {"HomeBase": 1, "Reported": 0}

MOVE_PARAMS = (("?p1", "place"), ("?p2", "place"), ("?c1", "config"), ("?c2", "config"), ("?t", "trajectory"))


@dataclass(frozen=True)
class DomainDefinition:
    name: str
    encoding: str
    predicates: Mapping[str, int]
    actions: Tuple[ActionSchema, ...]
    streams: Tuple[Stream, ...]

    @property
    def move_action(self) -> str:
        return "moveRelaxed" if self.encoding == "sparse" else "move"


def _move(encoding: str) -> ActionSchema:
    pre = [
        L("AtConfig", "?c1"),
        L("Trajectory", "?c1", "?t", "?c2"),
        L("PoseInPlace", "?c1", "?p1"),
        L("PoseInPlace", "?c2", "?p2"),
    ]
    if encoding == "dense":
        pre.append(L("Connected", "?p1", "?p2"))
    return ActionSchema(
        "moveRelaxed" if encoding == "sparse" else "move",
        MOVE_PARAMS,
        pre,
        add=[L("AtConfig", "?c2"), L("VisitedPlace", "?p1"), L("VisitedPlace", "?p2")],
        delete=[L("AtConfig", "?c1")],
    )


INSPECT = ActionSchema(
    "inspect",
    (("?o", "object"), ("?c", "config")),
    pre=[L("AtConfig", "?c"), L("InspectPose", "?c", "?o"), L("Suspicious", "?o")],
    add=[L("Safe", "?o")],
    delete=[L("Suspicious", "?o")],
)

PICK = ActionSchema(
    "pick",
    (("?o", "object"), ("?c", "config"), ("?p", "place")),
    pre=[
        L("AtConfig", "?c"),
        L("GraspPose", "?c", "?o"),
        L("HandEmpty"),
        L("ObjectAtPlace", "?o", "?p"),
        NL("Suspicious", "?o"),
    ],
    add=[L("Holding", "?o")],
    delete=[L("HandEmpty"), L("ObjectAtPlace", "?o", "?p")],
)

PLACE = ActionSchema(
    "place",
    (("?o", "object"), ("?c", "config"), ("?p", "place")),
    pre=[L("Holding", "?o"), L("AtConfig", "?c"), L("PoseInPlace", "?c", "?p")],
    add=[L("ObjectAtPlace", "?o", "?p"), L("HandEmpty")],
    delete=[L("Holding", "?o")],
)

REPORT_HOME = ActionSchema(
    "reportHome",
    (("?p", "place"), ("?c", "config")),
    pre=[L("AtConfig", "?c"), L("PoseInPlace", "?c", "?p"), L("HomeBase", "?p")],
    add=[L("Reported")],
)

STREAMS = (
    Stream("sample-pose", (("?p", "place"),), (("?c", "config"),), (L("PoseInPlace", "?c", "?p"),)),
    Stream(
        "sample-inspect-pose",
        (("?o", "object"), ("?p", "place")),
        (("?c", "config"),),
        (L("InspectPose", "?c", "?o"), L("PoseInPlace", "?c", "?p")),
    ),
    Stream("plan-motion", (("?c1", "config"), ("?c2", "config")), (("?t", "trajectory"),),
           (L("Trajectory", "?c1", "?t", "?c2"),)),
)
GRASP_STREAM = Stream(
    "sample-grasp-pose",
    (("?o", "object"), ("?p", "place")),
    (("?c", "config"),),
    (L("GraspPose", "?c", "?o"), L("PoseInPlace", "?c", "?p")),
)


def inspection_domain(encoding: str = "sparse", report_home: bool = False) -> DomainDefinition:
    if encoding not in ENCODINGS:
        raise ValueError(f"unknown encoding {encoding!r}")
    preds = dict(BASE_PREDICATES)
    actions = [_move(encoding), INSPECT]
    if report_home:
        preds.update(REPORT_PREDICATES)
        actions.append(REPORT_HOME)
    return DomainDefinition("inspection", encoding, preds, tuple(actions), STREAMS)


def retrieval_domain(encoding: str = "sparse") -> DomainDefinition:
    if encoding not in ENCODINGS:
        raise ValueError(f"unknown encoding {encoding!r}")
    preds = dict(BASE_PREDICATES)
    preds.update(RETRIEVAL_PREDICATES)
    return DomainDefinition(
        "retrieval", encoding, preds, (_move(encoding), INSPECT, PICK, PLACE), STREAMS + (GRASP_STREAM,)
    )


DOMAIN_NAMES = ("inspection", "retrieval")


def get_domain(name: str, encoding: str = "sparse") -> DomainDefinition:
    if name == "inspection":
        return inspection_domain(encoding)
    if name == "retrieval":
        return retrieval_domain(encoding)
    raise ValueError(f"unknown domain {name!r}")


def traj_symbol(c1: str, c2: str) -> str:
    return f"t_{c1}-{c2}"


def _goal_symbols(goal: GoalFormula, graph: SceneGraph) -> Tuple[Set[str], Set[str]]:
    places, objects = set(), set()
    for s in goal.symbols():
        if s in graph.places:
            places.add(s)
        elif s in graph.objects:
            objects.add(s)
    return places, objects


def build_problem(
    graph: SceneGraph,
    domain: DomainDefinition,
    goal: GoalFormula,
    places: Optional[Iterable[str]] = None,
    objects: Optional[Iterable[str]] = None,
    home_places: Iterable[str] = (),
) -> ProblemInstance:
    """Instantiate ``domain`` over a subset of the scene.

    ``places``/``objects`` default to everything in the graph. The start
    place, the places and objects named in the goal, and the places holding
    instance objects are always added.
    """
    start = graph.start_place()
    g_places, g_objects = _goal_symbols(goal, graph)
    obj_set = set(graph.objects if objects is None else objects) | g_objects
    place_set = set(graph.places if places is None else places) | g_places | {start}
    place_set |= {graph.objects[o].place for o in obj_set}
    home = [p for p in home_places if p in graph.places]
    place_set |= set(home)
    place_list = sorted(place_set, key=id_key)
    obj_list = sorted(obj_set, key=id_key)
    retrieval = domain.name == "retrieval"

    symbols: Dict[str, str] = {"robot": "robot"}
    for p in place_list:
        symbols[p] = "place"
    for o in obj_list:
        symbols[o] = "object"

    # config symbols with their place and role
    config_place: Dict[str, str] = {"c0": start}
    config_role: Dict[str, Tuple[str, Optional[str]]] = {"c0": ("initial", None)}
    for p in place_list:
        config_place[f"q_{p}"] = p
        config_role[f"q_{p}"] = ("pose", p)
    for o in obj_list:
        node = graph.objects[o]
        if node.suspicious:
            config_place[f"qi_{o}"] = node.place
            config_role[f"qi_{o}"] = ("inspect", o)
        if retrieval:
            config_place[f"qg_{o}"] = node.place
            config_role[f"qg_{o}"] = ("grasp", o)
    for c in config_place:
        symbols[c] = "config"

    init: Set[Fact] = {("AtConfig", "c0"), ("VisitedPlace", start), ("PoseInPlace", "c0", start)}
    for o in obj_list:
        node = graph.objects[o]
        init.add(("Suspicious", o) if node.suspicious else ("Safe", o))
        init.add(("ObjectAtPlace", o, node.place))
    if retrieval:
        init.add(("HandEmpty",))
    for p in home:
        init.add(("HomeBase", p))

    certified: Set[Fact] = set()
    for c, p in config_place.items():
        if c != "c0":
            certified.add(("PoseInPlace", c, p))
        role, target = config_role[c]
        if role == "inspect":
            certified.add(("InspectPose", c, target))
        elif role == "grasp":
            certified.add(("GraspPose", c, target))

    if domain.encoding == "dense":
        in_set = set(place_list)
        for a, b in graph.place_edges:
            if a in in_set and b in in_set:
                init.add(("Connected", a, b))
                init.add(("Connected", b, a))
        for p in place_list:
            init.add(("Connected", p, p))

        def allowed(p1, p2):
            return ("Connected", p1, p2) in init
    else:
        def allowed(p1, p2):
            return True

    configs = list(config_place)
    for c1 in configs:
        for c2 in configs:
            if c1 == c2 or c2 == "c0":
                continue
            if not allowed(config_place[c1], config_place[c2]):
                continue
            t = traj_symbol(c1, c2)
            symbols[t] = "trajectory"
            certified.add(("Trajectory", c1, t, c2))

    meta = {
        "start_place": start,
        "config_place": config_place,
        "config_role": config_role,
    }
    return ProblemInstance(
        predicates=dict(domain.predicates),
        actions=domain.actions,
        streams=domain.streams,
        symbols=symbols,
        init=frozenset(init),
        goal=goal,
        certified=frozenset(certified),
        domain=domain.name,
        encoding=domain.encoding,
        meta=meta,
    )


def instance_places(problem: ProblemInstance) -> List[str]:
    return sorted(problem.places(), key=id_key)


def instance_objects(problem: ProblemInstance) -> List[str]:
    return sorted(problem.objects(), key=id_key)


def restrict(problem: ProblemInstance, graph: SceneGraph, domain: DomainDefinition,
             places: Iterable[str], objects: Iterable[str], goal: Optional[GoalFormula] = None) -> ProblemInstance:
    """Rebuild an instance with a different symbol subset (same domain)."""
    home = [f[1] for f in problem.init if f[0] == "HomeBase"]
    return build_problem(graph, domain, problem.goal if goal is None else goal, places=places, objects=objects,
                         home_places=home)


def domain_of(problem: ProblemInstance) -> DomainDefinition:
    return DomainDefinition(problem.domain, problem.encoding, dict(problem.predicates), problem.actions, problem.streams)
