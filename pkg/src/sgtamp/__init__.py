"""Task and motion planning over layered scene graphs.

The package grounds a symbolic planning problem from a scene graph, prunes
place symbols that cannot matter, searches for plan skeletons and binds them
with pose samplers and a route-then-refine motion planner. Objects that block
motions are added to the problem incrementally.
"""
from .goals import And, Atom, Not, Or, atom, goal_from_dict, goal_to_dict, sample_goal
from .pipeline import plan_task
from .planner import SolveConfig, SolveReport, solve
from .scene_graph import SceneGraph, load, save

__all__ = [
    "And", "Atom", "Not", "Or", "atom", "goal_from_dict", "goal_to_dict", "sample_goal",
    "plan_task", "SolveConfig", "SolveReport", "solve", "SceneGraph", "load", "save",
]
__version__ = "0.1.0"
