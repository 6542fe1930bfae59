"""Process discovery: directly-follows graphs, alpha, heuristics and inductive miners."""
from .alpha import EmptyLog, Footprint, discover_alpha, footprint
from .dfg import ActivityStats, DirectlyFollowsGraph, EdgeStats, discover_dfg
from .heuristics import HeuristicsNet, dependency_measure, discover_heuristics
from .inductive import Operator, ProcessTree, discover_inductive, leaf, node, tree_to_petri
from .petri import PetriNet, accepts, playout_relations, replay_fitness

__all__ = [
    "ActivityStats", "DirectlyFollowsGraph", "EdgeStats", "EmptyLog", "Footprint", "HeuristicsNet",
    "Operator", "PetriNet", "ProcessTree", "accepts", "dependency_measure", "discover_alpha",
    "discover_dfg", "discover_heuristics", "discover_inductive", "footprint", "leaf", "node",
    "playout_relations", "replay_fitness", "tree_to_petri",
]
