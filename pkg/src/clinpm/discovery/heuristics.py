from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from ..eventlog import EventLog
from .dfg import DirectlyFollowsGraph, Edge, discover_dfg

DEFAULT_DEPENDENCY_THRESHOLD = 0.9
DEFAULT_AND_THRESHOLD = 0.1


def dependency_measure(ab: int, ba: int) -> float:
    """(|a>b| - |b>a|) / (|a>b| + |b>a| + 1), for a != b."""
    return (ab - ba) / (ab + ba + 1)


def self_loop_measure(aa: int) -> float:
    return aa / (aa + 1)


@dataclass(frozen=True)
class HeuristicsNet:
    activities: tuple[str, ...]
    dependency: dict[Edge, float]
    accepted_edges: frozenset[Edge]
    and_or_splits: dict[str, str]
    threshold: float
    start_activities: dict[str, int]
    end_activities: dict[str, int]

    def relations(self) -> frozenset[Edge]:
        return self.accepted_edges

    def outputs(self, a: str) -> list[str]:
        return sorted(b for x, b in self.accepted_edges if x == a)

    def to_dict(self) -> dict:
        return {
            "type": "heuristics_net",
            "threshold": self.threshold,
            "activities": list(self.activities),
            "dependency": [{"source": a, "target": b, "value": v} for (a, b), v in self.dependency.items()],
            "accepted_edges": [list(e) for e in sorted(self.accepted_edges)],
            "splits": dict(self.and_or_splits),
            "start_activities": dict(self.start_activities),
            "end_activities": dict(self.end_activities),
        }


def discover_heuristics(log: EventLog | DirectlyFollowsGraph,
                        dependency_threshold: float = DEFAULT_DEPENDENCY_THRESHOLD,
                        and_threshold: float = DEFAULT_AND_THRESHOLD) -> HeuristicsNet:
    """Dependency graph with all-activities-connected heuristic and AND/XOR split typing.

    Length-two loops and long-distance dependencies are not modelled.
    """
    if not 0.0 <= dependency_threshold < 1.0:
        raise ValueError("dependency_threshold must be in [0, 1)")
    dfg = log if isinstance(log, DirectlyFollowsGraph) else discover_dfg(log)
    acts = tuple(dfg.activities)

    def count(a: str, b: str) -> int:
        s = dfg.edges.get((a, b))
        return s.frequency if s else 0

    dep: dict[Edge, float] = {}
    for a in acts:
        for b in acts:
            if a == b:
                if count(a, a):
                    dep[(a, a)] = self_loop_measure(count(a, a))
            elif count(a, b) or count(b, a):
                dep[(a, b)] = dependency_measure(count(a, b), count(b, a))

    accepted = {e for e, v in dep.items() if v >= dependency_threshold and v > 0}
    # all-activities-connected: best successor for non-end, best predecessor for non-start activities
    for a in acts:
        if a not in dfg.end_activities or len(acts) == 1:
            succ = [(v, b) for (x, b), v in dep.items() if x == a and b != a and v > 0]
            if succ:
                best = max(v for v, _ in succ)
                accepted.add((a, min(b for v, b in succ if v == best)))
        if a not in dfg.start_activities:
            pred = [(v, x) for (x, b), v in dep.items() if b == a and x != a and v > 0]
            if pred:
                best = max(v for v, _ in pred)
                accepted.add((min(x for v, x in pred if v == best), a))

    splits: dict[str, str] = {}
    for a in acts:
        outs = sorted(b for x, b in accepted if x == a and b != a)
        if len(outs) < 2:
            continue
        kinds = set()
        for b, c in combinations(outs, 2):
            measure = (count(b, c) + count(c, b)) / (count(a, b) + count(a, c) + 1)
            kinds.add("AND" if measure >= and_threshold else "XOR")
        splits[a] = kinds.pop() if len(kinds) == 1 else "MIXED"

    return HeuristicsNet(acts, dict(sorted(dep.items())), frozenset(accepted), splits, dependency_threshold,
                         dict(dfg.start_activities), dict(dfg.end_activities))
