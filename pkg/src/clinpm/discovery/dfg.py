from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from ..eventlog import EventLog

Edge = tuple[str, str]


@dataclass(frozen=True)
class ActivityStats:
    absolute_frequency: int
    case_count: int
    n_cases: int
    revisit_cases: int = 0

    @property
    def case_coverage(self) -> float:
        return self.case_count / self.n_cases if self.n_cases else 0.0


@dataclass(frozen=True)
class EdgeStats:
    frequency: int
    durations: tuple[float, ...] = ()  # seconds, one per observed position


@dataclass(frozen=True)
class DirectlyFollowsGraph:
    activities: dict[str, ActivityStats] = field(default_factory=dict)
    edges: dict[Edge, EdgeStats] = field(default_factory=dict)
    start_activities: dict[str, int] = field(default_factory=dict)
    end_activities: dict[str, int] = field(default_factory=dict)
    n_traces: int = 0

    def relations(self) -> frozenset[Edge]:
        return frozenset(self.edges)

    def merge(self, other: "DirectlyFollowsGraph") -> "DirectlyFollowsGraph":
        """DFG of the concatenation of the two underlying logs (case ids assumed disjoint)."""
        n = self.n_traces + other.n_traces
        acts = {}
        for a in sorted(set(self.activities) | set(other.activities)):
            x = self.activities.get(a, ActivityStats(0, 0, 0))
            y = other.activities.get(a, ActivityStats(0, 0, 0))
            acts[a] = ActivityStats(x.absolute_frequency + y.absolute_frequency, x.case_count + y.case_count,
                                    n, x.revisit_cases + y.revisit_cases)
        edges = {}
        for e in sorted(set(self.edges) | set(other.edges)):
            x = self.edges.get(e, EdgeStats(0))
            y = other.edges.get(e, EdgeStats(0))
            edges[e] = EdgeStats(x.frequency + y.frequency, x.durations + y.durations)
        return DirectlyFollowsGraph(
            acts, edges,
            dict(sorted((Counter(self.start_activities) + Counter(other.start_activities)).items())),
            dict(sorted((Counter(self.end_activities) + Counter(other.end_activities)).items())),
            n,
        )

    def to_dict(self) -> dict:
        return {
            "type": "dfg",
            "n_traces": self.n_traces,
            "activities": {
                a: {"absolute_frequency": s.absolute_frequency, "case_count": s.case_count,
                    "case_coverage": s.case_coverage, "revisit_cases": s.revisit_cases}
                for a, s in self.activities.items()
            },
            "edges": [
                {"source": a, "target": b, "frequency": s.frequency, "durations": list(s.durations)}
                for (a, b), s in self.edges.items()
            ],
            "start_activities": dict(self.start_activities),
            "end_activities": dict(self.end_activities),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DirectlyFollowsGraph":
        n = int(data["n_traces"])
        acts = {a: ActivityStats(int(s["absolute_frequency"]), int(s["case_count"]), n, int(s.get("revisit_cases", 0)))
                for a, s in data["activities"].items()}
        edges = {(e["source"], e["target"]): EdgeStats(int(e["frequency"]), tuple(float(d) for d in e.get("durations", ())))
                 for e in data["edges"]}
        return cls(acts, edges, dict(data["start_activities"]), dict(data["end_activities"]), n)


def discover_dfg(log: EventLog) -> DirectlyFollowsGraph:
    freq: Counter = Counter()
    cases: Counter = Counter()
    revisits: Counter = Counter()
    starts: Counter = Counter()
    ends: Counter = Counter()
    durations: dict[Edge, list[float]] = {}
    n = 0
    for trace in log:
        if not len(trace):
            continue
        n += 1
        events = trace.events
        starts[events[0].activity] += 1
        ends[events[-1].activity] += 1
        per_case = Counter(e.activity for e in events)
        freq.update(per_case)
        cases.update(per_case.keys())
        revisits.update(a for a, c in per_case.items() if c > 1)
        for prev, nxt in zip(events, events[1:]):
            durations.setdefault((prev.activity, nxt.activity), []).append(
                (nxt.timestamp - prev.timestamp).total_seconds())
    activities = {a: ActivityStats(freq[a], cases[a], n, revisits[a]) for a in sorted(freq)}
    edges = {e: EdgeStats(len(d), tuple(d)) for e, d in sorted(durations.items())}
    return DirectlyFollowsGraph(activities, edges, dict(sorted(starts.items())), dict(sorted(ends.items())), n)
