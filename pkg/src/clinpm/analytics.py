"""Performance annotation, bottleneck ranking and model-vs-reference scoring."""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

import numpy as np

from .discovery.dfg import DirectlyFollowsGraph, Edge
from .discovery.heuristics import HeuristicsNet
from .discovery.inductive import ProcessTree, tree_to_petri
from .discovery.petri import PetriNet, playout_relations


class EmptyReference(ValueError):
    pass


@dataclass(frozen=True)
class DurationStats:
    count: int
    mean: float | None = None
    median: float | None = None
    max: float | None = None

    @property
    def has_data(self) -> bool:
        return self.count > 0

    @classmethod
    def of(cls, values: Iterable[float]) -> "DurationStats":
        arr = np.asarray(list(values), dtype=float)
        if arr.size == 0:
            return cls(0)
        return cls(int(arr.size), float(arr.mean()), float(np.median(arr)), float(arr.max()))

    def to_dict(self) -> dict:
        if not self.has_data:
            return {"no_data": True}
        return {"count": self.count, "mean": self.mean, "median": self.median, "max": self.max}


@dataclass(frozen=True)
class EdgePerformance:
    frequency: int
    duration: DurationStats


@dataclass(frozen=True)
class PerformanceAnnotation:
    edges: dict[Edge, EdgePerformance]
    sojourn: dict[str, DurationStats]
    self_loop_fractions: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "edges": [{"source": a, "target": b, "frequency": p.frequency, **p.duration.to_dict()}
                      for (a, b), p in self.edges.items()],
            "sojourn": {a: s.to_dict() for a, s in self.sojourn.items()},
            "self_loop_fractions": dict(self.self_loop_fractions),
        }


def annotate_performance(dfg: DirectlyFollowsGraph) -> PerformanceAnnotation:
    """Duration statistics (seconds) per edge and per activity.

    An activity's sojourn is the time until the next event in the same case,
    i.e. the pooled durations of its outgoing edges. Revisit fractions come
    from the per-activity revisit counts recorded at discovery time.
    """
    edges = {e: EdgePerformance(s.frequency, DurationStats.of(s.durations)) for e, s in dfg.edges.items()}
    pooled: dict[str, list[float]] = {a: [] for a in dfg.activities}
    for (a, _), s in dfg.edges.items():
        pooled.setdefault(a, []).extend(s.durations)
    sojourn = {a: DurationStats.of(v) for a, v in pooled.items()}
    loops = {a: s.revisit_cases / s.case_count for a, s in dfg.activities.items() if s.case_count}
    return PerformanceAnnotation(edges, sojourn, loops)


def severity_score(mean_duration: float, frequency: int) -> float:
    return mean_duration * math.log1p(frequency)


@dataclass(frozen=True)
class Bottleneck:
    edge: Edge
    mean_duration: float
    frequency: int
    severity_score: float


@dataclass(frozen=True)
class BottleneckRanking:
    entries: tuple[Bottleneck, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def to_dict(self) -> dict:
        return {"entries": [
            {"rank": i, "source": b.edge[0], "target": b.edge[1], "mean_duration": b.mean_duration,
             "frequency": b.frequency, "severity_score": b.severity_score}
            for i, b in enumerate(self.entries, start=1)
        ]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_markdown(self, unit: float = 3600.0, unit_name: str = "h") -> str:
        lines = [f"| Rank | Transition | Mean duration ({unit_name}) | Frequency | Severity |",
                 "|---:|---|---:|---:|---:|"]
        for i, b in enumerate(self.entries, start=1):
            lines.append(f"| {i} | {b.edge[0]} -> {b.edge[1]} | {b.mean_duration / unit:.2f} | "
                         f"{b.frequency} | {b.severity_score / unit:.2f} |")
        return "\n".join(lines) + "\n"


def rank_bottlenecks(annotation: PerformanceAnnotation, min_frequency: int = 1,
                     severity: Callable[[float, int], float] = severity_score) -> BottleneckRanking:
    """Edges with data and frequency >= ``min_frequency``, most severe first.

    Ties on severity fall back to lexicographic (source, target) order.
    """
    items = [Bottleneck(e, p.duration.mean, p.frequency, severity(p.duration.mean, p.frequency))
             for e, p in annotation.edges.items()
             if p.duration.has_data and p.frequency >= min_frequency]
    items.sort(key=lambda b: (-b.severity_score, b.edge))
    return BottleneckRanking(tuple(items))


@dataclass(frozen=True)
class ModelComparison:
    precision: float
    recall: float
    f1: float
    discovered_relations: frozenset[Edge]
    reference_relations: frozenset[Edge]
    wall_time: float | None = None
    element_counts: dict[str, int] = field(default_factory=dict)
    algorithm: str = ""

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "wall_time_s": self.wall_time,
            "element_counts": dict(self.element_counts),
            "discovered_relations": [list(e) for e in sorted(self.discovered_relations)],
            "reference_relations": [list(e) for e in sorted(self.reference_relations)],
        }


def model_relations(model: Any) -> frozenset[Edge]:
    """Directly-follows relations allowed by a model (bounded playout for nets and trees)."""
    if isinstance(model, DirectlyFollowsGraph):
        return model.relations()
    if isinstance(model, HeuristicsNet):
        return model.relations()
    if isinstance(model, PetriNet):
        return playout_relations(model)
    if isinstance(model, ProcessTree):
        return playout_relations(tree_to_petri(model))
    return frozenset(tuple(e) for e in model)


def element_counts(model: Any) -> dict[str, int]:
    if isinstance(model, DirectlyFollowsGraph):
        return {"activities": len(model.activities), "transitions": len(model.edges)}
    if isinstance(model, HeuristicsNet):
        return {"activities": len(model.activities), "transitions": len(model.accepted_edges)}
    if isinstance(model, PetriNet):
        return {"places": len(model.places), "transitions": len(model.transitions)}
    if isinstance(model, ProcessTree):
        return {"operators": model.count_operators(), "leaves": len(model.leaves())}
    return {"relations": len(model_relations(model))}


def compare_to_reference(discovered: Any, reference: DirectlyFollowsGraph | Iterable[Edge],
                         wall_time: float | None = None, algorithm: str = "") -> ModelComparison:
    ref = model_relations(reference)
    if not ref:
        raise EmptyReference("reference relation set is empty")
    found = model_relations(discovered)
    hit = len(found & ref)
    precision = hit / len(found) if found else 0.0
    recall = hit / len(ref)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return ModelComparison(precision, recall, f1, found, ref, wall_time, element_counts(discovered), algorithm)


def timed(fn: Callable, *args, **kwargs) -> tuple[Any, float]:
    start = time.perf_counter()
    result = fn(*args, **kwargs)
    return result, time.perf_counter() - start


def _describe_counts(counts: dict[str, int]) -> str:
    return ", ".join(f"{v} {k}" for k, v in counts.items())


def comparison_table(rows: Iterable[ModelComparison]) -> str:
    """Markdown table with algorithm, model elements, time, precision, recall and F1 columns."""
    lines = ["| Algorithm | Model elements | Time | Precision | Recall | F1 score |",
             "|---|---|---:|---:|---:|---:|"]
    for r in rows:
        t = "n/a" if r.wall_time is None else f"{r.wall_time:.3f}s"
        lines.append(f"| {r.algorithm} | {_describe_counts(r.element_counts)} | {t} | "
                     f"{r.precision:.2f} | {r.recall:.2f} | {r.f1:.2f} |")
    return "\n".join(lines) + "\n"
