"""Graphviz DOT emitters for directly-follows graphs and Petri nets."""
from __future__ import annotations

import math

from .analytics import PerformanceAnnotation
from .discovery.dfg import DirectlyFollowsGraph
from .discovery.petri import PetriNet


def quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _duration(seconds: float) -> str:
    if seconds >= 86400:
        return f"{seconds / 86400:.2f} d"
    if seconds >= 3600:
        return f"{seconds / 3600:.2f} h"
    return f"{seconds / 60:.1f} min"


def dfg_to_dot(dfg: DirectlyFollowsGraph, annotation: PerformanceAnnotation | None = None,
               name: str = "dfg") -> str:
    """Nodes show frequency and case coverage; edge pen width grows with log frequency."""
    ids = {a: f"a{i}" for i, a in enumerate(dfg.activities)}
    max_log = max((math.log1p(s.frequency) for s in dfg.edges.values()), default=1.0) or 1.0
    lines = [f"digraph {quote(name)} {{", "  rankdir=LR;", '  node [shape=box, style="rounded"];']
    for a, s in dfg.activities.items():
        label = f"{a}\n{s.absolute_frequency} ({100 * s.case_coverage:.2f}% of cases)"
        extra = []
        if a in dfg.start_activities:
            extra.append(f"start {dfg.start_activities[a]}")
        if a in dfg.end_activities:
            extra.append(f"end {dfg.end_activities[a]}")
        if extra:
            label += "\n" + ", ".join(extra)
        lines.append(f"  {ids[a]} [label={quote(label)}];")
    for (a, b), s in dfg.edges.items():
        label = str(s.frequency)
        perf = annotation.edges.get((a, b)) if annotation else None
        if perf is not None and perf.duration.has_data:
            label += f"\nmean {_duration(perf.duration.mean)}"
        width = 1.0 + 4.0 * math.log1p(s.frequency) / max_log
        lines.append(f"  {ids[a]} -> {ids[b]} [label={quote(label)}, penwidth={width:.2f}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def petri_to_dot(net: PetriNet, name: str = "petri_net") -> str:
    """Places as circles (token counts shown), transitions as boxes; silent ones are unlabeled black bars."""
    ids = {p: f"p{i}" for i, p in enumerate(net.places)}
    ids.update({t: f"t{i}" for i, (t, _) in enumerate(net.transitions)})
    initial, final = dict(net.initial_marking), dict(net.final_marking)
    lines = [f"digraph {quote(name)} {{", "  rankdir=LR;"]
    for p in net.places:
        label = "\u25cf" * initial.get(p, 0) if p in initial else ""
        shape = "doublecircle" if p in final else "circle"
        lines.append(f"  {ids[p]} [shape={shape}, label={quote(label)}, xlabel={quote(p)}];")
    for t, label in net.transitions:
        if label is None:
            lines.append(f'  {ids[t]} [shape=box, label="", style=filled, fillcolor=black, width=0.15];')
        else:
            lines.append(f"  {ids[t]} [shape=box, label={quote(label)}];")
    for src, dst in sorted(net.arcs):
        lines.append(f"  {ids[src]} -> {ids[dst]};")
    lines.append("}")
    return "\n".join(lines) + "\n"
