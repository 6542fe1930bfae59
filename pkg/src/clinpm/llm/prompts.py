"""Prompt templates (plain text files with bracketed sections) and analysis digests."""
from __future__ import annotations

import hashlib
import re
import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping

from ..analytics import BottleneckRanking, PerformanceAnnotation
from ..discovery.dfg import DirectlyFollowsGraph

PLACEHOLDERS = ("process_summary", "dfg_digest", "bottlenecks", "case_context")
_SECTION = re.compile(r"^\[(template_id|role_preamble|body|output_contract)\]\s*$")


class UnresolvedPlaceholder(KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"unresolved placeholder {{{self.name}}}"


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    role_preamble: str
    body: str
    output_contract: str

    def placeholders(self) -> list[str]:
        names = []
        for part in (self.role_preamble, self.body, self.output_contract):
            for _, field, _, _ in string.Formatter().parse(part):
                if field and field not in names:
                    names.append(field)
        return names

    @classmethod
    def parse(cls, text: str) -> "PromptTemplate":
        sections: dict[str, list[str]] = {}
        current = None
        for line in text.splitlines():
            m = _SECTION.match(line)
            if m:
                current = m.group(1)
                sections[current] = []
            elif current is not None:
                sections[current].append(line)
        missing = [s for s in ("template_id", "role_preamble", "body", "output_contract") if s not in sections]
        if missing:
            raise ValueError(f"template is missing sections: {', '.join(missing)}")
        get = lambda k: "\n".join(sections[k]).strip()  # noqa: E731
        return cls(get("template_id"), get("role_preamble"), get("body"), get("output_contract"))


def load_template(path: str | Path | None = None) -> PromptTemplate:
    """Load a template file; ``None`` loads the bundled clinical process report template."""
    if path is None:
        text = resources.files("clinpm").joinpath("templates", "process_report.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return PromptTemplate.parse(text)


class _Strict(dict):
    def __missing__(self, key):
        raise UnresolvedPlaceholder(key)


def compose_prompt(template: PromptTemplate, values: Mapping[str, str]) -> str:
    parts = [template.role_preamble, template.body, template.output_contract]
    mapping = _Strict(values)
    return "\n\n".join(p.format_map(mapping) for p in parts if p) + "\n"


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def _pct(x: float) -> str:
    return f"{100 * x:.2f}%"


def _hours(seconds: float) -> str:
    return f"{seconds / 3600:.1f} h"


def dfg_digest(dfg: DirectlyFollowsGraph, annotation: PerformanceAnnotation | None = None, top_k: int = 10) -> str:
    """Top-k edges by frequency, each endpoint tagged with its case coverage."""
    edges = sorted(dfg.edges.items(), key=lambda kv: (-kv[1].frequency, kv[0]))[:top_k]
    cov = {a: s.case_coverage for a, s in dfg.activities.items()}
    lines = []
    for (a, b), s in edges:
        line = f"- {a} ({_pct(cov[a])}) -> {b} ({_pct(cov[b])}): {s.frequency} transitions"
        perf = annotation.edges.get((a, b)) if annotation else None
        if perf is not None and perf.duration.has_data:
            line += f", mean {_hours(perf.duration.mean)}"
        lines.append(line)
    return "\n".join(lines) if lines else "(no transitions)"


def process_summary(dfg: DirectlyFollowsGraph) -> str:
    n_events = sum(s.absolute_frequency for s in dfg.activities.values())
    starts = ", ".join(f"{a} ({_pct(n / dfg.n_traces)})" for a, n in
                       sorted(dfg.start_activities.items(), key=lambda kv: (-kv[1], kv[0]))) or "none"
    ends = ", ".join(f"{a} ({_pct(n / dfg.n_traces)})" for a, n in
                     sorted(dfg.end_activities.items(), key=lambda kv: (-kv[1], kv[0]))) or "none"
    states = ", ".join(f"{a} ({_pct(s.case_coverage)})" for a, s in
                       sorted(dfg.activities.items(), key=lambda kv: (-kv[1].case_count, kv[0])))
    return (f"{dfg.n_traces} cases, {n_events} events, {len(dfg.activities)} states, "
            f"{len(dfg.edges)} distinct transitions.\n"
            f"Start states: {starts}.\nEnd states: {ends}.\nState coverage: {states}.")


def bottleneck_digest(ranking: BottleneckRanking | None, top_k: int = 5) -> str:
    if ranking is None or not len(ranking):
        return "(no timed transitions)"
    return "\n".join(f"{i}. {b.edge[0]} -> {b.edge[1]}: mean {_hours(b.mean_duration)}, {b.frequency} transitions"
                     for i, b in enumerate(ranking.entries[:top_k], start=1))


def analysis_values(dfg: DirectlyFollowsGraph, annotation: PerformanceAnnotation | None = None,
                    ranking: BottleneckRanking | None = None, case_context: str = "",
                    top_k: int = 10) -> dict[str, str]:
    return {
        "process_summary": process_summary(dfg),
        "dfg_digest": dfg_digest(dfg, annotation, top_k),
        "bottlenecks": bottleneck_digest(ranking),
        "case_context": case_context or "(none provided)",
    }
