"""Alpha algorithm: footprint relations and maximal place construction."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from ..eventlog import EventLog
from .petri import PetriNet, marking

CAUSAL = "->"
REVERSE = "<-"
PARALLEL = "||"
CHOICE = "#"

ARTIFICIAL_START = "__start__"
ARTIFICIAL_END = "__end__"


class EmptyLog(ValueError):
    pass


@dataclass(frozen=True)
class Footprint:
    activities: tuple[str, ...]
    follows: frozenset[tuple[str, str]]
    starts: frozenset[str]
    ends: frozenset[str]

    def relation(self, a: str, b: str) -> str:
        ab = (a, b) in self.follows
        ba = (b, a) in self.follows
        if ab and ba:
            return PARALLEL
        if ab:
            return CAUSAL
        if ba:
            return REVERSE
        return CHOICE

    def causal(self) -> frozenset[tuple[str, str]]:
        return frozenset((a, b) for a, b in self.follows if (b, a) not in self.follows)

    def parallel(self) -> frozenset[tuple[str, str]]:
        return frozenset((a, b) for a, b in self.follows if (b, a) in self.follows)

    def matrix(self) -> dict[tuple[str, str], str]:
        return {(a, b): self.relation(a, b) for a in self.activities for b in self.activities}

    def to_text(self) -> str:
        width = max([len(a) for a in self.activities] + [2])
        lines = [" " * width + " " + " ".join(a.rjust(width) for a in self.activities)]
        for a in self.activities:
            lines.append(a.rjust(width) + " " + " ".join(self.relation(a, b).rjust(width) for b in self.activities))
        return "\n".join(lines)


def footprint(traces: Iterable[Sequence[str]]) -> Footprint:
    follows, acts, starts, ends = set(), set(), set(), set()
    for t in traces:
        if not t:
            continue
        acts.update(t)
        starts.add(t[0])
        ends.add(t[-1])
        follows.update(zip(t, t[1:]))
    return Footprint(tuple(sorted(acts)), frozenset(follows), frozenset(starts), frozenset(ends))


def _variants(log: EventLog | Iterable[Sequence[str]]) -> list[tuple[str, ...]]:
    seqs = (t.activities for t in log) if isinstance(log, EventLog) else (tuple(t) for t in log)
    return sorted({s for s in seqs if s})


def _needs_artificial_bounds(fp: Footprint) -> bool:
    return bool(fp.starts & fp.ends)


def _maximal_pairs(fp: Footprint) -> list[tuple[frozenset[str], frozenset[str]]]:
    causal = fp.causal()

    def independent(group: frozenset[str]) -> bool:
        return all(fp.relation(a, b) == CHOICE for a in group for b in group)

    def valid(A: frozenset[str], B: frozenset[str]) -> bool:
        return independent(A) and independent(B) and all((a, b) in causal for a in A for b in B)

    pairs = {(frozenset([a]), frozenset([b])) for a, b in causal
             if fp.relation(a, a) == CHOICE and fp.relation(b, b) == CHOICE}
    frontier = set(pairs)
    while frontier:
        grown = set()
        for A1, B1 in frontier:
            for A2, B2 in pairs:
                cand = (A1 | A2, B1 | B2)
                if cand not in pairs and cand not in grown and valid(*cand):
                    grown.add(cand)
        pairs |= grown
        frontier = grown
    maximal = [p for p in pairs
               if not any(q != p and p[0] <= q[0] and p[1] <= q[1] for q in pairs)]
    return sorted(maximal, key=lambda p: (sorted(p[0]), sorted(p[1])))


def _place_name(A: frozenset[str], B: frozenset[str]) -> str:
    return "p({" + ",".join(sorted(A)) + "},{" + ",".join(sorted(B)) + "})"


def discover_alpha(log: EventLog | Iterable[Sequence[str]]) -> PetriNet:
    """Classic alpha miner.

    When some activity is both a start and an end activity, every trace is
    wrapped in artificial start/end steps which become silent transitions.
    """
    variants = _variants(log)
    if not variants:
        raise EmptyLog("alpha needs at least one non-empty trace")
    fp = footprint(variants)
    if _needs_artificial_bounds(fp):
        fp = footprint([(ARTIFICIAL_START, *v, ARTIFICIAL_END) for v in variants])

    places = ["source"]
    arcs = set()
    for a in sorted(fp.starts):
        arcs.add(("source", f"t:{a}"))
    for A, B in _maximal_pairs(fp):
        name = _place_name(A, B)
        places.append(name)
        arcs.update((f"t:{a}", name) for a in A)
        arcs.update((name, f"t:{b}") for b in B)
    places.append("sink")
    for a in sorted(fp.ends):
        arcs.add((f"t:{a}", "sink"))

    artificial = {ARTIFICIAL_START, ARTIFICIAL_END}
    transitions = tuple((f"t:{a}", None if a in artificial else a) for a in fp.activities)
    return PetriNet(tuple(places), transitions, frozenset(arcs),
                    marking({"source": 1}), marking({"sink": 1}))
