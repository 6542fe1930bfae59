"""Petri nets, marking-based replay and bounded playout."""
from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass
from typing import Iterable, Sequence

Marking = tuple[tuple[str, int], ...]  # sorted (place, tokens) pairs, zero counts dropped


def marking(counts: dict[str, int] | Counter) -> Marking:
    return tuple(sorted((p, n) for p, n in counts.items() if n))


class ReplayLimitExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class PetriNet:
    places: tuple[str, ...]
    transitions: tuple[tuple[str, str | None], ...]  # (id, label); label None = silent
    arcs: frozenset[tuple[str, str]]
    initial_marking: Marking
    final_marking: Marking

    def __post_init__(self):
        places = set(self.places)
        tids = {t for t, _ in self.transitions}
        if places & tids:
            raise ValueError("place and transition ids overlap")
        for src, dst in self.arcs:
            if not ((src in places and dst in tids) or (src in tids and dst in places)):
                raise ValueError(f"arc {src}->{dst} does not connect a place and a transition")

    @property
    def labels(self) -> dict[str, str | None]:
        return dict(self.transitions)

    def preset(self, node: str) -> tuple[str, ...]:
        return tuple(sorted(s for s, d in self.arcs if d == node))

    def postset(self, node: str) -> tuple[str, ...]:
        return tuple(sorted(d for s, d in self.arcs if s == node))

    def _index(self):
        # built lazily, cached on the instance: t -> (consumed, produced) as (place, count) pairs
        cache = self.__dict__.get("_idx")
        if cache is None:
            cache = {t: (tuple(Counter(self.preset(t)).items()), tuple(Counter(self.postset(t)).items()))
                     for t, _ in self.transitions}
            object.__setattr__(self, "_idx", cache)
        return cache

    def enabled(self, m: Marking) -> list[str]:
        tokens = dict(m)
        idx = self._index()
        return [t for t, _ in self.transitions if all(tokens.get(p, 0) >= k for p, k in idx[t][0])]

    def fire(self, m: Marking, t: str) -> Marking:
        pre, post = self._index()[t]
        tokens = dict(m)
        for p, k in pre:
            left = tokens.get(p, 0) - k
            if left < 0:
                raise ValueError(f"transition {t} not enabled")
            tokens[p] = left
        for p, k in post:
            tokens[p] = tokens.get(p, 0) + k
        return tuple(sorted((p, n) for p, n in tokens.items() if n))

    def to_dict(self) -> dict:
        return {
            "type": "petri_net",
            "places": list(self.places),
            "transitions": [{"id": t, "label": lab} for t, lab in self.transitions],
            "arcs": [list(a) for a in sorted(self.arcs)],
            "initial_marking": dict(self.initial_marking),
            "final_marking": dict(self.final_marking),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PetriNet":
        return cls(
            tuple(data["places"]),
            tuple((t["id"], t["label"]) for t in data["transitions"]),
            frozenset(tuple(a) for a in data["arcs"]),
            marking(data["initial_marking"]),
            marking(data["final_marking"]),
        )


def accepts(net: PetriNet, trace: Sequence[str], limit: int = 100_000) -> bool:
    """True iff some firing sequence (silent steps allowed) replays ``trace`` and ends in the final marking.

    Depth-first over (marking, position) states, visible moves tried first,
    so accepted traces usually return long before the state space is exhausted.
    """
    labels = net.labels
    n = len(trace)
    start = (net.initial_marking, 0)
    seen = {start}
    stack = [start]
    while stack:
        m, i = stack.pop()
        if i == n and m == net.final_marking:
            return True
        silent, visible = [], []
        for t in net.enabled(m):
            if labels[t] is None:
                silent.append((net.fire(m, t), i))
            elif i < n and labels[t] == trace[i]:
                visible.append((net.fire(m, t), i + 1))
        for state in silent + visible:  # popped last-in first-out, so visible moves go first
            if state not in seen:
                seen.add(state)
                if len(seen) > limit:
                    raise ReplayLimitExceeded("replay search exceeds state limit")
                stack.append(state)
    return False


def replay_fitness(net: PetriNet, traces: Iterable[Sequence[str]]) -> float:
    """Fraction of traces accepted by the net (1.0 for an empty collection)."""
    results = [accepts(net, t) for t in traces]
    return sum(results) / len(results) if results else 1.0


def playout_relations(net: PetriNet, max_length: int | None = None, limit: int = 200_000) -> frozenset[tuple[str, str]]:
    """Directly-follows pairs of visible labels occurring in complete runs of bounded length.

    Runs are explored breadth-first over (marking, last visible label) states
    up to ``max_length`` visible steps (default ``2 x |transitions|``). A pair
    counts only if the state it leads to can still reach the final marking.
    """
    labels = net.labels
    if max_length is None:
        max_length = 2 * len(net.transitions)
    State = tuple  # (marking, last visible label or None)
    start: State = (net.initial_marking, None)
    depth = {start: 0}
    succ: dict[State, set[State]] = {}
    pairs: dict[State, set[tuple[str, str]]] = {}  # target state -> pairs recorded on entering it
    queue = deque([start])
    while queue:
        state = queue.popleft()
        m, last = state
        d = depth[state]
        for t in net.enabled(m):
            label = labels[t]
            if label is not None and d >= max_length:
                continue
            nm = net.fire(m, t)
            nxt: State = (nm, last if label is None else label)
            succ.setdefault(state, set()).add(nxt)
            if label is not None and last is not None:
                pairs.setdefault(nxt, set()).add((last, label))
            nd = d + (label is not None)
            if nxt not in depth or nd < depth[nxt]:
                depth[nxt] = nd
                if len(depth) > limit:
                    raise ReplayLimitExceeded("playout exceeds state limit")
                queue.append(nxt)
    # backward reachability to final states
    pred: dict[State, set[State]] = {}
    for s, outs in succ.items():
        for o in outs:
            pred.setdefault(o, set()).add(s)
    good = {s for s in depth if s[0] == net.final_marking}
    queue = deque(good)
    while queue:
        s = queue.popleft()
        for p in pred.get(s, ()):
            if p not in good:
                good.add(p)
                queue.append(p)
    result: set[tuple[str, str]] = set()
    for s, ps in pairs.items():
        if s in good:
            result |= ps
    return frozenset(result)
