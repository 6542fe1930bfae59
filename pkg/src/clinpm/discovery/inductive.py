"""Inductive miner (base variant) and process-tree to Petri-net translation."""
from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..eventlog import EventLog
from .petri import PetriNet, marking

Variants = Counter  # Counter[tuple[str, ...]]


class Operator(str, enum.Enum):
    SEQUENCE = "sequence"
    XOR = "xor"
    PARALLEL = "parallel"
    LOOP = "loop"


@dataclass(frozen=True)
class ProcessTree:
    """Leaf when ``operator`` is None; ``label`` None on a leaf means a silent step."""

    operator: Operator | None = None
    children: tuple["ProcessTree", ...] = ()
    label: str | None = None

    def __post_init__(self):
        if self.operator is None and self.children:
            raise ValueError("leaves have no children")
        if self.operator is not None and len(self.children) < 2:
            raise ValueError(f"{self.operator.value} node needs at least two children")

    @property
    def is_leaf(self) -> bool:
        return self.operator is None

    def leaves(self) -> list["ProcessTree"]:
        if self.is_leaf:
            return [self]
        return [leaf for c in self.children for leaf in c.leaves()]

    def count_operators(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + sum(c.count_operators() for c in self.children)

    def __str__(self) -> str:
        if self.is_leaf:
            return self.label if self.label is not None else "tau"
        return f"{self.operator.value}({', '.join(str(c) for c in self.children)})"

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"label": self.label}
        return {"operator": self.operator.value, "children": [c.to_dict() for c in self.children]}

    @classmethod
    def from_dict(cls, data: dict) -> "ProcessTree":
        if "operator" in data:
            return cls(Operator(data["operator"]), tuple(cls.from_dict(c) for c in data["children"]))
        return cls(label=data["label"])


def leaf(label: str | None) -> ProcessTree:
    return ProcessTree(label=label)


def node(op: Operator, *children: ProcessTree) -> ProcessTree:
    return ProcessTree(op, tuple(children))


TAU = leaf(None)


# ---------------------------------------------------------------- relations

def _dfg(variants: Variants):
    follows, starts, ends, acts = set(), set(), set(), set()
    for t in variants:
        if not t:
            continue
        acts.update(t)
        starts.add(t[0])
        ends.add(t[-1])
        follows.update(zip(t, t[1:]))
    return acts, follows, starts, ends


def _components(nodes: Iterable[str], edges: Iterable[tuple[str, str]]) -> list[set[str]]:
    """Connected components of an undirected graph (union-find)."""
    parent = {n: n for n in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        if a in parent and b in parent:
            parent[find(a)] = find(b)
    groups: dict[str, set[str]] = {}
    for n in parent:
        groups.setdefault(find(n), set()).add(n)
    return sorted(groups.values(), key=min)


def _reachability(acts: set[str], follows: set[tuple[str, str]]) -> dict[str, set[str]]:
    succ = {a: set() for a in acts}
    for a, b in follows:
        succ[a].add(b)
    reach = {}
    for a in acts:
        seen, stack = set(), list(succ[a])
        while stack:
            x = stack.pop()
            if x not in seen:
                seen.add(x)
                stack.extend(succ[x])
        reach[a] = seen
    return reach


# ---------------------------------------------------------------- cuts

def _xor_cut(acts, follows, starts, ends):
    parts = _components(acts, follows)
    return parts if len(parts) > 1 else None


def _sequence_cut(acts, follows, starts, ends):
    reach = _reachability(acts, follows)
    # strongly connected components
    sccs: list[set[str]] = []
    assigned = set()
    for a in sorted(acts):
        if a in assigned:
            continue
        comp = {a} | {b for b in reach[a] if a in reach[b]}
        assigned |= comp
        sccs.append(comp)

    def reaches(x: set[str], y: set[str]) -> bool:
        return any(reach[a] & y for a in x)

    # merge components that are pairwise unreachable
    groups = [set(c) for c in sccs]
    merged = True
    while merged:
        merged = False
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                if not reaches(groups[i], groups[j]) and not reaches(groups[j], groups[i]):
                    groups[i] |= groups.pop(j)
                    merged = True
                    break
            if merged:
                break
    if len(groups) < 2:
        return None
    # order: a group precedes every group it reaches
    ordered = sorted(groups, key=lambda g: (-sum(reaches(g, h) for h in groups if h is not g), min(g)))
    for i, g in enumerate(ordered):
        for h in ordered[i + 1:]:
            if reaches(h, g) or not reaches(g, h):
                return None
    return ordered


def _parallel_cut(acts, follows, starts, ends):
    # activities stay together unless they follow each other in both directions
    not_both = [(a, b) for a in acts for b in acts
                if a < b and not ((a, b) in follows and (b, a) in follows)]
    parts = _components(acts, not_both)
    if len(parts) < 2:
        return None
    good = [p for p in parts if p & starts and p & ends]
    bad = [p for p in parts if not (p & starts and p & ends)]
    if not good:
        return None
    for p in bad:
        good[0] |= p
    good = sorted(good, key=min)
    return good if len(good) > 1 else None


def _loop_cut(acts, follows, starts, ends):
    body = set(starts) | set(ends)
    rest = acts - body
    if not rest:
        return None
    comps = _components(rest, [(a, b) for a, b in follows if a in rest and b in rest])
    redo = []
    for comp in comps:
        entries = {a for a, c in follows if c in comp and a not in comp}
        exits = {b for c, b in follows if c in comp and b not in comp}
        # a redo part is entered only from end activities and left only to start activities,
        # and then from every end activity and to every start activity
        if entries - ends or exits - starts or entries != ends or exits != starts:
            body |= comp
        else:
            redo.append(comp)
    if not redo:
        return None
    return [body, *redo]


# ---------------------------------------------------------------- splits

def _split_xor(variants: Variants, parts):
    subs = [Counter() for _ in parts]
    for t, n in variants.items():
        for i, p in enumerate(parts):
            if t[0] in p:
                subs[i][t] += n
                break
    return subs


def _split_sequence(variants: Variants, parts):
    subs = [Counter() for _ in parts]
    for t, n in variants.items():
        pos = 0
        for i, p in enumerate(parts):
            start = pos
            while pos < len(t) and t[pos] in p:
                pos += 1
            subs[i][t[start:pos]] += n
    return subs


def _split_parallel(variants: Variants, parts):
    subs = [Counter() for _ in parts]
    for t, n in variants.items():
        for i, p in enumerate(parts):
            subs[i][tuple(a for a in t if a in p)] += n
    return subs


def _split_loop(variants: Variants, parts):
    subs = [Counter() for _ in parts]
    for t, n in variants.items():
        segment: list[str] = []
        owner = None
        for a in t:
            idx = next(i for i, p in enumerate(parts) if a in p)
            if owner is not None and idx != owner:
                subs[owner][tuple(segment)] += n
                segment = []
            owner = idx
            segment.append(a)
        if owner is not None:
            subs[owner][tuple(segment)] += n
    return subs


# ---------------------------------------------------------------- miner

def _flower(acts: set[str]) -> ProcessTree:
    labels = [leaf(a) for a in sorted(acts)]
    body = labels[0] if len(labels) == 1 else node(Operator.XOR, *labels)
    return node(Operator.LOOP, body, TAU)


def _mine(variants: Variants) -> ProcessTree:
    if not variants or all(len(t) == 0 for t in variants):
        return TAU
    if any(len(t) == 0 for t in variants):
        rest = Counter({t: n for t, n in variants.items() if t})
        return node(Operator.XOR, TAU, _mine(rest))
    acts, follows, starts, ends = _dfg(variants)
    if len(acts) == 1:
        (a,) = acts
        if all(len(t) == 1 for t in variants):
            return leaf(a)
        return node(Operator.LOOP, leaf(a), TAU)

    for op, find, split in (
        (Operator.XOR, _xor_cut, _split_xor),
        (Operator.SEQUENCE, _sequence_cut, _split_sequence),
        (Operator.PARALLEL, _parallel_cut, _split_parallel),
        (Operator.LOOP, _loop_cut, _split_loop),
    ):
        parts = find(acts, follows, starts, ends)
        if parts:
            children = [_mine(sub) for sub in split(variants, parts)]
            if op is Operator.LOOP and len(children) > 2:
                children = [children[0], node(Operator.XOR, *children[1:])]
            return node(op, *children)
    return _flower(acts)


def discover_inductive(log: EventLog | Iterable[Sequence[str]]) -> ProcessTree:
    """Base inductive miner: xor, sequence, parallel, loop cuts in that order, flower fall-through."""
    if isinstance(log, EventLog):
        variants = Counter(t.activities for t in log)
    else:
        variants = Counter(tuple(t) for t in log)
    return _mine(variants)


# ---------------------------------------------------------------- translation

def tree_to_petri(tree: ProcessTree) -> PetriNet:
    """Compositional translation into a workflow net with places ``source``/``sink``."""
    places: list[str] = ["source", "sink"]
    transitions: list[tuple[str, str | None]] = []
    arcs: set[tuple[str, str]] = set()

    def new_place() -> str:
        name = f"p{len(places) - 2}"
        places.append(name)
        return name

    def new_transition(label: str | None, src: str, dst: str) -> str:
        tid = f"t{len(transitions)}"
        transitions.append((tid, label))
        arcs.add((src, tid))
        arcs.add((tid, dst))
        return tid

    def build(t: ProcessTree, src: str, dst: str) -> None:
        if t.is_leaf:
            new_transition(t.label, src, dst)
        elif t.operator is Operator.SEQUENCE:
            cur = src
            for i, child in enumerate(t.children):
                nxt = dst if i == len(t.children) - 1 else new_place()
                build(child, cur, nxt)
                cur = nxt
        elif t.operator is Operator.XOR:
            for child in t.children:
                build(child, src, dst)
        elif t.operator is Operator.PARALLEL:
            split = f"t{len(transitions)}"
            transitions.append((split, None))
            arcs.add((src, split))
            join = f"t{len(transitions)}"
            transitions.append((join, None))
            arcs.add((join, dst))
            for child in t.children:
                a, b = new_place(), new_place()
                arcs.add((split, a))
                arcs.add((b, join))
                build(child, a, b)
        else:  # loop: do-part, then any number of (redo, do) rounds
            entry, exit_ = new_place(), new_place()
            new_transition(None, src, entry)
            build(t.children[0], entry, exit_)
            for redo in t.children[1:]:
                build(redo, exit_, entry)
            new_transition(None, exit_, dst)

    build(tree, "source", "sink")
    return PetriNet(tuple(places), tuple(transitions), frozenset(arcs),
                    marking({"source": 1}), marking({"sink": 1}))
