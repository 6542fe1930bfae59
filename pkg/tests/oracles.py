"""Independent reference computations the package results are checked against.

Each oracle is written from the definitions directly, sharing no code with
the package beyond plain data types.
"""
from __future__ import annotations

import math
from collections import defaultdict
from itertools import product


def dfg_bruteforce(log):
    """Count adjacent pairs by scanning every trace position."""
    edges = defaultdict(lambda: [0, []])
    starts, ends = defaultdict(int), defaultdict(int)
    present = defaultdict(set)
    freq = defaultdict(int)
    n = 0
    for trace in log:
        evs = list(trace.events)
        if not evs:
            continue
        n += 1
        starts[evs[0].activity] += 1
        ends[evs[-1].activity] += 1
        for e in evs:
            freq[e.activity] += 1
            present[e.activity].add(trace.case_id)
        for i in range(len(evs) - 1):
            key = (evs[i].activity, evs[i + 1].activity)
            edges[key][0] += 1
            edges[key][1].append((evs[i + 1].timestamp - evs[i].timestamp).total_seconds())
    return {
        "n": n,
        "edges": {k: (v[0], sorted(v[1])) for k, v in edges.items()},
        "starts": dict(starts),
        "ends": dict(ends),
        "freq": dict(freq),
        "coverage": {a: len(c) / n for a, c in present.items()},
    }


def footprint_oracle(traces):
    """Footprint matrix from the four relation sets, built pair by pair."""
    follows = {(t[i], t[i + 1]) for t in traces for i in range(len(t) - 1)}
    acts = sorted({a for t in traces for a in t})
    matrix = {}
    for a, b in product(acts, acts):
        ab, ba = (a, b) in follows, (b, a) in follows
        if ab and ba:
            matrix[(a, b)] = "||"
        elif ab:
            matrix[(a, b)] = "->"
        elif ba:
            matrix[(a, b)] = "<-"
        else:
            matrix[(a, b)] = "#"
    return matrix


def dependency_oracle(ab: int, ba: int) -> float:
    return (ab - ba) / (ab + ba + 1)


def temperature_band(temp: float) -> str:
    if temp < 36.0:
        return "Low"
    if temp > 37.5:
        return "High"
    return "Normal"


def infection_state_oracle(temp, wbc, sepsis):
    if sepsis:
        return "Sepsis"
    band = temperature_band(temp) + " Temperature"
    infected = wbc is not None and (wbc > 12000 or wbc < 4000)
    return f"Infection + {band}" if infected else band


def compress(labels):
    out = []
    for lab in labels:
        if not out or out[-1] != lab:
            out.append(lab)
    return out


def sort_median(values):
    v = sorted(values)
    n = len(v)
    return v[n // 2] if n % 2 else (v[n // 2 - 1] + v[n // 2]) / 2


def severity_oracle(mean, freq):
    return mean * math.log(1 + freq)


def prf(discovered, reference):
    d, r = set(discovered), set(reference)
    p = len(d & r) / len(d) if d else 0.0
    rec = len(d & r) / len(r)
    f = 0.0 if p + rec == 0 else 2 * p * rec / (p + rec)
    return p, rec, f
