import json
import math

import numpy as np
import pytest

from clinpm.analytics import (
    DurationStats,
    EmptyReference,
    annotate_performance,
    compare_to_reference,
    comparison_table,
    model_relations,
    rank_bottlenecks,
    severity_score,
    timed,
)
from clinpm.discovery import (
    ActivityStats,
    DirectlyFollowsGraph,
    EdgeStats,
    discover_alpha,
    discover_dfg,
    discover_heuristics,
    discover_inductive,
)
from clinpm.eventlog import log_from_sequences

from .conftest import SIX_TRACES
from .oracles import prf, severity_oracle, sort_median

H = 3600.0


def graph(edges: dict) -> DirectlyFollowsGraph:
    """DFG built directly from {(a, b): durations} for annotation tests."""
    acts = sorted({x for e in edges for x in e})
    return DirectlyFollowsGraph(
        {a: ActivityStats(1, 1, 1) for a in acts},
        {e: EdgeStats(max(len(d), 1), tuple(d)) for e, d in edges.items()},
        {acts[0]: 1}, {acts[-1]: 1}, 1,
    )


def test_two_durations():
    ann = annotate_performance(graph({("A", "B"): [2 * H, 4 * H]}))
    d = ann.edges[("A", "B")].duration
    assert (d.mean, d.median, d.max) == (3 * H, 3 * H, 4 * H)


def test_no_data_marker_and_ranking_exclusion():
    ann = annotate_performance(graph({("A", "B"): [], ("B", "C"): [H]}))
    assert ann.edges[("A", "B")].duration.to_dict() == {"no_data": True}
    assert [b.edge for b in rank_bottlenecks(ann)] == [("B", "C")]


def test_streaming_oracle_on_500_edges():
    rng = np.random.default_rng(17)
    edges = {(f"a{i}", f"b{i}"): list(rng.exponential(3600, size=int(rng.integers(1, 30)))) for i in range(500)}
    ann = annotate_performance(graph(edges))
    for e, values in edges.items():
        total, count, biggest = 0.0, 0, -math.inf
        for v in values:  # one streaming pass
            total += v
            count += 1
            biggest = max(biggest, v)
        d = ann.edges[e].duration
        assert d.mean == pytest.approx(total / count, rel=1e-12)
        assert d.max == biggest
        assert d.median == pytest.approx(sort_median(values), rel=1e-12)


def test_annotation_does_not_mutate_input(six_trace_log):
    dfg = discover_dfg(six_trace_log)
    before = dfg.to_dict()
    annotate_performance(dfg)
    assert dfg.to_dict() == before


def test_sojourn_and_self_loops():
    dfg = discover_dfg(log_from_sequences([["A", "B", "A"], ["A", "C"]]))
    ann = annotate_performance(dfg)
    assert ann.sojourn["A"].count == 2
    assert ann.self_loop_fractions["A"] == pytest.approx(0.5)
    assert not ann.sojourn["C"].has_data


def test_merged_log_statistics_equal_concatenated_durations():
    rng = np.random.default_rng(6)
    a = graph({("A", "B"): list(rng.uniform(0, 10, 5))})
    b = graph({("A", "B"): list(rng.uniform(0, 10, 7))})
    merged = annotate_performance(a.merge(b)).edges[("A", "B")].duration
    direct = DurationStats.of(list(a.edges[("A", "B")].durations) + list(b.edges[("A", "B")].durations))
    assert merged == direct


def test_single_edge_rank_one():
    ranking = rank_bottlenecks(annotate_performance(graph({("A", "B"): [H]})))
    assert len(ranking) == 1 and ranking.entries[0].edge == ("A", "B")


def test_equal_frequency_longer_mean_first():
    ann = annotate_performance(graph({("A", "B"): [2 * H, 2 * H], ("C", "D"): [5 * H, 5 * H]}))
    assert [b.edge for b in rank_bottlenecks(ann)] == [("C", "D"), ("A", "B")]


def test_ranking_equals_sort_oracle_on_50_edges():
    rng = np.random.default_rng(23)
    edges = {(f"s{i:02d}", f"t{i:02d}"): list(rng.integers(1, 5, size=int(rng.integers(1, 6))) * H)
             for i in range(50)}
    ann = annotate_performance(graph(edges))
    ranking = rank_bottlenecks(ann)
    oracle = sorted(edges, key=lambda e: (-severity_oracle(np.mean(edges[e]), len(edges[e])), e))
    assert [b.edge for b in ranking] == oracle
    scores = [b.severity_score for b in ranking]
    assert all(x >= y for x, y in zip(scores, scores[1:]))
    assert sorted(b.edge for b in ranking) == sorted(edges)


def test_min_frequency_filter_and_custom_severity():
    ann = annotate_performance(graph({("A", "B"): [H], ("C", "D"): [H, H, H]}))
    assert [b.edge for b in rank_bottlenecks(ann, min_frequency=2)] == [("C", "D")]
    by_mean_only = rank_bottlenecks(ann, severity=lambda mean, freq: mean)
    assert [b.edge for b in by_mean_only] == [("A", "B"), ("C", "D")]  # tie broken lexicographically


def test_severity_formula():
    assert severity_score(10.0, 3) == pytest.approx(10.0 * math.log(4))


def test_ranking_serialisation():
    ranking = rank_bottlenecks(annotate_performance(graph({("A", "B"): [H, 3 * H]})))
    data = json.loads(ranking.to_json())
    assert data["entries"][0]["rank"] == 1 and data["entries"][0]["mean_duration"] == 2 * H
    assert "| 1 | A -> B | 2.00 |" in ranking.to_markdown()


def test_compare_example_sets():
    cmp_ = compare_to_reference([("A", "B"), ("B", "C")], [("A", "B"), ("B", "D")])
    assert (cmp_.precision, cmp_.recall, cmp_.f1) == (0.5, 0.5, 0.5)


def test_compare_identity_and_empty():
    ref = discover_dfg(log_from_sequences(SIX_TRACES))
    same = compare_to_reference(ref, ref)
    assert (same.precision, same.recall, same.f1) == (1.0, 1.0, 1.0)
    empty = compare_to_reference([], ref)
    assert empty.f1 == 0.0
    with pytest.raises(EmptyReference):
        compare_to_reference(ref, [])


def test_compare_against_oracle_random():
    rng = np.random.default_rng(41)
    pairs = [(a, b) for a in "ABCDE" for b in "ABCDE"]
    for _ in range(200):
        d = {pairs[i] for i in rng.choice(len(pairs), size=int(rng.integers(0, 10)), replace=False)}
        r = {pairs[i] for i in rng.choice(len(pairs), size=int(rng.integers(1, 10)), replace=False)}
        cmp_ = compare_to_reference(d, r)
        assert (cmp_.precision, cmp_.recall, cmp_.f1) == pytest.approx(prf(d, r))
        assert 0.0 <= cmp_.f1 <= 1.0
        assert (cmp_.f1 == 1.0) == (d == r)


def test_all_model_types_compare_to_reference(six_trace_log):
    ref = discover_dfg(six_trace_log)
    for miner in (discover_dfg, discover_alpha, discover_heuristics, discover_inductive):
        model, seconds = timed(miner, six_trace_log)
        cmp_ = compare_to_reference(model, ref, seconds, miner.__name__)
        assert seconds >= 0
        assert cmp_.precision == 1.0, miner.__name__
        # heuristics drops the B<->C pairs (dependency +-1/6)
        expected_recall = 0.75 if miner is discover_heuristics else 1.0
        assert cmp_.recall == expected_recall, miner.__name__
    # the alpha net of this log allows exactly the observed pairs
    assert model_relations(discover_alpha(six_trace_log)) == ref.relations()


def test_comparison_table_markdown(six_trace_log):
    ref = discover_dfg(six_trace_log)
    rows = [compare_to_reference(discover_alpha(six_trace_log), ref, 0.01, "alpha")]
    table = comparison_table(rows)
    assert table.splitlines()[0].startswith("|")
    assert "alpha" in table and "1.00" in table
