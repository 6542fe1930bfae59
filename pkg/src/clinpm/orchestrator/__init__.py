"""Consensus synthesis, rubric evaluation and token-cost accounting."""
from .claims import Claim, MissingSection, extract_claims, normalize
from .consensus import ClaimCluster, ClusterKind, InsufficientReports, OrchestratedReport, orchestrate
from .cost import CostEntry, CostLedger, SpecMismatch, performance_cost_ratio, record_cost, token_cost
from .render import render_orchestrated_markdown
from .rubric import (
    DEFAULT_RUBRIC,
    Criterion,
    EmptyGroup,
    EvaluatorFormatError,
    Rubric,
    RubricError,
    ScoredReport,
    ScoreSummary,
    aggregate_scores,
    evaluate_report,
    overall_mean,
)

__all__ = [
    "Claim", "ClaimCluster", "ClusterKind", "CostEntry", "CostLedger", "Criterion", "DEFAULT_RUBRIC",
    "EmptyGroup", "EvaluatorFormatError", "InsufficientReports", "MissingSection", "OrchestratedReport",
    "Rubric", "RubricError", "ScoreSummary", "ScoredReport", "SpecMismatch", "aggregate_scores",
    "evaluate_report", "extract_claims", "normalize", "orchestrate", "overall_mean",
    "performance_cost_ratio", "record_cost", "render_orchestrated_markdown", "token_cost",
]
