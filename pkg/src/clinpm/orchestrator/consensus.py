"""Claim clustering and majority voting across model reports."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from ..llm.client import ReportBundle
from .claims import Claim, MissingSection, extract_claims

DEFAULT_SIMILARITY = 0.6
DEFAULT_QUORUM = 0.5


class InsufficientReports(ValueError):
    pass


class ClusterKind(str, enum.Enum):
    CONSENSUS = "consensus"
    UNIQUE = "unique"
    DISAGREEMENT = "disagreement"


def jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


@dataclass(frozen=True)
class ClaimCluster:
    claims: tuple[Claim, ...]
    kind: ClusterKind

    @property
    def models(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(c.source_model_id for c in self.claims))

    @property
    def support(self) -> int:
        return len(self.models)

    @property
    def representative(self) -> Claim:
        return self.claims[0]

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "support": self.support, "models": list(self.models),
                "claims": [{"model_id": c.source_model_id, "text": c.text} for c in self.claims]}


@dataclass(frozen=True)
class OrchestratedReport:
    case_label: str
    n_models: int
    consensus_findings: tuple[ClaimCluster, ...]
    unique_insights: dict[str, tuple[Claim, ...]]
    disagreements: tuple[ClaimCluster, ...]
    agreement_rate: float
    uncertainty_notes: str
    clusters: tuple[ClaimCluster, ...] = field(default=(), repr=False)

    @property
    def n_claims(self) -> int:
        return sum(len(c.claims) for c in self.clusters)

    def consensus_claims(self) -> list[Claim]:
        return [c for cl in self.consensus_findings for c in cl.claims]

    def unique_claims(self) -> list[Claim]:
        return [c for claims in self.unique_insights.values() for c in claims]

    def disagreement_claims(self) -> list[Claim]:
        return [c for cl in self.disagreements for c in cl.claims]

    def to_dict(self) -> dict:
        return {
            "case_label": self.case_label,
            "n_models": self.n_models,
            "agreement_rate": self.agreement_rate,
            "consensus_findings": [c.to_dict() for c in self.consensus_findings],
            "unique_insights": {m: [c.text for c in cs] for m, cs in self.unique_insights.items()},
            "disagreements": [c.to_dict() for c in self.disagreements],
            "uncertainty_notes": self.uncertainty_notes,
        }


def cluster_claims(claims: list[Claim], similarity: float = DEFAULT_SIMILARITY) -> list[list[Claim]]:
    """Greedy clustering on the word part of each key (numbers excluded).

    A claim joins the most similar existing cluster (earliest on ties) when
    the Jaccard similarity to that cluster's first claim reaches ``similarity``.
    """
    clusters: list[list[Claim]] = []
    for claim in claims:
        best, best_sim = None, -1.0
        for cl in clusters:
            sim = jaccard(claim.words, cl[0].words)
            if sim >= similarity and sim > best_sim:
                best, best_sim = cl, sim
        if best is None:
            clusters.append([claim])
        else:
            best.append(claim)
    return clusters


def _conflicting(claims: list[Claim]) -> bool:
    by_model: dict[str, set[frozenset[str]]] = {}
    for c in claims:
        by_model.setdefault(c.source_model_id, set()).add(c.numbers)
    if len(by_model) < 2:
        return False
    numbered = {n for sets in by_model.values() for n in sets if n}
    return len(numbered) > 1


def orchestrate(bundle: ReportBundle, quorum: float = DEFAULT_QUORUM,
                similarity: float = DEFAULT_SIMILARITY) -> OrchestratedReport:
    """Partition every extracted claim into consensus, unique insight or disagreement.

    A cluster whose claims carry different numbers across models is a
    disagreement. Otherwise it is consensus when more than ``quorum`` of the
    reporting models support it; all remaining clusters are kept as model
    insights, attributed to the model that made each claim.
    """
    if not 0.0 <= quorum < 1.0:
        raise ValueError("quorum must be in [0, 1)")
    if not 0.0 < similarity <= 1.0:
        raise ValueError("similarity must be in (0, 1]")
    claims: list[Claim] = []
    skipped: list[str] = []
    models: list[str] = []
    for resp in bundle.responses:
        try:
            extracted = extract_claims(resp.text, resp.model_id)
        except MissingSection:
            skipped.append(resp.model_id)
            continue
        models.append(resp.model_id)
        claims.extend(extracted)
    if len(models) < 2:
        raise InsufficientReports(f"need at least two usable reports, got {len(models)}")

    n = len(models)
    clusters: list[ClaimCluster] = []
    for group in cluster_claims(claims, similarity):
        support = len({c.source_model_id for c in group})
        if _conflicting(group):
            kind = ClusterKind.DISAGREEMENT
        elif support / n > quorum:
            kind = ClusterKind.CONSENSUS
        else:
            kind = ClusterKind.UNIQUE
        clusters.append(ClaimCluster(tuple(group), kind))

    consensus = tuple(c for c in clusters if c.kind is ClusterKind.CONSENSUS)
    disagreements = tuple(c for c in clusters if c.kind is ClusterKind.DISAGREEMENT)
    unique: dict[str, list[Claim]] = {m: [] for m in models}
    for cl in clusters:
        if cl.kind is ClusterKind.UNIQUE:
            for c in cl.claims:
                unique[c.source_model_id].append(c)
    n_claims = len(claims)
    n_consensus = sum(len(c.claims) for c in consensus)
    rate = n_consensus / n_claims if n_claims else 0.0

    shared_minority = sum(1 for c in clusters if c.kind is ClusterKind.UNIQUE and c.support > 1)
    notes = [f"{len(consensus)} of {len(clusters)} finding clusters reached consensus "
             f"(> {quorum:.0%} of {n} models); {n_consensus} of {n_claims} claims agree."]
    if disagreements:
        notes.append(f"{len(disagreements)} cluster(s) report conflicting quantities and need verification.")
    if shared_minority:
        notes.append(f"{shared_minority} cluster(s) are shared by several models without reaching quorum.")
    if skipped:
        notes.append("Reports without a Findings section were ignored: " + ", ".join(skipped) + ".")
    if bundle.failures:
        notes.append("Models that failed to respond: " + ", ".join(sorted(bundle.failures)) + ".")

    return OrchestratedReport(
        case_label=bundle.case_label,
        n_models=n,
        consensus_findings=consensus,
        unique_insights={m: tuple(cs) for m, cs in unique.items() if cs},
        disagreements=disagreements,
        agreement_rate=rate,
        uncertainty_notes=" ".join(notes),
        clusters=tuple(clusters),
    )
