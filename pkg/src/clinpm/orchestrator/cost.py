from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..llm.catalog import ModelSpec
from ..llm.client import LlmResponse

PER_TOKENS = 1_000_000


class SpecMismatch(ValueError):
    pass


def token_cost(input_tokens: int, output_tokens: int, spec: ModelSpec) -> float:
    return input_tokens * spec.input_price / PER_TOKENS + output_tokens * spec.output_price / PER_TOKENS


def performance_cost_ratio(mean_score: float, cost_per_report: float) -> float | None:
    if cost_per_report <= 0:
        return None
    return mean_score / cost_per_report


@dataclass(frozen=True)
class CostEntry:
    model_id: str
    input_tokens: int
    output_tokens: int
    cost: float
    kind: str = "report"


@dataclass(frozen=True)
class ModelCostTotals:
    n_reports: int
    n_calls: int
    input_tokens: int
    output_tokens: int
    cost: float
    report_cost: float

    @property
    def cost_per_report(self) -> float | None:
        return self.report_cost / self.n_reports if self.n_reports else None


@dataclass(frozen=True)
class CostLedger:
    entries: tuple[CostEntry, ...] = ()
    performance_cost_ratio: dict[str, float] = field(default_factory=dict)

    @property
    def total_cost(self) -> float:
        return math.fsum(e.cost for e in self.entries)

    def totals(self) -> dict[str, ModelCostTotals]:
        out: dict[str, list[CostEntry]] = {}
        for e in self.entries:
            out.setdefault(e.model_id, []).append(e)
        return {
            m: ModelCostTotals(
                n_reports=sum(e.kind == "report" for e in es),
                n_calls=len(es),
                input_tokens=sum(e.input_tokens for e in es),
                output_tokens=sum(e.output_tokens for e in es),
                cost=math.fsum(e.cost for e in es),
                report_cost=math.fsum(e.cost for e in es if e.kind == "report"),
            )
            for m, es in sorted(out.items())
        }

    def merge(self, other: "CostLedger") -> "CostLedger":
        entries = tuple(sorted(self.entries + other.entries,
                               key=lambda e: (e.model_id, e.kind, e.input_tokens, e.output_tokens, e.cost)))
        return CostLedger(entries, {**self.performance_cost_ratio, **other.performance_cost_ratio})

    def with_scores(self, mean_scores: Mapping[str, float]) -> "CostLedger":
        """Attach mean weighted score / cost per report for every model having both."""
        ratios = {}
        for model, t in self.totals().items():
            if model in mean_scores and t.cost_per_report:
                ratios[model] = performance_cost_ratio(mean_scores[model], t.cost_per_report)
        return CostLedger(self.entries, ratios)

    def to_dict(self) -> dict:
        return {
            "entries": [{"model_id": e.model_id, "kind": e.kind, "input_tokens": e.input_tokens,
                         "output_tokens": e.output_tokens, "cost": e.cost} for e in self.entries],
            "totals": {m: {"n_reports": t.n_reports, "n_calls": t.n_calls, "input_tokens": t.input_tokens,
                           "output_tokens": t.output_tokens, "cost": t.cost,
                           "cost_per_report": t.cost_per_report}
                       for m, t in self.totals().items()},
            "total_cost": self.total_cost,
            "performance_cost_ratio": dict(sorted(self.performance_cost_ratio.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def record_cost(response: LlmResponse, spec: ModelSpec, ledger: CostLedger | None = None,
                kind: str = "report") -> CostLedger:
    """Return a new ledger with one entry appended."""
    if response.model_id != spec.model_id:
        raise SpecMismatch(f"response from {response.model_id!r} priced with spec {spec.model_id!r}")
    ledger = ledger or CostLedger()
    entry = CostEntry(spec.model_id, response.input_tokens, response.output_tokens,
                      token_cost(response.input_tokens, response.output_tokens, spec), kind)
    return CostLedger(ledger.entries + (entry,), dict(ledger.performance_cost_ratio))


def record_all(pairs: Iterable[tuple[LlmResponse, ModelSpec]], ledger: CostLedger | None = None,
               kind: str = "report") -> CostLedger:
    ledger = ledger or CostLedger()
    for resp, spec in pairs:
        ledger = record_cost(resp, spec, ledger, kind)
    return ledger
