from __future__ import annotations

from typing import Iterable, Mapping

from .claims import Claim
from .consensus import OrchestratedReport
from .cost import CostLedger
from .rubric import ScoreSummary


def cell_text(text: str) -> str:
    """Make text safe inside a markdown table cell."""
    return text.replace("\\", "\\\\").replace("|", "\\|").replace("\n", " ")


def attributed(claim: Claim) -> str:
    return f"[{claim.source_model_id}] {cell_text(claim.text)}"


def _join(items: list[str]) -> str:
    return "<br>".join(items)


def _fmt(x: float | None, digits: int = 2) -> str:
    return "n/a" if x is None else f"{x:.{digits}f}"


def render_orchestrated_markdown(reports: OrchestratedReport | Iterable[OrchestratedReport],
                                 scores: Mapping[str, ScoreSummary] | None = None,
                                 ledger: CostLedger | None = None,
                                 title: str = "Multi-model orchestrated report") -> str:
    """One table row per case listing every claim once, followed by score and cost appendices."""
    if isinstance(reports, OrchestratedReport):
        reports = [reports]
    lines = [f"# {title}", "",
             "| Case | Key consensus findings | Critical metrics | Unique model insights | Disagreements |",
             "|---|---|---|---|---|"]
    notes = []
    for r in reports:
        consensus = _join([attributed(c) for c in r.consensus_claims()])
        unique = _join([f"- {attributed(c)}" for c in r.unique_claims()])
        disagreements = _join([attributed(c) for c in r.disagreement_claims()])
        metrics = _join([f"agreement {r.agreement_rate:.0%}", f"{r.n_models} models",
                         f"{len(r.consensus_findings)} consensus / {len(r.disagreements)} disputed clusters"])
        lines.append(f"| {cell_text(r.case_label)} | {consensus} | {metrics} | {unique} | {disagreements} |")
        notes.append(f"- **{cell_text(r.case_label)}**: {r.uncertainty_notes}")
    lines += ["", "## Uncertainty", "", *notes, ""]

    if scores:
        lines += ["## Appendix A: rubric scores (1-4 scale)", "",
                  "| Model | Mean | Min | Max | Scored reports |", "|---|---:|---:|---:|---:|"]
        for model, s in sorted(scores.items(), key=lambda kv: (-kv[1].mean, kv[0])):
            lines.append(f"| {model} | {s.mean:.2f} | {s.min:.2f} | {s.max:.2f} | {s.n} |")
        lines.append("")

    if ledger is not None and ledger.entries:
        lines += ["## Appendix B: token cost", "",
                  "| Model | Input tokens | Output tokens | Calls | Total cost | Cost per report | Performance/cost |",
                  "|---|---:|---:|---:|---:|---:|---:|"]
        for model, t in ledger.totals().items():
            lines.append(f"| {model} | {t.input_tokens} | {t.output_tokens} | {t.n_calls} | ${t.cost:.6f} | "
                         f"{'n/a' if t.cost_per_report is None else f'${t.cost_per_report:.6f}'} | "
                         f"{_fmt(ledger.performance_cost_ratio.get(model), 1)} |")
        lines += ["", f"Total cost: ${ledger.total_cost:.6f}", ""]
    return "\n".join(lines)
