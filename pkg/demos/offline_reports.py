"""
Five reports, one consensus, offline
====================================

Fan a report prompt out to the model catalog with the deterministic mock
provider, then vote, score and cost the answers. Swap ``MockProvider()``
for ``OpenRouterClient.from_env()`` to call the real models.
"""

from clinpm.analytics import annotate_performance, rank_bottlenecks
from clinpm.discovery import discover_dfg
from clinpm.eventlog import log_from_sequences
from clinpm.llm import DEFAULT_CATALOG, MockProvider, analysis_values, catalog_index, compose_prompt, fan_out, load_template
from clinpm.orchestrator import DEFAULT_RUBRIC, aggregate_scores, evaluate_report, orchestrate, render_orchestrated_markdown
from clinpm.orchestrator.cost import record_all

log = log_from_sequences([list("ABCD")] * 3 + [list("ACBD")] * 2 + [list("AED")])
dfg = discover_dfg(log)
annotation = annotate_performance(dfg)

prompt = compose_prompt(load_template(), analysis_values(dfg, annotation, rank_bottlenecks(annotation)))
print(prompt[:300], "...")

provider = MockProvider()
bundle = fan_out(DEFAULT_CATALOG, prompt, provider=provider, case_label="Six traces")
print([r.model_id for r in bundle.responses])

###############################################################################
# Vote
synthesis = orchestrate(bundle)
print(f"agreement {synthesis.agreement_rate:.0%}")
for cluster in synthesis.consensus_findings:
    print(f"  {cluster.support}/{synthesis.n_models}: {cluster.representative.text}")

###############################################################################
# Every model judges every report; GPT-4.1's scores are left out of the means.
scored, judge_calls = [], []
for report in bundle.responses:
    for judge in DEFAULT_CATALOG:
        scored.append(evaluate_report(report, DEFAULT_RUBRIC, judge, provider,
                                      case_label=bundle.case_label, responses=judge_calls))
summary = aggregate_scores(scored, exclude_evaluators=["openai/gpt-4.1"])

specs = catalog_index()
ledger = record_all((r, specs[r.model_id]) for r in bundle.responses)
ledger = record_all(((r, specs[r.model_id]) for r in judge_calls), ledger, kind="evaluation")
ledger = ledger.with_scores({m: s.mean for m, s in summary.items()})

print(render_orchestrated_markdown(synthesis, summary, ledger))
