"""``clinpm`` command line: ingest, derive, discover, report, orchestrate.

Exit codes: 0 success, 2 input/validation error, 3 auth/transport error,
4 internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import staging
from .analytics import annotate_performance, element_counts, model_relations, rank_bottlenecks
from .discovery import (
    DirectlyFollowsGraph,
    EmptyLog,
    PetriNet,
    ProcessTree,
    discover_alpha,
    discover_dfg,
    discover_heuristics,
    discover_inductive,
    tree_to_petri,
)
from .dot import dfg_to_dot, petri_to_dot
from .eventlog import ColumnMapping, EventLog, EventLogError, load_event_log, to_csv
from .llm import catalog as catalog_mod
from .llm import prompts
from .llm.client import (
    DEFAULT_BASE_URL,
    CallParams,
    ContextOverflow,
    LlmError,
    OpenRouterClient,
    ReportBundle,
    fan_out,
)
from .llm.mock import MockProvider
from .orchestrator import (
    DEFAULT_RUBRIC,
    EmptyGroup,
    EvaluatorFormatError,
    InsufficientReports,
    MissingSection,
    Rubric,
    RubricError,
    aggregate_scores,
    evaluate_report,
    orchestrate,
    render_orchestrated_markdown,
)
from .orchestrator.cost import CostLedger, record_all

log = logging.getLogger("clinpm")

EXIT_OK, EXIT_INPUT, EXIT_AUTH, EXIT_INTERNAL = 0, 2, 3, 4

STAGING_MODELS = {
    "infection": staging.INFECTION_PROGRESSION,
    "organ": staging.ORGAN_DAMAGE,
    "kidney": staging.KIDNEY_FUNCTION,
    "ckd": staging.CKD_OUTCOME,
}
ALGORITHMS = ("dfg", "alpha", "heuristics", "inductive")


class UsageError(ValueError):
    """Bad flag value or config detected after argument parsing."""


@dataclass(frozen=True)
class Config:
    base_url: str = DEFAULT_BASE_URL
    models: tuple[dict, ...] = ()
    templates: dict[str, str] = field(default_factory=dict)
    max_parallel: int = 5
    evaluator_exclusions: tuple[str, ...] = ()
    output_dir: str | None = None

    KEYS = ("base_url", "models", "templates", "max_parallel", "evaluator_exclusions", "output_dir")

    @classmethod
    def from_dict(cls, data: Any) -> "Config":
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
        unknown = sorted(set(data) - set(cls.KEYS))
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
        cfg = cls(
            base_url=str(data.get("base_url", DEFAULT_BASE_URL)),
            models=tuple(data.get("models", ())),
            templates=dict(data.get("templates", {})),
            max_parallel=int(data.get("max_parallel", 5)),
            evaluator_exclusions=tuple(data.get("evaluator_exclusions", ())),
            output_dir=data.get("output_dir"),
        )
        if cfg.max_parallel < 1:
            raise UsageError("max_parallel must be at least 1")
        return cfg

    @classmethod
    def load(cls, path: str | None) -> "Config":
        if path is None:
            return cls()
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def catalog(self) -> tuple[catalog_mod.ModelSpec, ...]:
        try:
            return catalog_mod.apply_overrides(catalog_mod.DEFAULT_CATALOG, self.models)
        except (KeyError, TypeError) as exc:
            raise UsageError(f"bad model override in config: {exc}") from exc


def write_atomic(path: Path, data: str | bytes) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _out_dir(args, cfg: Config) -> Path:
    return Path(args.out or cfg.output_dir or ".")


def _read_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc


def _split_list(text: str | None) -> list[str]:
    return [s.strip() for s in (text or "").split(",") if s.strip()]


def _provider(args, cfg: Config):
    if args.offline:
        return MockProvider(failing=frozenset(args.mock_fail or ()))
    return OpenRouterClient.from_env(base_url=cfg.base_url)


# ingest ---------------------------------------------------------------------

def cmd_ingest(args, cfg: Config) -> int:
    mapping = ColumnMapping(args.case_column, args.activity_column, args.timestamp_column)
    event_log, report = load_event_log(Path(args.csv), mapping)
    out = _out_dir(args, cfg)
    stem = Path(args.csv).stem
    write_atomic(out / f"{stem}.log.csv", to_csv(event_log, mapping))
    write_atomic(out / f"{stem}.quality.json", report.to_json())
    log.info("ingested %d events in %d cases (%d issues)", event_log.n_events, len(event_log), len(report.issues))
    return EXIT_OK


# derive ---------------------------------------------------------------------

def cmd_derive(args, cfg: Config) -> int:
    model = STAGING_MODELS[args.model]
    rows = staging.load_measurements(Path(args.csv))
    if model is staging.CKD_OUTCOME:
        per_case = staging.ckd_outcome_events(rows, args.baseline_egfr, model)
        events = [ev for case in sorted(per_case) for ev in per_case[case]]
    else:
        events = staging.derive_state_events(rows, model, skip_missing=args.skip_missing)
    state_log = EventLog.from_events(e.to_event() for e in events)
    if not state_log.n_events:
        raise UsageError("no state events derived")
    out = Path(args.output) if args.output else _out_dir(args, cfg) / f"{Path(args.csv).stem}.{args.model}.csv"
    write_atomic(out, to_csv(state_log))
    log.info("derived %d state events for %d cases", state_log.n_events, len(state_log))
    return EXIT_OK


# discover -------------------------------------------------------------------

def cmd_discover(args, cfg: Config) -> int:
    event_log, _ = load_event_log(Path(args.log))
    out = _out_dir(args, cfg)
    algo = args.algorithm
    dot = None
    if algo == "dfg":
        dfg = discover_dfg(event_log)
        annotation = annotate_performance(dfg)
        doc = {**dfg.to_dict(), "bottlenecks": rank_bottlenecks(annotation).to_dict()}
        dot = dfg_to_dot(dfg, annotation)
    elif algo == "alpha":
        net = discover_alpha(event_log)
        doc = net.to_dict()
        dot = petri_to_dot(net)
    elif algo == "heuristics":
        threshold = 0.9 if args.threshold is None else args.threshold
        doc = discover_heuristics(event_log, dependency_threshold=threshold).to_dict()
    else:
        if not event_log.n_events:
            raise EmptyLog("cannot mine an empty log")
        tree = discover_inductive(event_log)
        doc = {"type": "process_tree", "text": str(tree), "tree": tree.to_dict(),
               "petri_net": tree_to_petri(tree).to_dict()}
    write_atomic(out / f"{algo}.json", dump_json(doc))
    if dot is not None:
        write_atomic(out / f"{algo}.dot", dot)
    return EXIT_OK


# report ---------------------------------------------------------------------

def _load_model(doc: dict) -> Any:
    kind = doc.get("type")
    if kind == "dfg":
        return DirectlyFollowsGraph.from_dict(doc)
    if kind == "petri_net":
        return PetriNet.from_dict(doc)
    if kind == "process_tree":
        return ProcessTree.from_dict(doc["tree"])
    if kind == "heuristics_net":
        return [tuple(e) for e in doc["accepted_edges"]]
    raise UsageError(f"unsupported model type {kind!r}")


def _report_values(model: Any, case_context: str, top_k: int) -> dict[str, str]:
    if isinstance(model, DirectlyFollowsGraph):
        annotation = annotate_performance(model)
        return prompts.analysis_values(model, annotation, rank_bottlenecks(annotation), case_context, top_k)
    relations = sorted(model_relations(model))
    counts = ", ".join(f"{v} {k}" for k, v in element_counts(model).items())
    return {
        "process_summary": f"Discovered model with {counts}; {len(relations)} directly-follows relations allowed.",
        "dfg_digest": "\n".join(f"- {a} -> {b}" for a, b in relations) or "(no relations)",
        "bottlenecks": "(no timing information in this model)",
        "case_context": case_context or "(none provided)",
    }


def cmd_report(args, cfg: Config) -> int:
    catalog = cfg.catalog()
    names = _split_list(args.models)
    try:
        specs = catalog_mod.select(names, catalog) if names else list(catalog)
    except KeyError as exc:
        raise UsageError(str(exc)) from exc
    template_path = args.template or cfg.templates.get("report")
    template = prompts.load_template(template_path)
    model = _load_model(_read_json(args.model_json))
    prompt = prompts.compose_prompt(template, _report_values(model, args.case_context, args.top_k))
    provider = _provider(args, cfg)  # raises AuthError before any request
    bundle = fan_out(specs, prompt, CallParams(), provider, max_parallel=cfg.max_parallel,
                     case_label=args.case_label)
    out = _out_dir(args, cfg)
    by_id = catalog_mod.catalog_index(catalog)
    for resp in bundle.responses:
        write_atomic(out / f"report_{by_id[resp.model_id].slug}.md", resp.text)
    write_atomic(out / "prompt.txt", prompt)
    write_atomic(out / "bundle.json", bundle.to_json())
    for model_id, reason in bundle.failures.items():
        log.warning("model %s failed: %s", model_id, reason)
    return EXIT_OK


# orchestrate ----------------------------------------------------------------

def cmd_orchestrate(args, cfg: Config) -> int:
    catalog = cfg.catalog()
    by_id = catalog_mod.catalog_index(catalog)
    bundles = []
    for path in args.bundles:
        data = _read_json(path)
        if not data or not data.get("responses"):
            raise UsageError(f"{path}: bundle has no reports")
        bundles.append(ReportBundle.from_dict(data))
    rubric = Rubric.from_dict(_read_json(args.rubric)) if args.rubric else DEFAULT_RUBRIC
    names = _split_list(args.evaluators)
    evaluators = catalog_mod.select(names, catalog) if names else list(catalog)
    excluded = set(cfg.evaluator_exclusions) | set(args.exclude_evaluator or ())
    provider = _provider(args, cfg)

    reports, scored, eval_responses = [], [], []
    report_pairs = []
    for bundle in bundles:
        reports.append(orchestrate(bundle, quorum=args.quorum, similarity=args.similarity))
        for resp in bundle.responses:
            report_pairs.append((resp, by_id[resp.model_id]))
            for evaluator in evaluators:
                calls: list = []
                scored.append(evaluate_report(resp, rubric, evaluator, provider,
                                              case_label=bundle.case_label, responses=calls))
                eval_responses += [(c, evaluator) for c in calls]
    summaries = aggregate_scores(scored, exclude_evaluators=excluded)
    ledger = record_all(report_pairs)
    ledger = ledger.merge(record_all(eval_responses, CostLedger(), kind="evaluation"))
    ledger = ledger.with_scores({m: s.mean for m, s in summaries.items()})

    out = _out_dir(args, cfg)
    write_atomic(out / "orchestrated.md", render_orchestrated_markdown(reports, summaries, ledger))
    write_atomic(out / "scores.json", dump_json({
        "rubric": rubric.to_dict(),
        "excluded_evaluators": sorted(excluded),
        "summary": {m: s.to_dict() for m, s in sorted(summaries.items())},
        "scores": [s.to_dict() for s in scored],
        "orchestration": [r.to_dict() for r in reports],
    }))
    write_atomic(out / "ledger.json", ledger.to_json())
    return EXIT_OK


# entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clinpm", description="Clinical process mining with multi-model reports.")
    parser.add_argument("--config", help="strict JSON config file")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and normalise an event-log CSV")
    p.add_argument("csv")
    p.add_argument("--case-column", default="case_id")
    p.add_argument("--activity-column", default="activity")
    p.add_argument("--timestamp-column", default="timestamp")
    p.add_argument("-o", "--out", help="output directory")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("derive", help="turn measurements into a state event log")
    p.add_argument("csv")
    p.add_argument("--model", required=True, choices=sorted(STAGING_MODELS))
    p.add_argument("--skip-missing", action="store_true", help="drop rows lacking the model's measurement")
    p.add_argument("--baseline-egfr", type=float, help="ckd only; default is each case's first eGFR")
    p.add_argument("--output", help="output CSV path")
    p.add_argument("-o", "--out", help="output directory")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("discover", help="discover a process model from an event-log CSV")
    p.add_argument("log")
    p.add_argument("--algorithm", required=True, choices=ALGORITHMS)
    p.add_argument("--threshold", type=float, help="heuristics dependency threshold in [0, 1) (default 0.9)")
    p.add_argument("-o", "--out", help="output directory")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("report", help="fan a report prompt out to several models")
    p.add_argument("model_json")
    p.add_argument("--models", help="comma-separated model ids or display names (default: all)")
    p.add_argument("--template", help="prompt template file")
    p.add_argument("--case-label", default="custom")
    p.add_argument("--case-context", default="")
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--offline", action="store_true", help="use the deterministic mock provider")
    p.add_argument("--mock-fail", action="append", help=argparse.SUPPRESS)
    p.add_argument("-o", "--out", help="output directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("orchestrate", help="synthesise, score and cost report bundles")
    p.add_argument("bundles", nargs="+")
    p.add_argument("--rubric", help="rubric JSON")
    p.add_argument("--evaluators", help="comma-separated evaluator models (default: all)")
    p.add_argument("--exclude-evaluator", action="append", help="drop an evaluator from aggregation")
    p.add_argument("--quorum", type=float, default=0.5)
    p.add_argument("--similarity", type=float, default=0.6, help="word-set Jaccard needed to merge two claims")
    p.add_argument("--offline", action="store_true")
    p.add_argument("--mock-fail", action="append", help=argparse.SUPPRESS)
    p.add_argument("-o", "--out", help="output directory")
    p.set_defaults(func=cmd_orchestrate)
    return parser


INPUT_ERRORS = (UsageError, EventLogError, staging.StagingError, EmptyLog, InsufficientReports, MissingSection,
                RubricError, EmptyGroup, EvaluatorFormatError, ContextOverflow, prompts.UnresolvedPlaceholder,
                FileNotFoundError, IsADirectoryError, KeyError, ValueError)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = Config.load(args.config)
        return args.func(args, cfg)
    except ContextOverflow as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except LlmError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_AUTH
    except INPUT_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to the internal-error exit code
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
