"""Weighted rubric, LLM-as-judge evaluation and score aggregation."""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from statistics import fmean
from typing import Iterable, Mapping, Sequence

from ..llm.catalog import ModelSpec
from ..llm.client import CallParams, LlmResponse, Provider, call_model
from ..llm.mock import SCORING_MARKER

WEIGHT_TOLERANCE = 1e-9
SCALE = (1, 4)


class RubricError(ValueError):
    pass


class EvaluatorFormatError(ValueError):
    pass


class EmptyGroup(ValueError):
    pass


@dataclass(frozen=True)
class Criterion:
    name: str
    weight: float
    description: str = ""


@dataclass(frozen=True)
class Rubric:
    criteria: tuple[Criterion, ...]
    scale: tuple[int, int] = SCALE

    def __post_init__(self):
        names = [c.name for c in self.criteria]
        if not names or len(set(names)) != len(names):
            raise RubricError("criteria must be non-empty with distinct names")
        if any(c.weight < 0 for c in self.criteria):
            raise RubricError("weights must be non-negative")
        total = math.fsum(c.weight for c in self.criteria)
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise RubricError(f"weights sum to {total!r}, expected 1.0")

    @property
    def weights(self) -> dict[str, float]:
        return {c.name: c.weight for c in self.criteria}

    def weighted_score(self, scores: Mapping[str, int]) -> float:
        lo, hi = self.scale
        missing = [c.name for c in self.criteria if c.name not in scores]
        if missing:
            raise RubricError(f"missing scores for {', '.join(missing)}")
        for name, s in scores.items():
            if name not in self.weights:
                raise RubricError(f"unknown criterion {name!r}")
            if isinstance(s, bool) or not isinstance(s, int) or not lo <= s <= hi:
                raise RubricError(f"score for {name!r} must be an integer in [{lo}, {hi}], got {s!r}")
        return math.fsum(self.weights[name] * scores[name] for name in self.weights)

    @classmethod
    def from_weights(cls, weights: Mapping[str, float], descriptions: Mapping[str, str] | None = None) -> "Rubric":
        """Build from raw (possibly unnormalised) weights; they are rescaled to sum to one."""
        total = math.fsum(weights.values())
        if total <= 0:
            raise RubricError("weights must have a positive sum")
        descriptions = descriptions or {}
        return cls(tuple(Criterion(n, w / total, descriptions.get(n, "")) for n, w in weights.items()))

    def to_dict(self) -> dict:
        return {"scale": list(self.scale),
                "criteria": [{"name": c.name, "weight": c.weight, "description": c.description}
                             for c in self.criteria]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Rubric":
        unknown = set(data) - {"criteria", "scale"}
        if unknown:
            raise RubricError(f"unknown rubric keys: {', '.join(sorted(unknown))}")
        crit = tuple(Criterion(c["name"], float(c["weight"]), c.get("description", "")) for c in data["criteria"])
        return cls(crit, tuple(data.get("scale", SCALE)))


DEFAULT_RUBRIC = Rubric((
    Criterion("Clinical Accuracy", 0.25, "Correctness of medical interpretations and terminology usage"),
    Criterion("Process Mining Understanding", 0.20, "Accurate interpretation of analytical results"),
    Criterion("Actionable Insights", 0.20, "Quality and feasibility of clinical recommendations"),
    Criterion("Statistical Interpretation", 0.15, "Correct analysis of quantitative findings"),
    Criterion("Report Structure & Clarity", 0.10, "Organization and readability"),
    Criterion("Evidence-Based Reasoning", 0.10, "Use of clinical evidence and literature"),
))


@dataclass(frozen=True)
class ScoredReport:
    report_model_id: str
    evaluator_model_id: str
    criterion_scores: dict[str, int]
    weighted_score: float
    rationale: str = ""
    case_label: str = ""

    @property
    def self_evaluation(self) -> bool:
        return self.report_model_id == self.evaluator_model_id

    @classmethod
    def build(cls, rubric: Rubric, report_model_id: str, evaluator_model_id: str,
              scores: Mapping[str, int], rationale: str = "", case_label: str = "") -> "ScoredReport":
        return cls(report_model_id, evaluator_model_id, dict(scores), rubric.weighted_score(scores),
                   rationale, case_label)

    def to_dict(self) -> dict:
        return {"case_label": self.case_label, "report_model_id": self.report_model_id,
                "evaluator_model_id": self.evaluator_model_id, "self_evaluation": self.self_evaluation,
                "criterion_scores": dict(self.criterion_scores), "weighted_score": self.weighted_score,
                "rationale": self.rationale}


def evaluation_prompt(report_text: str, rubric: Rubric) -> str:
    lo, hi = rubric.scale
    criteria = "\n".join(f"- {c.name} (weight {c.weight:.2f}): {c.description}" for c in rubric.criteria)
    example = json.dumps({"scores": {c.name: hi for c in rubric.criteria}, "rationale": "..."})
    return (
        "You are an expert reviewer of clinical process-mining reports.\n"
        f"Score the report below on each criterion with an integer from {lo} to {hi}.\n\n"
        f"Criteria:\n{criteria}\n\n"
        f"{SCORING_MARKER} and nothing else, shaped like:\n{example}\n\n"
        f"Report:\n<<<\n{report_text}\n>>>\n"
    )


_FENCE = re.compile(r"^```(?:json)?\s*\n(.*)\n```\s*$", re.S)


def parse_scores(text: str, rubric: Rubric) -> tuple[dict[str, int], str]:
    """Strict parse: a JSON object (optionally in one ```json fence) with integer scores in range."""
    body = text.strip()
    m = _FENCE.match(body)
    if m:
        body = m.group(1).strip()
    try:
        data = json.loads(body)
    except ValueError as exc:
        raise EvaluatorFormatError(f"evaluator output is not JSON: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("scores"), dict):
        raise EvaluatorFormatError("evaluator output lacks a 'scores' object")
    scores = data["scores"]
    try:
        rubric.weighted_score(scores)
    except RubricError as exc:
        raise EvaluatorFormatError(str(exc)) from exc
    rationale = data.get("rationale", "")
    return {c.name: scores[c.name] for c in rubric.criteria}, rationale if isinstance(rationale, str) else str(rationale)


def evaluate_report(report: LlmResponse, rubric: Rubric, evaluator: ModelSpec,
                    provider: Provider | None = None, params: CallParams | None = None,
                    case_label: str = "", responses: list | None = None) -> ScoredReport:
    """Ask ``evaluator`` to score ``report``; one retry on malformed output.

    The weighted score is always recomputed locally. Evaluator responses are
    appended to ``responses`` when given (for cost accounting).
    """
    params = params or CallParams(temperature=0.0)
    prompt = evaluation_prompt(report.text, rubric)
    last: EvaluatorFormatError | None = None
    for attempt in range(2):
        text = prompt if attempt == 0 else (
            prompt + f"\nYour previous answer was rejected ({last}). Return only the JSON object.\n")
        resp = call_model(evaluator, text, params, provider)
        if responses is not None:
            responses.append(resp)
        try:
            scores, rationale = parse_scores(resp.text, rubric)
        except EvaluatorFormatError as exc:
            last = exc
            continue
        return ScoredReport.build(rubric, report.model_id, evaluator.model_id, scores, rationale, case_label)
    raise EvaluatorFormatError(f"{evaluator.model_id} failed twice: {last}")


@dataclass(frozen=True)
class ScoreSummary:
    model_id: str
    mean: float
    min: float
    max: float
    n: int
    by_case: dict[str, float] = field(default_factory=dict)
    by_evaluator: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"model_id": self.model_id, "mean": self.mean, "min": self.min, "max": self.max, "n": self.n,
                "by_case": dict(self.by_case), "by_evaluator": dict(self.by_evaluator)}


def overall_mean(case_means: Iterable[float]) -> float:
    values = list(case_means)
    if not values:
        raise EmptyGroup("no case means")
    return fmean(values)


def aggregate_scores(scored: Sequence[ScoredReport], exclude_evaluators: Iterable[str] = (),
                     models: Iterable[str] | None = None) -> dict[str, ScoreSummary]:
    """Per report model: mean over cases of the per-case mean across evaluators.

    ``min``/``max`` span the individual weighted scores. Models listed in
    ``models`` that end up with no scores raise :class:`EmptyGroup`.
    """
    excluded = set(exclude_evaluators)
    groups: dict[str, list[ScoredReport]] = {m: [] for m in (models or ())}
    for s in scored:
        if s.evaluator_model_id in excluded:
            continue
        groups.setdefault(s.report_model_id, []).append(s)
    out = {}
    for model, items in groups.items():
        if not items:
            raise EmptyGroup(f"no scores left for {model!r}")
        by_case: dict[str, list[float]] = {}
        by_eval: dict[str, list[float]] = {}
        for s in items:
            by_case.setdefault(s.case_label, []).append(s.weighted_score)
            by_eval.setdefault(s.evaluator_model_id, []).append(s.weighted_score)
        case_means = {c: fmean(v) for c, v in by_case.items()}
        values = [s.weighted_score for s in items]
        out[model] = ScoreSummary(model, overall_mean(case_means.values()), min(values), max(values), len(items),
                                  case_means, {e: fmean(v) for e, v in by_eval.items()})
    return out
