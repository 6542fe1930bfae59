"""Deterministic offline provider.

Reports are assembled from the transition lines found in the prompt, so
different models agree on the dominant pathway, partly overlap on the rest
and each add one remark of their own. Everything is seeded from the SHA-256
of (model id, prompt); usage is (ceil(len(prompt) / 4), 1200).
"""
from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field

from .catalog import ModelSpec
from .client import CallParams, LlmResponse, TransportError, estimate_tokens

MOCK_OUTPUT_TOKENS = 1200
SCORING_MARKER = "Respond with a single JSON object"

_EDGE = re.compile(r"^- (.+?) \(([\d.]+)%\) -> (.+?) \(([\d.]+)%\): (\d+) transitions(?:, mean ([\d.]+) h)?$", re.M)
_CRITERION = re.compile(r"^- (.+?) \(weight [\d.]+\):", re.M)

_FOCUS = ("monitoring", "escalation", "documentation", "staffing", "triage", "follow-up")


def _rng(model_id: str, prompt: str) -> random.Random:
    seed = hashlib.sha256(f"{model_id}\x00{prompt}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(seed[:8], "big"))


@dataclass
class MockProvider:
    """Offline stand-in for :class:`OpenRouterClient`; ``failing`` model ids raise a transport error."""

    failing: frozenset[str] = field(default_factory=frozenset)

    def complete(self, spec: ModelSpec, prompt: str, params: CallParams) -> LlmResponse:
        if spec.model_id in self.failing:
            raise TransportError(f"mock failure injected for {spec.model_id}")
        rng = _rng(spec.model_id, prompt)
        if SCORING_MARKER in prompt:
            text = self._scores(prompt, rng)
        else:
            text = self._report(spec, prompt, rng)
        return LlmResponse(spec.model_id, text, estimate_tokens(prompt), MOCK_OUTPUT_TOKENS, 0.0, "stop")

    @staticmethod
    def _scores(prompt: str, rng: random.Random) -> str:
        criteria = _CRITERION.findall(prompt)
        scores = {c: rng.choice((3, 3, 4, 4, 4, 2)) for c in criteria}
        return json.dumps({"scores": scores, "rationale": "Deterministic offline evaluation."})

    @staticmethod
    def _report(spec: ModelSpec, prompt: str, rng: random.Random) -> str:
        edges = _EDGE.findall(prompt)
        findings: list[str] = []
        stats: list[str] = []
        if edges:
            src, src_cov, dst, _, freq, _ = edges[0]
            n = int(freq)
            if rng.random() < 0.2:
                n += rng.choice((-1, 1)) * max(1, n // 10)
            findings.append(f"The dominant pathway runs from {src} to {dst} with {n} transitions.")
            findings.append(f"{src} is visited in {src_cov}% of cases.")
            for a, _, b, _, f, _ in edges[1:]:
                if rng.random() < 0.5:
                    findings.append(f"Patients also move from {a} to {b} in {f} observed transitions.")
            timed = [e for e in edges if e[5]]
            if timed:
                slow = max(timed, key=lambda e: (float(e[5]), e[0], e[2]))
                stats.append(f"The slowest frequent step is {slow[0]} to {slow[2]} averaging {slow[5]} hours.")
        else:
            findings.append("The process map shows a single dominant pathway.")
        focus = rng.choice(_FOCUS)
        strengths = spec.strengths_note.lower().replace(",", "") or spec.display_name.lower()
        findings.append(f"{strengths.capitalize()} highlights {focus} opportunities for {spec.display_name}.")
        stats.append(f"Transition counts cover {len(edges)} listed pathways.")
        return "\n".join([
            f"# Process report ({spec.display_name})",
            "",
            "## Findings",
            *(f"- {s}" for s in findings),
            "",
            "## Statistics",
            *(f"- {s}" for s in stats),
            "",
            "## Recommendations",
            f"- Review {focus} along the dominant pathway.",
            "",
            "## Limitations",
            "- Generated offline; not a clinical interpretation.",
            "",
        ])
