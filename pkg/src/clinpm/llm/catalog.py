from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping


@dataclass(frozen=True)
class ModelSpec:
    model_id: str
    display_name: str
    context_window: int
    input_price: float  # currency per 1,000,000 input tokens
    output_price: float  # currency per 1,000,000 output tokens
    strengths_note: str = ""

    def __post_init__(self):
        if self.input_price < 0 or self.output_price < 0:
            raise ValueError("prices must be non-negative")
        if self.context_window <= 0:
            raise ValueError("context_window must be positive")

    @property
    def slug(self) -> str:
        return self.model_id.replace("/", "__")

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "display_name": self.display_name,
            "context_window": self.context_window,
            "input_price": self.input_price,
            "output_price": self.output_price,
            "strengths_note": self.strengths_note,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ModelSpec":
        return cls(**{k: data[k] for k in ("model_id", "display_name", "context_window",
                                           "input_price", "output_price") },
                   strengths_note=data.get("strengths_note", ""))


CLAUDE_SONNET_4 = ModelSpec("anthropic/claude-sonnet-4", "Claude Sonnet-4", 200_000, 3.00, 15.00,
                            "Clinical reasoning, guideline interpretation")
GPT_4_1 = ModelSpec("openai/gpt-4.1", "GPT-4.1", 128_000, 10.00, 30.00,
                    "Broad medical knowledge, consistency")
GEMINI_2_5_PRO = ModelSpec("google/gemini-2.5-pro", "Gemini 2.5 Pro", 1_000_000, 1.25, 5.00,
                           "Large context, comprehensive analysis")
DEEPSEEK_R1 = ModelSpec("deepseek/deepseek-r1", "DeepSeek R1", 64_000, 0.55, 2.19,
                        "Technical precision, quantitative analysis")
GROK_4 = ModelSpec("x-ai/grok-4", "Grok-4", 128_000, 5.00, 15.00,
                   "Creative insights, patient perspectives")

DEFAULT_CATALOG: tuple[ModelSpec, ...] = (CLAUDE_SONNET_4, GPT_4_1, GEMINI_2_5_PRO, DEEPSEEK_R1, GROK_4)


def catalog_index(catalog: Iterable[ModelSpec] = DEFAULT_CATALOG) -> dict[str, ModelSpec]:
    return {m.model_id: m for m in catalog}


def apply_overrides(catalog: Iterable[ModelSpec], overrides: Iterable[Mapping]) -> tuple[ModelSpec, ...]:
    """Replace fields of existing entries by model_id, or append new entries."""
    specs = list(catalog)
    index = {m.model_id: i for i, m in enumerate(specs)}
    for item in overrides:
        mid = item["model_id"]
        if mid in index:
            specs[index[mid]] = replace(specs[index[mid]], **{k: v for k, v in item.items() if k != "model_id"})
        else:
            specs.append(ModelSpec.from_dict(item))
            index[mid] = len(specs) - 1
    return tuple(specs)


def select(names: Iterable[str], catalog: Iterable[ModelSpec] = DEFAULT_CATALOG) -> list[ModelSpec]:
    """Pick catalog entries by model id or display name, keeping catalog order."""
    wanted = [n.strip() for n in names if n.strip()]
    specs = list(catalog)
    picked = []
    for n in wanted:
        match = [m for m in specs if n in (m.model_id, m.display_name)]
        if not match:
            raise KeyError(f"unknown model {n!r}")
        picked.append(match[0])
    order = {m.model_id: i for i, m in enumerate(specs)}
    return sorted({m.model_id: m for m in picked}.values(), key=lambda m: order[m.model_id])
