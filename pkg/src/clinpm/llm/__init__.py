"""Prompt composition, chat-completion calls and multi-model fan-out."""
from .catalog import DEFAULT_CATALOG, ModelSpec, catalog_index, select
from .client import (
    AllModelsFailed,
    AuthError,
    CallParams,
    ContextOverflow,
    LlmError,
    LlmResponse,
    MalformedResponse,
    OpenRouterClient,
    RateLimited,
    ReportBundle,
    TransportError,
    call_model,
    estimate_tokens,
    fan_out,
)
from .mock import MockProvider
from .prompts import PromptTemplate, UnresolvedPlaceholder, analysis_values, compose_prompt, load_template

__all__ = [
    "AllModelsFailed", "AuthError", "CallParams", "ContextOverflow", "DEFAULT_CATALOG", "LlmError",
    "LlmResponse", "MalformedResponse", "MockProvider", "ModelSpec", "OpenRouterClient", "PromptTemplate",
    "RateLimited", "ReportBundle", "TransportError", "UnresolvedPlaceholder", "analysis_values",
    "call_model", "catalog_index", "compose_prompt", "estimate_tokens", "fan_out", "load_template", "select",
]
