"""Chat-completions client (OpenRouter wire format), bounded fan-out and report bundles."""
from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol, Sequence

import httpx

from .catalog import ModelSpec
from .prompts import prompt_digest

log = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://openrouter.ai/api/v1"
API_KEY_ENV = "OPENROUTER_API_KEY"
MAX_ATTEMPTS = 3
BACKOFF_SECONDS = (1.0, 2.0, 4.0)
DEFAULT_PARALLELISM = 5


class LlmError(RuntimeError):
    pass


class AuthError(LlmError):
    pass


class RateLimited(LlmError):
    pass


class ContextOverflow(LlmError):
    pass


class TransportError(LlmError):
    pass


class MalformedResponse(LlmError):
    pass


class AllModelsFailed(LlmError):
    def __init__(self, failures: Mapping[str, str]):
        super().__init__("every model call failed: " + "; ".join(f"{k}: {v}" for k, v in failures.items()))
        self.failures = dict(failures)


@dataclass(frozen=True)
class CallParams:
    temperature: float = 0.2
    max_tokens: int = 2048
    timeout: float = 120.0


@dataclass(frozen=True)
class LlmResponse:
    model_id: str
    text: str
    input_tokens: int
    output_tokens: int
    latency: float = 0.0
    finish_reason: str = "stop"

    def __post_init__(self):
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValueError("token counts must be non-negative")

    def to_dict(self) -> dict:
        return {"model_id": self.model_id, "text": self.text, "input_tokens": self.input_tokens,
                "output_tokens": self.output_tokens, "latency": self.latency,
                "finish_reason": self.finish_reason}

    @classmethod
    def from_dict(cls, data: Mapping) -> "LlmResponse":
        return cls(data["model_id"], data["text"], int(data["input_tokens"]), int(data["output_tokens"]),
                   float(data.get("latency", 0.0)), data.get("finish_reason", "stop"))


def estimate_tokens(text: str) -> int:
    """Rough guard estimate: one token per four characters, rounded up."""
    return math.ceil(len(text) / 4)


class Provider(Protocol):
    def complete(self, spec: ModelSpec, prompt: str, params: CallParams) -> LlmResponse: ...


class OpenRouterClient:
    """Synchronous client for an OpenAI-compatible ``/chat/completions`` endpoint.

    Retries 429, 5xx and transport failures with 1 s / 2 s back-off, at most
    three attempts in total.
    """

    def __init__(self, api_key: str, base_url: str = DEFAULT_BASE_URL,
                 transport: httpx.BaseTransport | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        if not api_key:
            raise AuthError(f"no API key; set {API_KEY_ENV}")
        self.api_key = api_key
        self.base_url = base_url.rstrip("/")
        self._transport = transport
        self._sleep = sleep

    @classmethod
    def from_env(cls, base_url: str = DEFAULT_BASE_URL, **kwargs) -> "OpenRouterClient":
        return cls(os.environ.get(API_KEY_ENV, ""), base_url, **kwargs)

    def request_body(self, spec: ModelSpec, prompt: str, params: CallParams) -> dict:
        return {
            "model": spec.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        }

    def complete(self, spec: ModelSpec, prompt: str, params: CallParams) -> LlmResponse:
        body = self.request_body(spec, prompt, params)
        headers = {"Authorization": f"Bearer {self.api_key}", "Content-Type": "application/json"}
        last_error: LlmError | None = None
        with httpx.Client(transport=self._transport, timeout=params.timeout) as http:
            for attempt in range(MAX_ATTEMPTS):
                if attempt:
                    self._sleep(BACKOFF_SECONDS[attempt - 1])
                started = time.monotonic()
                try:
                    resp = http.post(f"{self.base_url}/chat/completions", json=body, headers=headers)
                except httpx.HTTPError as exc:
                    last_error = TransportError(f"{type(exc).__name__}: {exc}")
                    log.warning("transport error calling %s (attempt %d): %s", spec.model_id, attempt + 1, exc)
                    continue
                latency = time.monotonic() - started
                if resp.status_code in (401, 403):
                    raise AuthError(f"HTTP {resp.status_code} from provider")
                if resp.status_code == 429:
                    last_error = RateLimited("HTTP 429 after retries")
                    continue
                if resp.status_code >= 500:
                    last_error = TransportError(f"HTTP {resp.status_code}")
                    continue
                if resp.status_code >= 400:
                    raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                return parse_completion(spec.model_id, resp.content, latency)
        assert last_error is not None
        raise last_error


def parse_completion(model_id: str, raw: bytes | str, latency: float = 0.0) -> LlmResponse:
    try:
        data = json.loads(raw)
        choice = data["choices"][0]
        text = choice["message"]["content"]
        usage = data["usage"]
        prompt_tokens, completion_tokens = int(usage["prompt_tokens"]), int(usage["completion_tokens"])
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse(f"cannot read completion: {exc!r}") from exc
    if not isinstance(text, str) or not text.strip():
        raise MalformedResponse("empty completion content")
    return LlmResponse(data.get("model", model_id) or model_id, text, prompt_tokens, completion_tokens,
                       latency, choice.get("finish_reason") or "stop")


def call_model(spec: ModelSpec, prompt: str, params: CallParams | None = None,
               provider: Provider | None = None) -> LlmResponse:
    """One completion; the context-window guard runs before any provider is touched."""
    params = params or CallParams()
    estimate = estimate_tokens(prompt)
    if estimate > spec.context_window:
        raise ContextOverflow(f"prompt ~{estimate} tokens exceeds {spec.display_name} window {spec.context_window}")
    provider = provider or OpenRouterClient.from_env()
    response = provider.complete(spec, prompt, params)
    if response.model_id != spec.model_id:
        # providers may echo a dated variant of the id; bundles key on the catalog id
        response = LlmResponse(spec.model_id, response.text, response.input_tokens, response.output_tokens,
                               response.latency, response.finish_reason)
    return response


@dataclass(frozen=True)
class ReportBundle:
    case_label: str
    responses: tuple[LlmResponse, ...]
    prompt_digest: str
    failures: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        ids = [r.model_id for r in self.responses]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate model ids in bundle")

    @property
    def model_ids(self) -> list[str]:
        return [r.model_id for r in self.responses]

    def to_dict(self) -> dict:
        return {"case_label": self.case_label, "prompt_digest": self.prompt_digest,
                "responses": [r.to_dict() for r in self.responses], "failures": dict(self.failures)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping) -> "ReportBundle":
        return cls(data["case_label"], tuple(LlmResponse.from_dict(r) for r in data["responses"]),
                   data["prompt_digest"], dict(data.get("failures", {})))


def fan_out(specs: Sequence[ModelSpec], prompt: str, params: CallParams | None = None,
            provider: Provider | None = None, max_parallel: int = DEFAULT_PARALLELISM,
            case_label: str = "custom") -> ReportBundle:
    """Call every model with at most ``max_parallel`` requests in flight.

    Responses keep the order of ``specs``; a failing model is recorded in
    ``failures`` and does not stop the others.
    """
    if not specs:
        raise ValueError("no models given")
    if len({s.model_id for s in specs}) != len(specs):
        raise ValueError("model ids must be distinct")
    params = params or CallParams()
    if provider is None:
        provider = OpenRouterClient.from_env()

    def run(spec: ModelSpec):
        try:
            return call_model(spec, prompt, params, provider)
        except LlmError as exc:
            return exc

    with ThreadPoolExecutor(max_workers=max(1, max_parallel)) as pool:
        results = list(pool.map(run, specs))
    responses, failures = [], {}
    for spec, res in zip(specs, results):
        if isinstance(res, LlmResponse):
            responses.append(res)
        else:
            failures[spec.model_id] = f"{type(res).__name__}: {res}"
    if not responses:
        raise AllModelsFailed(failures)
    return ReportBundle(case_label, tuple(responses), prompt_digest(prompt), failures)
