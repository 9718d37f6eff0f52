"""Completion providers: scripted/policy mocks and HTTP chat endpoints.

Credentials are read from the environment: ``OPENAI_API_KEY`` for
OpenAI-compatible endpoints and ``ANTHROPIC_API_KEY`` for Anthropic-compatible
ones (override the variable name with ``ProviderConfig.credential_env``).
"""

from __future__ import annotations

import enum
import logging
import os
import re
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import httpx

log = logging.getLogger(__name__)

GREEDY_SJF = "greedy-sjf-text"
MOCK_POLICIES = (GREEDY_SJF,)

DEFAULT_ENDPOINTS = {
    "openai": "https://api.openai.com/v1",
    "anthropic": "https://api.anthropic.com",
}
DEFAULT_CREDENTIAL_ENV = {"openai": "OPENAI_API_KEY", "anthropic": "ANTHROPIC_API_KEY"}
ANTHROPIC_VERSION = "2023-06-01"


class ProviderError(RuntimeError):
    """A hard provider failure; the run aborts rather than inventing an action."""


class ScriptExhausted(ProviderError):
    pass


class ProviderKind(str, enum.Enum):
    MOCK = "mock"
    OPENAI = "openai"
    ANTHROPIC = "anthropic"


@dataclass(frozen=True)
class ProviderConfig:
    provider_kind: ProviderKind = ProviderKind.MOCK
    model_name: str = GREEDY_SJF
    temperature: Optional[float] = None
    max_output_tokens: int = 5000
    reasoning_effort: Optional[str] = None
    endpoint: Optional[str] = None
    credential_env: Optional[str] = None
    script: Optional[tuple] = None
    timeout: float = 600.0
    max_retries: int = 3

    def __post_init__(self):
        object.__setattr__(self, "provider_kind", ProviderKind(self.provider_kind))
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")
        if self.temperature is not None and not 0 <= self.temperature <= 2:
            raise ValueError("temperature must lie in [0, 2]")
        if self.script is not None:
            object.__setattr__(self, "script", tuple(self.script))

    def to_dict(self) -> dict:
        # never echoes a credential value, only the variable name
        return {
            "provider_kind": self.provider_kind.value,
            "model_name": self.model_name,
            "temperature": self.temperature,
            "max_output_tokens": self.max_output_tokens,
            "reasoning_effort": self.reasoning_effort,
            "endpoint": self.endpoint,
            "credential_env": self.credential_env,
            "scripted": self.script is not None,
        }


@dataclass
class CompletionResult:
    text: str
    latency: float
    prompt_tokens: Optional[int] = None
    completion_tokens: Optional[int] = None
    status: str = "success"
    attempts: int = 1


class Provider:
    """Base class; subclasses implement :meth:`_complete`."""

    def complete(self, prompt: str) -> CompletionResult:
        t0 = time.perf_counter()
        result = self._complete(prompt)
        result.latency = time.perf_counter() - t0
        return result

    def _complete(self, prompt: str) -> CompletionResult:
        raise NotImplementedError


class ScriptedProvider(Provider):
    """Replays a fixed list of responses verbatim."""

    def __init__(self, script: Sequence[str]):
        if not script:
            raise ValueError("script must be non-empty")
        self.script = list(script)
        self.position = 0

    def _complete(self, prompt):
        if self.position >= len(self.script):
            raise ScriptExhausted(f"mock script exhausted after {len(self.script)} responses")
        text = self.script[self.position]
        self.position += 1
        return CompletionResult(text=text, latency=0.0)


_WAITING_LINE = re.compile(
    r"^- Job (\d+): user=\S+, (\d+) Nodes, (\d+) GB, walltime=(\d+)", re.MULTILINE
)


def _section(prompt, start, end):
    i = prompt.index(start)
    j = prompt.index(end, i)
    return prompt[i:j]


class GreedySJFProvider(Provider):
    """Answers from the prompt alone with greedy shortest-job-first decisions.

    Starts the shortest fitting waiting job (ties by job id); otherwise delays
    while anything runs; stops once nothing is waiting.
    """

    def _complete(self, prompt):
        nodes = int(re.search(r"^Available Nodes: (\d+)", prompt, re.MULTILINE).group(1))
        memory = int(re.search(r"^Available Memory: (\d+) GB", prompt, re.MULTILINE).group(1))
        running = _section(prompt, "Running Jobs:", "Completed Jobs:")
        waiting_block = _section(prompt, "Waiting Jobs", "Fairness indicators")
        waiting = [tuple(map(int, m.groups())) for m in _WAITING_LINE.finditer(waiting_block)]
        if not waiting:
            return CompletionResult("Thought: nothing is left in the queue.\nAction: Stop", 0.0)
        for jid, n, m, wall in sorted(waiting, key=lambda w: (w[3], w[0])):
            if n <= nodes and m <= memory:
                text = (
                    f"Thought: shortest fitting job is {jid} (walltime {wall}, {n} nodes, {m} GB).\n"
                    f"Action: StartJob(job_id={jid})"
                )
                return CompletionResult(text, 0.0)
        if "- Job" in running:
            return CompletionResult("Thought: no waiting job fits; wait for a completion.\nAction: Delay", 0.0)
        return CompletionResult("Thought: queue empty.\nAction: Stop", 0.0)


def mock_provider(script=None, policy: Optional[str] = None) -> Provider:
    if policy is not None:
        if policy not in MOCK_POLICIES:
            raise ValueError(f"unknown mock policy {policy!r}; choose from {MOCK_POLICIES}")
        return GreedySJFProvider()
    if not script:
        raise ValueError("mock provider needs a non-empty script or a policy name")
    return ScriptedProvider(script)


class HTTPProvider(Provider):
    """Shared request/retry logic for chat-style HTTP endpoints."""

    kind = ""

    def __init__(
        self,
        config: ProviderConfig,
        client: Optional[httpx.Client] = None,
        sleep: Callable[[float], None] = time.sleep,
        backoff: float = 1.0,
    ):
        self.config = config
        self.endpoint = (config.endpoint or DEFAULT_ENDPOINTS[self.kind]).rstrip("/")
        env = config.credential_env or DEFAULT_CREDENTIAL_ENV[self.kind]
        self.api_key = os.environ.get(env)
        self.credential_env = env
        self.client = client or httpx.Client(timeout=config.timeout)
        self.sleep = sleep
        self.backoff = backoff

    def _complete(self, prompt):
        if not self.api_key:
            raise ProviderError(f"missing credential: set ${self.credential_env}")
        url, headers, body = self.request(prompt)
        attempts = 0
        last = None
        while attempts <= self.config.max_retries:
            attempts += 1
            try:
                resp = self.client.post(url, headers=headers, json=body)
            except httpx.TransportError as exc:
                last = f"transport error: {exc!r}"
            else:
                if resp.status_code in (401, 403):
                    raise ProviderError(f"authentication failed ({resp.status_code}): {resp.text[:200]}")
                if resp.status_code == 429 or resp.status_code >= 500:
                    last = f"HTTP {resp.status_code}: {resp.text[:200]}"
                elif resp.status_code >= 400:
                    raise ProviderError(f"request rejected ({resp.status_code}): {resp.text[:200]}")
                else:
                    result = self.parse(resp.json())
                    result.attempts = attempts
                    if not result.text.strip():
                        raise ProviderError("provider returned an empty completion")
                    return result
            if attempts <= self.config.max_retries:
                delay = self.backoff * 2 ** (attempts - 1)
                log.warning("%s call failed (%s); retrying in %.1fs", self.kind, last, delay)
                self.sleep(delay)
        raise ProviderError(f"{self.kind} provider failed after {attempts} attempts: {last}")

    def request(self, prompt):
        raise NotImplementedError

    def parse(self, payload) -> CompletionResult:
        raise NotImplementedError


class OpenAICompatibleProvider(HTTPProvider):
    kind = "openai"

    def request(self, prompt):
        cfg = self.config
        body = {"model": cfg.model_name, "messages": [{"role": "user", "content": prompt}]}
        if cfg.reasoning_effort:
            body["reasoning_effort"] = cfg.reasoning_effort
            body["max_completion_tokens"] = cfg.max_output_tokens
        else:
            body["max_tokens"] = cfg.max_output_tokens
        if cfg.temperature is not None:
            body["temperature"] = cfg.temperature
        headers = {"Authorization": f"Bearer {self.api_key}"}
        return f"{self.endpoint}/chat/completions", headers, body

    def parse(self, payload):
        try:
            text = payload["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"unexpected response shape: {exc!r}") from exc
        usage = payload.get("usage") or {}
        return CompletionResult(
            text=text,
            latency=0.0,
            prompt_tokens=usage.get("prompt_tokens"),
            completion_tokens=usage.get("completion_tokens"),
        )


class AnthropicCompatibleProvider(HTTPProvider):
    kind = "anthropic"

    def request(self, prompt):
        cfg = self.config
        body = {
            "model": cfg.model_name,
            "max_tokens": cfg.max_output_tokens,
            "messages": [{"role": "user", "content": prompt}],
        }
        if cfg.temperature is not None:
            body["temperature"] = cfg.temperature
        headers = {"x-api-key": self.api_key, "anthropic-version": ANTHROPIC_VERSION}
        return f"{self.endpoint}/v1/messages", headers, body

    def parse(self, payload):
        try:
            blocks = payload["content"]
            text = "".join(b.get("text", "") for b in blocks if b.get("type") == "text")
        except (KeyError, TypeError, AttributeError) as exc:
            raise ProviderError(f"unexpected response shape: {exc!r}") from exc
        usage = payload.get("usage") or {}
        return CompletionResult(
            text=text,
            latency=0.0,
            prompt_tokens=usage.get("input_tokens"),
            completion_tokens=usage.get("output_tokens"),
        )


def make_provider(config: ProviderConfig, **kwargs) -> Provider:
    """Build a fresh provider for one run."""
    if config.provider_kind is ProviderKind.MOCK:
        if config.script:
            return ScriptedProvider(config.script)
        return mock_provider(policy=config.model_name)
    if config.provider_kind is ProviderKind.OPENAI:
        return OpenAICompatibleProvider(config, **kwargs)
    return AnthropicCompatibleProvider(config, **kwargs)


def complete(provider: Provider, prompt: str) -> CompletionResult:
    return provider.complete(prompt)
