"""Provider-agnostic chat-completion gateway with record/replay.

Four providers: two HTTP wire formats (openai-style and gemini-style),
a deterministic scripted mock, and a cassette replayer. A cassette is
newline-delimited JSON, one record per request, keyed by a canonical
hash of (model_id, messages); replay is exact-match and offline.
Recording is first-wins per key: if an identical request repeats, only
the first response is stored, and replay will serve it to both.

The mock performs no network activity whatsoever: its token counts are
a deterministic function of the message texts and its latency is zero,
so recorded mock sessions replay byte-identically.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional, Sequence


class GatewayError(Exception):
    """Base class for completion failures."""


class TransportError(GatewayError):
    pass


class ProviderError(GatewayError):
    def __init__(self, message: str, status: Optional[int] = None):
        super().__init__(message)
        self.status = status


class BudgetExceededError(GatewayError):
    pass


class CassetteError(GatewayError):
    pass


class CassetteParseError(CassetteError):
    pass


class DuplicateRequestKeyError(CassetteError):
    pass


class ReplayMissError(CassetteError):
    def __init__(self, key: str):
        super().__init__(f"no cassette record for request key {key}")
        self.key = key


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    content: str


@dataclass(frozen=True)
class Usage:
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __add__(self, other: "Usage") -> "Usage":
        return Usage(
            self.prompt_tokens + other.prompt_tokens,
            self.completion_tokens + other.completion_tokens,
        )

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens


@dataclass(frozen=True)
class CompletionResult:
    text: str
    usage: Usage
    latency: float


PROVIDERS = ("openai", "gemini", "mock", "replay")
TRANSIENT_STATUSES = {429, 500, 502, 503, 504}


@dataclass(frozen=True)
class ModelConfig:
    provider: str = "mock"
    model_id: str = "mock-model"
    endpoint: str = ""
    temperature: float = 1.0
    max_output_tokens: int = 1024
    timeout: float = 60.0
    retries: int = 3
    api_key_env: Optional[str] = None  # env var NAME; secrets never live in config
    script: "tuple[str, ...]" = ()  # mock provider responses, in order
    cassette: Optional[str] = None  # replay source
    record_to: Optional[str] = None  # cassette to append records to
    max_calls: Optional[int] = None
    max_total_tokens: Optional[int] = None

    def __post_init__(self) -> None:
        if self.provider not in PROVIDERS:
            raise ValueError(f"unknown provider {self.provider!r} (valid: {PROVIDERS})")


def canonical_request_key(model_id: str, messages: Sequence[ChatMessage]) -> str:
    payload = json.dumps(
        {"model": model_id, "messages": [[m.role, m.content] for m in messages]},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def load_cassette(path: str) -> "dict[str, dict]":
    records: dict[str, dict] = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CassetteParseError(f"{path}:{lineno}: not valid JSON ({exc})") from exc
        key = record.get("key")
        if not isinstance(key, str) or "request" not in record or "response" not in record:
            raise CassetteParseError(f"{path}:{lineno}: missing key/request/response fields")
        if key in records:
            raise DuplicateRequestKeyError(f"{path}:{lineno}: duplicate request key {key}")
        records[key] = record
    return records


# transport(url, headers, payload, timeout) -> (status_code, response_body)
Transport = Callable[[str, dict, dict, float], "tuple[int, dict]"]


def _requests_transport(url: str, headers: dict, payload: dict, timeout: float):
    import requests

    try:
        response = requests.post(url, headers=headers, json=payload, timeout=timeout)
    except requests.RequestException as exc:
        raise TransportError(str(exc)) from exc
    try:
        body = response.json()
    except ValueError:
        body = {"raw": response.text}
    return response.status_code, body


def _mock_usage(messages: Sequence[ChatMessage], text: str) -> Usage:
    return Usage(
        prompt_tokens=sum(len(m.content.split()) for m in messages),
        completion_tokens=len(text.split()),
    )


class Gateway:
    """A stateful completion client for one ModelConfig.

    Owns the mock script cursor, the replay cassette, the recording
    stream, and the usage/budget accounting.
    """

    def __init__(
        self,
        cfg: ModelConfig,
        transport: Optional[Transport] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.cfg = cfg
        self._transport = transport or _requests_transport
        self._sleep = sleep
        self._script_cursor = 0
        self._cassette: Optional[dict[str, dict]] = None
        self._recorded_keys: set[str] = set()
        if cfg.record_to and Path(cfg.record_to).exists():
            self._recorded_keys = set(load_cassette(cfg.record_to))
        self.calls = 0
        self.totals = Usage()

    def complete(self, messages: Sequence[ChatMessage]) -> CompletionResult:
        self._check_budget()
        dispatch = {
            "mock": self._complete_mock,
            "replay": self._complete_replay,
            "openai": self._complete_openai,
            "gemini": self._complete_gemini,
        }[self.cfg.provider]
        result = dispatch(tuple(messages))
        self.calls += 1
        self.totals = self.totals + result.usage
        if self.cfg.record_to:
            self._record(messages, result)
        return result

    def _check_budget(self) -> None:
        if self.cfg.max_calls is not None and self.calls >= self.cfg.max_calls:
            raise BudgetExceededError(f"call budget of {self.cfg.max_calls} spent")
        if (
            self.cfg.max_total_tokens is not None
            and self.totals.total_tokens >= self.cfg.max_total_tokens
        ):
            raise BudgetExceededError(
                f"token budget of {self.cfg.max_total_tokens} spent "
                f"({self.totals.total_tokens} used)"
            )

    # --- providers ---------------------------------------------------------

    def _complete_mock(self, messages: "tuple[ChatMessage, ...]") -> CompletionResult:
        if self._script_cursor >= len(self.cfg.script):
            raise ProviderError(
                f"mock script exhausted after {self._script_cursor} response(s)"
            )
        text = self.cfg.script[self._script_cursor]
        self._script_cursor += 1
        return CompletionResult(text, _mock_usage(messages, text), latency=0.0)

    def _complete_replay(self, messages: "tuple[ChatMessage, ...]") -> CompletionResult:
        if self._cassette is None:
            if not self.cfg.cassette:
                raise ProviderError("replay provider needs a cassette path")
            self._cassette = load_cassette(self.cfg.cassette)
        key = canonical_request_key(self.cfg.model_id, messages)
        record = self._cassette.get(key)
        if record is None:
            raise ReplayMissError(key)
        response = record["response"]
        return CompletionResult(
            text=response["text"],
            usage=Usage(response["prompt_tokens"], response["completion_tokens"]),
            latency=response["latency"],
        )

    def _api_key(self) -> Optional[str]:
        if not self.cfg.api_key_env:
            return None
        import os

        key = os.environ.get(self.cfg.api_key_env)
        if not key:
            raise ProviderError(
                f"api key environment variable {self.cfg.api_key_env} is not set"
            )
        return key

    def _http(self, url: str, headers: dict, payload: dict) -> dict:
        attempts = max(1, self.cfg.retries)
        last_error: Optional[GatewayError] = None
        for attempt in range(attempts):
            if attempt:
                self._sleep(0.5 * 2 ** (attempt - 1))
            try:
                status, body = self._transport(url, headers, payload, self.cfg.timeout)
            except TransportError as exc:
                last_error = exc
                continue
            if status == 200:
                return body
            error = ProviderError(f"provider returned status {status}: {body}", status)
            if status not in TRANSIENT_STATUSES:
                raise error
            last_error = error
        assert last_error is not None
        raise last_error

    def _complete_openai(self, messages: "tuple[ChatMessage, ...]") -> CompletionResult:
        headers = {"Content-Type": "application/json"}
        key = self._api_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        payload = {
            "model": self.cfg.model_id,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_output_tokens,
        }
        started = time.monotonic()
        body = self._http(self.cfg.endpoint, headers, payload)
        latency = time.monotonic() - started
        try:
            text = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed openai-style response: {body}") from exc
        usage = body.get("usage", {})
        return CompletionResult(
            text=text,
            usage=Usage(usage.get("prompt_tokens", 0), usage.get("completion_tokens", 0)),
            latency=latency,
        )

    def _complete_gemini(self, messages: "tuple[ChatMessage, ...]") -> CompletionResult:
        headers = {"Content-Type": "application/json"}
        key = self._api_key()
        if key:
            headers["x-goog-api-key"] = key
        contents = []
        system_parts = []
        for m in messages:
            if m.role == "system":
                system_parts.append({"text": m.content})
            else:
                role = "model" if m.role == "assistant" else "user"
                contents.append({"role": role, "parts": [{"text": m.content}]})
        payload: dict = {
            "contents": contents,
            "generationConfig": {
                "temperature": self.cfg.temperature,
                "maxOutputTokens": self.cfg.max_output_tokens,
            },
        }
        if system_parts:
            payload["systemInstruction"] = {"parts": system_parts}
        started = time.monotonic()
        body = self._http(self.cfg.endpoint, headers, payload)
        latency = time.monotonic() - started
        try:
            parts = body["candidates"][0]["content"]["parts"]
            text = "".join(p.get("text", "") for p in parts)
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed gemini-style response: {body}") from exc
        usage = body.get("usageMetadata", {})
        return CompletionResult(
            text=text,
            usage=Usage(usage.get("promptTokenCount", 0), usage.get("candidatesTokenCount", 0)),
            latency=latency,
        )

    # --- recording -----------------------------------------------------------

    def _record(self, messages: Sequence[ChatMessage], result: CompletionResult) -> None:
        key = canonical_request_key(self.cfg.model_id, messages)
        if key in self._recorded_keys:
            return
        self._recorded_keys.add(key)
        record = {
            "key": key,
            "recorded_at": datetime.now(timezone.utc).isoformat(),
            "request": {
                "model_id": self.cfg.model_id,
                "messages": [{"role": m.role, "content": m.content} for m in messages],
                "temperature": self.cfg.temperature,
                "max_output_tokens": self.cfg.max_output_tokens,
            },
            "response": {
                "text": result.text,
                "prompt_tokens": result.usage.prompt_tokens,
                "completion_tokens": result.usage.completion_tokens,
                "latency": result.latency,
            },
        }
        path = Path(self.cfg.record_to)  # type: ignore[arg-type]
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("a") as handle:
            handle.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")


def complete(
    cfg: ModelConfig,
    messages: Sequence[ChatMessage],
    transport: Optional[Transport] = None,
) -> CompletionResult:
    """One-shot completion for callers that do not need gateway state."""
    return Gateway(cfg, transport=transport).complete(messages)


def replay_config(cfg: ModelConfig, cassette: str) -> ModelConfig:
    """The same model config pointed at a cassette instead of a live provider."""
    return replace(cfg, provider="replay", cassette=cassette, record_to=None)
