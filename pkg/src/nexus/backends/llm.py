"""Language-model backends: a deterministic replay script and an HTTP client.

Replay scripts are JSON documents::

    {
      "format": "nexus-replay-script",
      "version": 1,
      "streams": {
        "prover-0": [{"text": "...", "tool_calls": [...], "usage": {...}}, ...],
        "rater-0": [...]
      },
      "repeat": ["rater-0"]
    }

Each conversation stream is consumed in order; streams listed under
``repeat`` cycle instead of running out.
"""

from __future__ import annotations

import json
import os
import threading
import urllib.error
import urllib.request
from pathlib import Path
from typing import Any, Protocol

from ..errors import ScriptExhausted, TransportError
from .types import GenerationRequest, GenerationResponse, TokenUsage, ToolCall

SCRIPT_FORMAT = "nexus-replay-script"
TOKEN_ENV = "NEXUS_LLM_TOKEN"


class LanguageModel(Protocol):
    concurrent_safe: bool
    replayable: bool

    def generate(self, request: GenerationRequest) -> GenerationResponse: ...


class ReplayLLM:
    concurrent_safe = True
    replayable = True

    def __init__(self, streams: dict[str, list[GenerationResponse]], repeat: set[str] | None = None):
        self.streams = {k: list(v) for k, v in streams.items()}
        self.repeat = set(repeat or ())
        self._positions: dict[str, int] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_document(cls, doc: dict[str, Any]) -> ReplayLLM:
        if doc.get("format") != SCRIPT_FORMAT:
            raise ValueError(f"not a replay script (format={doc.get('format')!r})")
        streams = {
            name: [GenerationResponse.from_dict(r) for r in responses]
            for name, responses in doc.get("streams", {}).items()
        }
        return cls(streams, set(doc.get("repeat", ())))

    @classmethod
    def from_file(cls, path: str | Path) -> ReplayLLM:
        return cls.from_document(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def single(cls, responses: list[GenerationResponse], stream: str = "default", repeat: bool = False) -> ReplayLLM:
        return cls({stream: responses}, {stream} if repeat else set())

    def position(self, stream: str) -> int:
        return self._positions.get(stream, 0)

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        with self._lock:
            script = self.streams.get(request.stream)
            pos = self._positions.get(request.stream, 0)
            if not script or (pos >= len(script) and request.stream not in self.repeat):
                raise ScriptExhausted(f"replay stream {request.stream!r} exhausted after {pos} responses")
            self._positions[request.stream] = pos + 1
            return script[pos % len(script)]


TOOL_SCHEMAS = [
    {
        "type": "function",
        "function": {
            "name": "search_replace",
            "description": "Replace the unique occurrence of `search` inside an editable region with `replace`.",
            "parameters": {
                "type": "object",
                "properties": {"search": {"type": "string"}, "replace": {"type": "string"}},
                "required": ["search", "replace"],
            },
        },
    },
    {
        "type": "function",
        "function": {
            "name": "focused_prove",
            "description": "Ask the focused prover to prove or disprove one goal, written as `⊢ lhs = rhs`.",
            "parameters": {
                "type": "object",
                "properties": {"goal": {"type": "string"}},
                "required": ["goal"],
            },
        },
    },
    {
        "type": "function",
        "function": {
            "name": "end_episode",
            "description": "Finish the episode, optionally recording the lessons learned.",
            "parameters": {"type": "object", "properties": {"lesson": {"type": "string"}}},
        },
    },
]


def map_provider_reply(payload: dict[str, Any]) -> GenerationResponse:
    """Accept either the native ``{text, tool_calls, usage}`` shape or a chat-completions reply."""
    if "choices" not in payload:
        return GenerationResponse.from_dict(payload)
    message = payload["choices"][0].get("message", {})
    calls = []
    for call in message.get("tool_calls") or ():
        fn = call.get("function", {})
        args = fn.get("arguments") or "{}"
        calls.append(ToolCall(fn.get("name", ""), json.loads(args) if isinstance(args, str) else dict(args)))
    usage = payload.get("usage") or {}
    cached = (usage.get("prompt_tokens_details") or {}).get("cached_tokens", 0) or 0
    return GenerationResponse(
        message.get("content") or "",
        tuple(calls),
        TokenUsage(
            max(0, int(usage.get("prompt_tokens", 0)) - int(cached)),
            int(cached),
            int(usage.get("completion_tokens", 0)),
        ),
    )


class WireLLM:
    """Chat-completions style HTTP client; the bearer token comes from ``NEXUS_LLM_TOKEN``."""

    concurrent_safe = True
    replayable = False

    def __init__(self, url: str, model: str = "", timeout_s: float = 600.0, token_env: str = TOKEN_ENV):
        self.url = url
        self.model = model
        self.timeout_s = timeout_s
        self.token_env = token_env

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        body = {
            "model": self.model,
            "messages": [{"role": role, "content": text} for role, text in request.messages],
            "max_tokens": request.max_turn_tokens,
            "tools": TOOL_SCHEMAS,
        }
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        req = urllib.request.Request(self.url, data=json.dumps(body).encode(), headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
                payload = json.loads(resp.read().decode())
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise TransportError(f"LLM endpoint {self.url}: {exc}") from exc
        except ValueError as exc:
            raise TransportError(f"LLM endpoint {self.url}: reply is not JSON") from exc
        try:
            return map_provider_reply(payload)
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise TransportError(f"LLM endpoint {self.url}: unexpected reply shape ({exc})") from exc
