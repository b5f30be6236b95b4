"""Value types exchanged with the language-model, checker and prover backends."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Literal

from ..errors import InvalidRequest

Role = Literal["system", "user", "assistant", "tool"]
TOOL_NAMES = ("search_replace", "focused_prove", "end_episode")


@dataclass(frozen=True)
class TokenUsage:
    input_tokens: int = 0
    cache_read_tokens: int = 0
    output_tokens: int = 0

    def __post_init__(self) -> None:
        if min(self.input_tokens, self.cache_read_tokens, self.output_tokens) < 0:
            raise ValueError("token counts must be non-negative")

    def __add__(self, other: TokenUsage) -> TokenUsage:
        return TokenUsage(
            self.input_tokens + other.input_tokens,
            self.cache_read_tokens + other.cache_read_tokens,
            self.output_tokens + other.output_tokens,
        )

    def to_dict(self) -> dict[str, int]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any] | None) -> TokenUsage:
        d = d or {}
        return cls(
            int(d.get("input_tokens", 0)),
            int(d.get("cache_read_tokens", 0)),
            int(d.get("output_tokens", 0)),
        )


@dataclass(frozen=True)
class ToolCall:
    name: str
    arguments: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "arguments": dict(self.arguments)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ToolCall:
        return cls(str(d["name"]), dict(d.get("arguments") or {}))


@dataclass(frozen=True)
class GenerationRequest:
    messages: tuple[tuple[str, str], ...]
    max_turn_tokens: int = 8192
    # conversation key used by scripted backends and for cost attribution
    stream: str = "default"

    def __post_init__(self) -> None:
        object.__setattr__(self, "messages", tuple(tuple(m) for m in self.messages))
        if not self.messages:
            raise InvalidRequest("generation request needs at least one message")
        if self.messages[0][0] not in ("system", "user"):
            raise InvalidRequest("first message must come from the system or the user")


@dataclass(frozen=True)
class GenerationResponse:
    text: str
    tool_calls: tuple[ToolCall, ...] = ()
    usage: TokenUsage = TokenUsage()

    def to_dict(self) -> dict[str, Any]:
        return {
            "text": self.text,
            "tool_calls": [c.to_dict() for c in self.tool_calls],
            "usage": self.usage.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> GenerationResponse:
        return cls(
            str(d.get("text", "")),
            tuple(ToolCall.from_dict(c) for c in d.get("tool_calls") or ()),
            TokenUsage.from_dict(d.get("usage")),
        )


@dataclass(frozen=True)
class Diagnostics:
    compiles: bool
    errors: tuple[tuple[str, str], ...] = ()
    open_goals: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "errors", tuple(tuple(e) for e in self.errors))
        object.__setattr__(self, "open_goals", tuple(self.open_goals))
        if not self.compiles and not self.errors:
            raise ValueError("a failed compilation must carry at least one error")

    def summary(self) -> str:
        if not self.compiles:
            lines = [f"compile errors ({len(self.errors)}):"]
            lines += [f"  {loc}: {msg}" for loc, msg in self.errors]
            return "\n".join(lines)
        if not self.open_goals:
            return "compiles; no open goals"
        return "compiles; open goals:\n" + "\n".join(f"  {g}" for g in self.open_goals)

    def to_dict(self) -> dict[str, Any]:
        return {
            "compiles": self.compiles,
            "errors": [list(e) for e in self.errors],
            "open_goals": list(self.open_goals),
        }


Verdict = Literal["proved", "disproved", "failed"]


@dataclass(frozen=True)
class ProverOutcome:
    verdict: Verdict
    script: str | None = None
    feedback: str | None = None

    def __post_init__(self) -> None:
        if self.verdict not in ("proved", "disproved", "failed"):
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.verdict in ("proved", "disproved") and not self.script:
            raise ValueError(f"{self.verdict} outcome needs a script")
        if self.verdict == "failed" and not self.feedback:
            raise ValueError("failed outcome needs feedback")

    @property
    def is_verdict(self) -> bool:
        return self.verdict != "failed"

    def describe(self) -> str:
        if self.verdict == "proved":
            return f"proved by `{self.script}`"
        if self.verdict == "disproved":
            extra = f" ({self.feedback})" if self.feedback else ""
            return f"disproved{extra}"
        return f"failed: {self.feedback}"

    def to_dict(self) -> dict[str, Any]:
        return {"verdict": self.verdict, "script": self.script, "feedback": self.feedback}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ProverOutcome:
        return cls(d["verdict"], d.get("script"), d.get("feedback"))


@dataclass(frozen=True)
class ProverBudget:
    simulations: int = 400
    timeout_ms: int = 60_000

    def __post_init__(self) -> None:
        if self.simulations < 1:
            raise ValueError("simulations must be >= 1")
