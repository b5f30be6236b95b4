from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nexus.backends import Backends, ReplayLLM, SimulatedProver, ToyChecker  # noqa: E402
from nexus.backends.types import GenerationResponse, TokenUsage, ToolCall  # noqa: E402

DATA = Path(__file__).parent / "data"

FIG1_LIKE = """\
import Toy
-- EVOLVE-BLOCK-START
lemma helper : 1 + 1 = 2 := sorry
-- EVOLVE-BLOCK-END
lemma target : 6 * 7 = /- EVOLVE-VALUE -/ 42 /- END-EVOLVE-VALUE -/ := eval
"""


def reply(text: str = "", *calls: ToolCall, usage: TokenUsage = TokenUsage(10, 0, 5)) -> GenerationResponse:
    return GenerationResponse(text, tuple(calls), usage)


def edit(search: str, replace: str) -> ToolCall:
    return ToolCall("search_replace", {"search": search, "replace": replace})


def prove(goal: str) -> ToolCall:
    return ToolCall("focused_prove", {"goal": goal})


def end(lesson: str = "") -> ToolCall:
    return ToolCall("end_episode", {"lesson": lesson} if lesson else {})


def toy_backends(streams: dict[str, list[GenerationResponse]], prover: bool = True, repeat=()) -> Backends:
    return Backends(ReplayLLM(streams, set(repeat)), ToyChecker(), SimulatedProver() if prover else None)


@pytest.fixture
def data_dir() -> Path:
    return DATA


def synthetic_attempts():
    """The frozen 100-attempt fixture as (attempts, prices)."""
    import json

    from nexus.evalkit import AttemptLog, PriceTable, Rates, UsageEvent

    data = json.loads((DATA / "synthetic_attempts.json").read_text())
    prices = PriceTable({k: Rates(*v) for k, v in data["prices"].items()})
    attempts = [
        AttemptLog(
            a["attempt_id"],
            [UsageEvent(float(t), TokenUsage(i, c, o), comp) for t, i, c, o, comp in a["events"]],
            None if a["success_time"] is None else float(a["success_time"]),
        )
        for a in data["attempts"]
    ]
    return attempts, prices


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
