"""Pluggable language-model, checker and prover backends."""

from __future__ import annotations

from dataclasses import dataclass

from .checker import Checker, CommandChecker, ToyChecker, parse_diagnostic_lines
from .llm import LanguageModel, ReplayLLM, WireLLM, map_provider_reply
from .prover import Prover, SimulatedProver, WireProver
from .toylang import simulate_prove, toy_check
from .types import (
    Diagnostics,
    GenerationRequest,
    GenerationResponse,
    ProverBudget,
    ProverOutcome,
    TokenUsage,
    ToolCall,
)


@dataclass
class Backends:
    llm: LanguageModel
    checker: Checker
    prover: Prover | None = None
    budget: ProverBudget = ProverBudget()


def llm_generate(llm: LanguageModel, request: GenerationRequest) -> GenerationResponse:
    return llm.generate(request)


def check(checker: Checker, sketch_text: str) -> Diagnostics:
    return checker.check(sketch_text)


def focused_prove(prover: Prover, goal_text: str, budget: ProverBudget, seed: int = 0) -> ProverOutcome:
    return prover.prove(goal_text, budget, seed)


__all__ = [
    "Backends",
    "Checker",
    "CommandChecker",
    "Diagnostics",
    "GenerationRequest",
    "GenerationResponse",
    "LanguageModel",
    "Prover",
    "ProverBudget",
    "ProverOutcome",
    "ReplayLLM",
    "SimulatedProver",
    "TokenUsage",
    "ToolCall",
    "ToyChecker",
    "WireLLM",
    "WireProver",
    "check",
    "focused_prove",
    "llm_generate",
    "map_provider_reply",
    "parse_diagnostic_lines",
    "simulate_prove",
    "toy_check",
]
