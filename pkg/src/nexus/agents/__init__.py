"""Prover episodes and the four agent configurations."""

from __future__ import annotations

from .basic import RalphSubagent, run_basic
from .config import EpisodeLimits, RunConfig, RunResult
from .episode import EpisodeOutcome, add_lesson, run_episode
from .evolution import parse_ranking, run_evolutionary
from .scheduler import Budget, StopSignal, run_deterministic, run_threaded


def run_agent(problem, cfg: RunConfig, backends, store=None, journal=None, trace=None) -> RunResult:
    """Dispatch on ``cfg.agent_kind``: A/B run independent loops, C/D run the evolutionary pool."""
    if cfg.uses_evolution:
        return run_evolutionary(problem, cfg, backends, store=store, journal=journal, trace=trace)
    return run_basic(problem, cfg, backends, journal=journal, trace=trace)


__all__ = [
    "Budget",
    "EpisodeLimits",
    "EpisodeOutcome",
    "RalphSubagent",
    "RunConfig",
    "RunResult",
    "StopSignal",
    "add_lesson",
    "parse_ranking",
    "run_agent",
    "run_basic",
    "run_deterministic",
    "run_episode",
    "run_evolutionary",
    "run_threaded",
]
