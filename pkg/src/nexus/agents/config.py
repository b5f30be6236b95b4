"""Run configuration and result types."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from ..backends.types import ProverBudget, TokenUsage
from ..rating import GibbsConfig
from ..selection import PUCBConfig
from ..sketch import DEFAULT_PLACEHOLDER, ProofSketch
from ..validate import DEFAULT_DISALLOWED

AgentKind = Literal["A", "B", "C", "D"]


@dataclass(frozen=True)
class EpisodeLimits:
    max_prover_queries: int = 5
    max_edits: int = 90
    max_turns: int = 200

    def __post_init__(self) -> None:
        if min(self.max_prover_queries, self.max_edits, self.max_turns) < 1:
            raise ValueError("episode limits must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    agent_kind: AgentKind = "A"
    n_subagents: int = 10
    episode_budget: int = 3000
    limits: EpisodeLimits = field(default_factory=EpisodeLimits)
    seeds: tuple[int, ...] = ()
    seed: int = 0
    # rater side (agents C and D)
    n_raters: int = 1
    players_per_match: int = 7
    match_budget: int | None = None
    gibbs: GibbsConfig = field(default_factory=GibbsConfig)
    pucb: PUCBConfig = field(default_factory=PUCBConfig)
    prover_budget: ProverBudget = field(default_factory=ProverBudget)
    max_turn_tokens: int = 8192
    placeholder: str = DEFAULT_PLACEHOLDER
    disallowed_tokens: tuple[str, ...] = DEFAULT_DISALLOWED
    deterministic_schedule: bool = True

    def __post_init__(self) -> None:
        if self.agent_kind not in ("A", "B", "C", "D"):
            raise ValueError(f"agent_kind must be one of A, B, C, D (got {self.agent_kind!r})")
        if self.n_subagents < 0 or (self.n_subagents == 0 and not self.uses_evolution):
            raise ValueError("n_subagents must be >= 1")
        if self.episode_budget < 1:
            raise ValueError("episode_budget must be >= 1")
        if self.n_subagents == 0 and self.match_budget is None:
            raise ValueError("a rater-only run needs a match_budget")

    @property
    def uses_prover(self) -> bool:
        return self.agent_kind in ("B", "D")

    @property
    def uses_evolution(self) -> bool:
        return self.agent_kind in ("C", "D")

    def worker_seeds(self, n: int, salt: int = 0) -> list[int]:
        if self.seeds and salt == 0:
            if len(self.seeds) < n:
                raise ValueError(f"need {n} seeds, got {len(self.seeds)}")
            return list(self.seeds[:n])
        children = np.random.SeedSequence([self.seed, salt]).spawn(n)
        return [int(c.generate_state(1, dtype=np.uint64)[0] >> 1) for c in children]


@dataclass
class RunResult:
    solved: bool
    final_sketch: ProofSketch | None
    episodes: int
    stop_reason: str
    solver: str | None = None
    usage_total: TokenUsage = field(default_factory=TokenUsage)
    attempts: list = field(default_factory=list)
    schedule_trace: list[int] = field(default_factory=list)
