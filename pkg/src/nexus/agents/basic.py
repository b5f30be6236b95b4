"""Agents A and B: independent Ralph loops that stop at the first verified proof."""

from __future__ import annotations

from ..backends import Backends
from ..journal import Journal
from ..selection import PromptBundle, load_template, render_template
from ..backends.types import TokenUsage
from ..sketch import ProofSketch, find_sorries
from ..validate import final_verify, sandbox_check
from .config import RunConfig, RunResult
from .episode import add_lesson, run_episode
from .scheduler import Budget, StopSignal, run_deterministic, run_threaded


class RalphSubagent:
    """Chains episodes on its own sketch; the lesson comments carry forward."""

    def __init__(
        self,
        index: int,
        problem: ProofSketch,
        cfg: RunConfig,
        backends: Backends,
        budget: Budget,
        stop: StopSignal,
        journal: Journal | None,
        seed: int,
        template: str,
    ):
        self.index = index
        self.name = f"prover-{index}"
        self.attempt_id = f"subagent-{index}"
        self.problem = problem
        self.sketch = problem
        self.cfg = cfg
        self.backends = backends
        self.budget = budget
        self.stop = stop
        self.journal = journal
        self.seed = seed
        self.template = template
        self.done = False
        self.episodes = 0
        self.usage = TokenUsage()
        self.solution: ProofSketch | None = None

    def step(self) -> bool:
        slot = self.budget.claim(self.stop)
        if slot is None:
            self.done = True
            return False
        prompt = PromptBundle(
            root_id=self.attempt_id,
            inspiration_ids=(),
            rendered_prompt=render_template(self.template, {"code": self.sketch.render()}),
            directive="",
        )
        outcome = run_episode(
            self.sketch,
            prompt,
            self.backends,
            self.cfg.limits,
            allow_prover=self.cfg.uses_prover,
            journal=self.journal,
            stop=self.stop,
            worker=self.name,
            attempt_id=self.attempt_id,
            episode_index=self.episodes,
            seed=self.seed + 1000 * self.episodes,
            max_turn_tokens=self.cfg.max_turn_tokens,
            placeholder=self.cfg.placeholder,
            disallowed=self.cfg.disallowed_tokens,
        )
        self.episodes += 1
        self.usage = self.usage + outcome.usage_total
        verdict = sandbox_check(self.problem, outcome.final_sketch, self.backends.checker)
        if not verdict.passed:
            self._log("sandbox_reject", reasons=[str(r) for r in verdict.reasons])
            # revert, keeping the lesson so the next episode sees it
            self.sketch, _ = add_lesson(self.sketch, outcome.lesson_comment or "previous episode was reverted")
            return True
        self.sketch = outcome.final_sketch
        if outcome.solved or not find_sorries(self.sketch, self.cfg.placeholder):
            check = final_verify(self.sketch, self.backends.checker, self.cfg.disallowed_tokens, self.cfg.placeholder)
            self._log("final_verify", passed=check.passed, reasons=[str(r) for r in check.reasons])
            if check.passed and self.stop.set("solved"):
                self.solution = self.sketch
                self._log("solve", solver=self.name, text=self.sketch.render())
                self._log("stop", reason="solved", by=self.name)
                self.done = True
        return True

    def _log(self, kind: str, **payload) -> None:
        if self.journal is not None:
            self.journal.append(kind, {"worker": self.name, "attempt_id": self.attempt_id, **payload})


def run_basic(
    problem: ProofSketch,
    cfg: RunConfig,
    backends: Backends,
    journal: Journal | None = None,
    trace: list[int] | None = None,
) -> RunResult:
    """Launch ``cfg.n_subagents`` independent subagents sharing only the stop signal and episode budget."""
    from ..evalkit import attempts_from_events

    if cfg.agent_kind not in ("A", "B"):
        raise ValueError("run_basic drives agents A and B")
    template = load_template("basic")
    stop = StopSignal()
    budget = Budget(cfg.episode_budget)
    seeds = cfg.worker_seeds(cfg.n_subagents)
    workers = [
        RalphSubagent(i, problem, cfg, backends, budget, stop, journal, seeds[i], template)
        for i in range(cfg.n_subagents)
    ]
    executed: list[int] = []
    if cfg.deterministic_schedule:
        executed = run_deterministic(workers, trace)
    else:
        run_threaded(workers, stop)
    solver = next((w for w in workers if w.solution is not None), None)
    if solver is None and journal is not None:
        journal.append("stop", {"reason": "budget_exhausted"})
    episodes = sum(w.episodes for w in workers)
    return RunResult(
        solved=solver is not None,
        final_sketch=solver.solution if solver else None,
        episodes=episodes,
        stop_reason="solved" if solver else "budget_exhausted",
        solver=solver.name if solver else None,
        usage_total=sum((w.usage for w in workers), TokenUsage()),
        attempts=attempts_from_events(journal.events) if journal is not None else [],
        schedule_trace=executed,
    )

