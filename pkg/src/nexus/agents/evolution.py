"""Agents C and D: prover workers and rater workers sharing a population store."""

from __future__ import annotations

import re
import threading

from ..backends import Backends
from ..backends.types import GenerationRequest, ProverOutcome, TokenUsage
from ..errors import ConflictingOutcome, NoRatedSketch, PopulationTooSmall
from ..journal import Journal
from ..population import MatchResult, PopulationStore, SketchRecord, goal_key
from ..rating import break_ties, rating_views, refresh_ratings, thompson_select
from ..selection import (
    assemble_prompt,
    load_template,
    pick_inspirations,
    render_players,
    render_template,
    select_parent,
)
from ..sketch import ProofSketch, find_sorries
from ..validate import final_verify, incorporate_cached_goals, sandbox_check, splice_scripts
from .config import RunConfig, RunResult
from .episode import run_episode
from .scheduler import Budget, StopSignal, run_deterministic, run_threaded

RUN_ATTEMPT = "run"
_RANKING_LINE = re.compile(r"RANKING:\s*(.+)")
_PLAYER = re.compile(r"P(\d+)")


def parse_ranking(text: str, n_players: int) -> list[list[int]]:
    """Parse ``RANKING: P2 > P1 = P3`` into tie groups of 0-based player indices.

    Players the rater left out form one final tie group.  Raises ValueError
    when no ranking line is present or a player is named twice.
    """
    match = None
    for line in text.splitlines():
        found = _RANKING_LINE.search(line)
        if found:
            match = found
    if match is None:
        raise ValueError("no RANKING line in rater reply")
    groups: list[list[int]] = []
    seen: set[int] = set()
    for chunk in match.group(1).split(">"):
        group = []
        for label in chunk.split("="):
            m = _PLAYER.search(label)
            if not m:
                continue
            idx = int(m.group(1)) - 1
            if not 0 <= idx < n_players:
                raise ValueError(f"unknown player P{idx + 1}")
            if idx in seen:
                raise ValueError(f"player P{idx + 1} ranked twice")
            seen.add(idx)
            group.append(idx)
        if group:
            groups.append(group)
    rest = [i for i in range(n_players) if i not in seen]
    if rest:
        groups.append(rest)
    if len(groups) == 1 and len(groups[0]) == n_players and not seen:
        raise ValueError("rater reply names no players")
    return groups


class _Shared:
    def __init__(self, cfg: RunConfig, store: PopulationStore, journal: Journal | None):
        self.cfg = cfg
        self.store = store
        self.journal = journal
        self.stop = StopSignal()
        self.budget = Budget(cfg.episode_budget)
        self.matches = Budget(cfg.match_budget if cfg.match_budget is not None else 10**12)
        self.provers_left = cfg.n_subagents
        self.lock = threading.Lock()
        self.solution: ProofSketch | None = None
        self.solver: str | None = None

    def log(self, kind: str, payload: dict) -> None:
        if self.journal is not None:
            self.journal.append(kind, payload)

    def prover_finished(self) -> None:
        with self.lock:
            self.provers_left -= 1


class ProverWorker:
    def __init__(self, index: int, shared: _Shared, backends: Backends, problem: ProofSketch, seed_id: str, seed: int):
        self.index = index
        self.name = f"prover-{index}"
        self.shared = shared
        self.backends = backends
        self.problem = problem
        self.seed_id = seed_id
        self.seed = seed
        self.template = load_template("prover")
        self.done = False
        self.episodes = 0
        self.usage = TokenUsage()

    def _finish(self) -> bool:
        if not self.done:
            self.done = True
            self.shared.prover_finished()
        return False

    def step(self) -> bool:
        sh, cfg = self.shared, self.shared.cfg
        if sh.budget.claim(sh.stop) is None:
            return self._finish()
        store = sh.store
        try:
            parent_id = select_parent(store, cfg.pucb, self.seed)
        except NoRatedSketch:
            parent_id = self.seed_id
            store.increment_visits(parent_id)
        root = store.get(parent_id)
        inspirations = pick_inspirations(store, parent_id, cfg.pucb.n_inspirations)
        episode_seed = self.seed + 7919 * self.episodes
        prompt = assemble_prompt(root, inspirations, self.template, episode_seed, cfg.pucb)
        outcome = run_episode(
            root.sketch,
            prompt,
            self.backends,
            cfg.limits,
            allow_prover=cfg.uses_prover,
            store=store,
            journal=sh.journal,
            stop=sh.stop,
            worker=self.name,
            attempt_id=RUN_ATTEMPT,
            episode_index=self.episodes,
            seed=episode_seed,
            max_turn_tokens=cfg.max_turn_tokens,
            placeholder=cfg.placeholder,
            disallowed=cfg.disallowed_tokens,
        )
        self.episodes += 1
        self.usage = self.usage + outcome.usage_total
        verdict = sandbox_check(self.problem, outcome.final_sketch, self.backends.checker)
        if not verdict.passed:
            sh.log("sandbox_reject", {"worker": self.name, "reasons": [str(r) for r in verdict.reasons]})
            return True
        sketch, feedback = self._validate(outcome.final_sketch, episode_seed)
        feedback = {**outcome.prover_feedback, **feedback}
        record_id = store.new_id()
        store.insert_sketch(
            SketchRecord(record_id, sketch, parent_id=parent_id, plan_summary=outcome.plan_summary, goal_feedback=feedback)
        )
        if not find_sorries(sketch, cfg.placeholder):
            check = final_verify(sketch, self.backends.checker, cfg.disallowed_tokens, cfg.placeholder)
            sh.log("final_verify", {"worker": self.name, "id": record_id, "passed": check.passed,
                                    "reasons": [str(r) for r in check.reasons]})
            if check.passed and sh.stop.set("solved"):
                sh.solution, sh.solver = sketch, self.name
                sh.log("solve", {"worker": self.name, "attempt_id": RUN_ATTEMPT, "id": record_id, "text": sketch.render()})
                sh.log("stop", {"reason": "solved", "by": self.name})
        return True

    def _validate(self, sketch: ProofSketch, seed: int) -> tuple[ProofSketch, dict[str, ProverOutcome]]:
        """Cache-first goal incorporation, then (agent D) prover dispatch of what is left."""
        sh, cfg, checker = self.shared, self.shared.cfg, self.backends.checker
        diag = checker.check(sketch.render())
        inc = incorporate_cached_goals(sketch, diag, sh.store, cfg.placeholder)
        for key, outcome in inc.feedback.items():
            if outcome.is_verdict:
                sh.log("cache_hit", {"worker": self.name, "goal_key": key, "verdict": outcome.verdict, "source": "validation"})
        for issue in inc.issues:
            sh.log("validation_issue", {"worker": self.name, "issue": str(issue)})
        feedback = dict(inc.feedback)
        sketch = inc.sketch
        if not (cfg.uses_prover and self.backends.prover is not None and inc.unresolved):
            return sketch, feedback
        goals = {goal_key(g): g for g in diag.open_goals}
        scripts: dict[str, str] = {}
        for n, key in enumerate(dict.fromkeys(inc.unresolved)):
            cached = inc.feedback.get(key)
            if cached is not None and cached.is_verdict:
                continue
            outcome = self.backends.prover.prove(goals[key], self.backends.budget, seed + n)
            sh.log("prover_dispatch", {"worker": self.name, "goal_key": key, "goal": goals[key],
                                       "verdict": outcome.verdict, "source": "validation"})
            try:
                sh.store.goal_store(key, outcome)
            except ConflictingOutcome:
                sh.log("cache_conflict", {"worker": self.name, "goal_key": key, "verdict": outcome.verdict})
            feedback[key] = outcome
            if outcome.verdict == "proved":
                scripts[key] = outcome.script
        if scripts:
            spliced = splice_scripts(sketch, checker.check(sketch.render()), scripts, cfg.placeholder)
            sketch = spliced.sketch
        return sketch, feedback


class RaterWorker:
    def __init__(self, index: int, shared: _Shared, backends: Backends, seed: int):
        self.index = index
        self.name = f"rater-{index}"
        self.shared = shared
        self.backends = backends
        self.seed = seed
        self.template = load_template("rater")
        self.done = False
        self.rounds = 0
        self.usage = TokenUsage()

    def step(self) -> bool:
        sh, cfg = self.shared, self.shared.cfg
        if sh.stop.is_set() or (cfg.n_subagents > 0 and sh.provers_left == 0) or sh.matches.exhausted:
            self.done = True
            return False
        views = rating_views(sh.store)
        if len(views) < 2:
            return False
        if sh.matches.claim(sh.stop) is None:
            self.done = True
            return False
        seed = self.seed + 104729 * self.rounds
        self.rounds += 1
        try:
            ids = thompson_select(views, cfg.players_per_match, cfg.gibbs.with_seed(seed))
        except PopulationTooSmall:
            return False
        records = [sh.store.get(i) for i in ids]
        prompt = render_template(self.template, {"n_players": str(len(records)), "player_blocks": render_players(records)})
        response = self.backends.llm.generate(
            GenerationRequest((("user", prompt),), cfg.max_turn_tokens, stream=self.name)
        )
        self.usage = self.usage + response.usage
        sh.log("turn", {"worker": self.name, "attempt_id": RUN_ATTEMPT, "component": "rater",
                        "usage": response.usage.to_dict(), "text": response.text})
        try:
            groups = parse_ranking(response.text, len(ids))
        except ValueError as exc:
            sh.log("rating_error", {"worker": self.name, "error": str(exc)})
            return True
        raw = [[ids[i] for i in g] for g in groups]
        strengths = {r.id: (r.rating.strength_mean or 1.0) for r in records}
        strict = break_ties(raw, strengths, seed)
        sh.store.record_match(MatchResult(tuple(strict), tuple(tuple(g) for g in raw), self.name))
        refresh_ratings(sh.store, cfg.gibbs.with_seed(seed))
        return True


def run_evolutionary(
    problem: ProofSketch,
    cfg: RunConfig,
    backends: Backends,
    store: PopulationStore | None = None,
    journal: Journal | None = None,
    trace: list[int] | None = None,
) -> RunResult:
    """Run prover and rater workers against a shared store until a verified proof or the budget."""
    from ..evalkit import attempts_from_events

    if cfg.agent_kind not in ("C", "D"):
        raise ValueError("run_evolutionary drives agents C and D")
    store = store if store is not None else PopulationStore(journal)
    if store.journal is None:
        store.journal = journal
    if len(store) == 0:
        seed_id = store.insert_sketch(SketchRecord(store.new_id(), problem, plan_summary="input sketch"))
    else:
        seed_id = store.records()[0].id
    shared = _Shared(cfg, store, journal)
    prover_seeds = cfg.worker_seeds(cfg.n_subagents)
    rater_seeds = cfg.worker_seeds(cfg.n_raters, salt=1)
    provers = [ProverWorker(i, shared, backends, problem, seed_id, prover_seeds[i]) for i in range(cfg.n_subagents)]
    raters = [RaterWorker(j, shared, backends, rater_seeds[j]) for j in range(cfg.n_raters)]
    workers = [*provers, *raters]
    executed: list[int] = []
    if cfg.deterministic_schedule:
        executed = run_deterministic(workers, trace)
    else:
        run_threaded(workers, shared.stop)
    solved = shared.solution is not None
    if not solved:
        shared.log("stop", {"reason": "budget_exhausted"})
    usage = sum((w.usage for w in workers), TokenUsage())
    return RunResult(
        solved=solved,
        final_sketch=shared.solution,
        episodes=sum(p.episodes for p in provers),
        stop_reason="solved" if solved else "budget_exhausted",
        solver=shared.solver,
        usage_total=usage,
        attempts=attempts_from_events(journal.events) if journal is not None else [],
        schedule_trace=executed,
    )
