"""One prover episode: a multi-turn conversation that edits a sketch through tools."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..backends import Backends
from ..backends.types import Diagnostics, GenerationRequest, ProverOutcome, TokenUsage, ToolCall
from ..errors import BackendFailure, ConflictingOutcome, EditError
from ..journal import Journal
from ..population import PopulationStore, goal_key
from ..selection import PromptBundle
from ..sketch import DEFAULT_PLACEHOLDER, ProofSketch, SearchReplaceEdit, apply_edit
from ..validate import DEFAULT_DISALLOWED, final_verify, splice_scripts
from .config import EpisodeLimits
from .scheduler import StopSignal

SYSTEM_PROMPT = (
    "You refine formal proof sketches. Use the search_replace tool for edits, "
    "focused_prove to test single goals when it is available, and end_episode to finish."
)
LESSON_PREFIX = "-- LESSON: "
DEFAULT_LESSON = "episode ended without a complete proof"


@dataclass
class EpisodeOutcome:
    final_sketch: ProofSketch
    solved: bool
    lesson_comment: str | None
    transcript: list[dict[str, Any]]
    usage_total: TokenUsage
    edits: int = 0
    prover_queries: int = 0
    turns: int = 0
    end_reason: str = ""
    plan_summary: str = ""
    prover_feedback: dict[str, ProverOutcome] = field(default_factory=dict)


def add_lesson(sketch: ProofSketch, lesson: str) -> tuple[ProofSketch, str | None]:
    """Prepend a lesson comment line inside the first EVOLVE-BLOCK, if there is one."""
    for i, region in enumerate(sketch.regions):
        if region.kind == "evolve_block":
            line = LESSON_PREFIX + " ".join(lesson.split())
            return sketch.replace_region(i, line + "\n" + region.text), line
    return sketch, None


class _Recorder:
    def __init__(self, journal: Journal | None, base: dict[str, Any]):
        self.journal = journal
        self.base = base
        self.transcript: list[dict[str, Any]] = []

    def __call__(self, event_kind: str, /, **payload: Any) -> None:
        payload = {**self.base, **payload}
        self.transcript.append({"event_kind": event_kind, "payload": payload})
        if self.journal is not None:
            self.journal.append(event_kind, payload)


def run_episode(
    start: ProofSketch,
    prompt: PromptBundle,
    backends: Backends,
    limits: EpisodeLimits,
    *,
    allow_prover: bool = False,
    store: PopulationStore | None = None,
    journal: Journal | None = None,
    stop: StopSignal | None = None,
    worker: str = "prover-0",
    attempt_id: str = "attempt-0",
    episode_index: int = 0,
    seed: int = 0,
    max_turn_tokens: int = 8192,
    placeholder: str = DEFAULT_PLACEHOLDER,
    disallowed: tuple[str, ...] = DEFAULT_DISALLOWED,
) -> EpisodeOutcome:
    """Run turns until end_episode, a solved sketch, a limit, or a stop signal.

    Tool calls run in emission order.  A rejected edit is reported back to the
    model rather than ending the episode.  ``focused_prove`` consults the goal
    cache in ``store`` first and splices proofs of open goals directly.
    """
    emit = _Recorder(journal, {"worker": worker, "attempt_id": attempt_id, "episode": episode_index})
    emit("episode_start", root_id=prompt.root_id, directive=prompt.directive)
    messages: list[tuple[str, str]] = [("system", SYSTEM_PROMPT), ("user", prompt.rendered_prompt)]
    sketch = start
    usage = TokenUsage()
    edits = queries = turns = 0
    solved = False
    end_reason = ""
    lesson_text = ""
    last_text = ""
    diag: Diagnostics | None = None
    feedback_outcomes: dict[str, ProverOutcome] = {}

    def check_now() -> Diagnostics:
        d = backends.checker.check(sketch.render())
        emit("diagnostics", compiles=d.compiles, errors=[list(e) for e in d.errors], open_goals=list(d.open_goals))
        return d

    def is_solved(d: Diagnostics) -> bool:
        if not d.compiles or d.open_goals:
            return False
        return final_verify(sketch, backends.checker, disallowed, placeholder).passed

    try:
        while not end_reason:
            if stop is not None and stop.is_set():
                end_reason = "stopped"
                break
            if turns >= limits.max_turns:
                emit("limit", kind="turns", limit=limits.max_turns)
                end_reason = "turn_limit"
                break
            turns += 1
            response = backends.llm.generate(
                GenerationRequest(tuple(messages), max_turn_tokens, stream=worker)
            )
            usage = usage + response.usage
            last_text = response.text
            emit("turn", component="prover", turn=turns, usage=response.usage.to_dict(), text=response.text)
            messages.append(("assistant", _assistant_message(response.text, response.tool_calls)))
            replies: list[str] = []
            for call in response.tool_calls:
                if call.name == "search_replace":
                    if edits >= limits.max_edits:
                        emit("limit", kind="edits", limit=limits.max_edits)
                        end_reason = "edit_limit"
                        break
                    edits += 1
                    try:
                        sketch = apply_edit(sketch, SearchReplaceEdit(str(call.arguments.get("search", "")), str(call.arguments.get("replace", ""))))
                    except (EditError, ValueError) as exc:
                        emit("tool_call", name=call.name, arguments=call.arguments, result=f"error: {type(exc).__name__}: {exc}")
                        replies.append(f"[search_replace] rejected ({type(exc).__name__}): {exc}")
                        continue
                    emit("tool_call", name=call.name, arguments=call.arguments, result="ok")
                    diag = check_now()
                    replies.append(f"[search_replace] applied\n{diag.summary()}")
                    if is_solved(diag):
                        solved = True
                        end_reason = "solved"
                        break
                elif call.name == "focused_prove":
                    goal = str(call.arguments.get("goal", "")).strip()
                    if not allow_prover:
                        emit("tool_call", name=call.name, arguments=call.arguments, result="error: unavailable")
                        replies.append("[focused_prove] this tool is not available")
                        continue
                    if queries >= limits.max_prover_queries:
                        emit("limit", kind="prover_queries", limit=limits.max_prover_queries)
                        emit("tool_call", name=call.name, arguments=call.arguments, result="error: limit reached")
                        replies.append(f"[focused_prove] rejected: at most {limits.max_prover_queries} queries per episode")
                        continue
                    if not goal:
                        emit("tool_call", name=call.name, arguments=call.arguments, result="error: empty goal")
                        replies.append("[focused_prove] rejected: empty goal")
                        continue
                    queries += 1
                    outcome = _prove_cache_first(goal, backends, store, emit, seed + queries, source="tool")
                    feedback_outcomes[goal_key(goal)] = outcome
                    emit("tool_call", name=call.name, arguments=call.arguments, result=outcome.verdict)
                    reply = f"[focused_prove] {outcome.describe()}"
                    if outcome.verdict == "proved":
                        diag = diag or check_now()
                        spliced = splice_scripts(sketch, diag, {goal_key(goal): outcome.script}, placeholder)
                        if spliced.spliced:
                            sketch = spliced.sketch
                            diag = check_now()
                            reply += f"; substituted into the sketch\n{diag.summary()}"
                            if is_solved(diag):
                                solved = True
                                end_reason = "solved"
                                replies.append(reply)
                                break
                    replies.append(reply)
                elif call.name == "end_episode":
                    emit("tool_call", name=call.name, arguments=call.arguments, result="ok")
                    lesson_text = str(call.arguments.get("lesson", "") or "")
                    end_reason = "end_episode"
                    break
                else:
                    emit("tool_call", name=call.name, arguments=call.arguments, result="error: unknown tool")
                    replies.append(f"[{call.name}] unknown tool")
            if not end_reason:
                messages.append(("user", "\n\n".join(replies) if replies else "(no tool calls; continue or call end_episode)"))
    except BackendFailure as exc:
        exc.transcript = emit.transcript
        raise

    lesson = None
    if not solved:
        lesson_source = lesson_text or (last_text.strip().splitlines() or [DEFAULT_LESSON])[0]
        sketch, lesson = add_lesson(sketch, lesson_source)
    emit(
        "episode_end",
        solved=solved,
        reason=end_reason,
        edits=edits,
        prover_queries=queries,
        turns=turns,
        usage=usage.to_dict(),
    )
    return EpisodeOutcome(
        final_sketch=sketch,
        solved=solved,
        lesson_comment=lesson,
        transcript=emit.transcript,
        usage_total=usage,
        edits=edits,
        prover_queries=queries,
        turns=turns,
        end_reason=end_reason,
        plan_summary=lesson_text or last_text.strip(),
        prover_feedback=feedback_outcomes,
    )


def _assistant_message(text: str, calls: tuple[ToolCall, ...]) -> str:
    parts = [text] if text else []
    parts += [f"<tool {c.name}> {c.arguments}" for c in calls]
    return "\n".join(parts)


def _prove_cache_first(
    goal: str,
    backends: Backends,
    store: PopulationStore | None,
    emit: _Recorder,
    seed: int,
    source: str,
) -> ProverOutcome:
    key = goal_key(goal)
    if store is not None:
        entry = store.goal_lookup(key)
        if entry is not None and entry.outcome.is_verdict:
            emit("cache_hit", goal_key=key, verdict=entry.outcome.verdict, source=source)
            return entry.outcome
    if backends.prover is None:
        return ProverOutcome("failed", feedback="no focused prover configured")
    outcome = backends.prover.prove(goal, backends.budget, seed)
    emit("prover_dispatch", goal_key=key, goal=goal, verdict=outcome.verdict, source=source)
    if store is not None:
        try:
            store.goal_store(key, outcome)
        except ConflictingOutcome:
            emit("cache_conflict", goal_key=key, verdict=outcome.verdict)
    return outcome
