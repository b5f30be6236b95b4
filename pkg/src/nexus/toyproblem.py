"""A bundled toy problem with replay scripts, for end-to-end runs without any model.

The target ``(2 + 3) * (4 + 5) = 45`` is stated in frozen text; its proof is
an EVOLVE-VALUE and helper lemmas go in the EVOLVE-BLOCK above it.  Two
scripted solution paths exist:

* the direct one closes the target with ``eval`` in a single edit;
* the decomposed one introduces three ``sorry`` lemmas chained by ``trans``;
  agent D leaves them to the focused prover, while agent C (which has no
  prover) writes them already closed.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .backends.types import GenerationResponse, TokenUsage, ToolCall
from .sketch import ProofSketch, parse_sketch

PROBLEM_TEXT = """\
-- Toy problem: show (2 + 3) * (4 + 5) = 45.
-- EVOLVE-BLOCK-START
-- helper lemmas go here
-- EVOLVE-BLOCK-END
lemma target : (2 + 3) * (4 + 5) = 45 := /- EVOLVE-VALUE -/ sorry /- END-EVOLVE-VALUE -/
"""

HELPERS = """\
lemma h1 : (2 + 3) * (4 + 5) = 5 * (4 + 5) := sorry
lemma h2 : 5 * (4 + 5) = 5 * 9 := sorry
lemma h3 : 5 * 9 = 45 := sorry"""

RANKING_REPLY = "Comparing the players on how much of the target each one settles.\nRANKING: P1 > P2"
TURN_USAGE = TokenUsage(1200, 800, 150)
RATER_USAGE = TokenUsage(2000, 0, 60)


def problem() -> ProofSketch:
    return parse_sketch(PROBLEM_TEXT)


def _reply(text: str, *calls: ToolCall, usage: TokenUsage = TURN_USAGE) -> dict[str, Any]:
    return GenerationResponse(text, tuple(calls), usage).to_dict()


def _edit(search: str, replace: str) -> ToolCall:
    return ToolCall("search_replace", {"search": search, "replace": replace})


def direct_turns() -> list[dict[str, Any]]:
    """One turn that closes the target by evaluation."""
    return [_reply("Both sides are closed numerals, so evaluation settles it.", _edit("sorry", "eval"))]


def decomposed_turns(close_helpers: bool = False) -> list[dict[str, Any]]:
    """Chain the target through three helpers, left open for the prover unless ``close_helpers``."""
    helpers = HELPERS.replace(":= sorry", ":= eval") if close_helpers else HELPERS
    return [
        _reply(
            "Plan: rewrite the left factor, then the right factor, then multiply.",
            _edit("sorry", "trans h1 h2 h3"),
        ),
        _reply(
            "Adding the three steps as separate lemmas.",
            _edit("-- helper lemmas go here", helpers),
        ),
        _reply(
            "The chain compiles; ending the episode.",
            ToolCall("end_episode", {"lesson": "decomposed the target into three arithmetic steps"}),
        ),
    ]


def replay_document(streams: dict[str, list[dict[str, Any]]], repeat: tuple[str, ...] = ()) -> dict[str, Any]:
    return {"format": "nexus-replay-script", "version": 1, "streams": streams, "repeat": list(repeat)}


def script_for(agent_kind: str) -> dict[str, Any]:
    """A and B take the direct path; C and D decompose; C closes the helpers itself, D leaves them to validation."""
    if agent_kind in ("A", "B"):
        return replay_document({"prover-0": direct_turns()})
    turns = decomposed_turns(close_helpers=agent_kind == "C")
    rater = [_reply(RANKING_REPLY, usage=RATER_USAGE)]
    return replay_document({"prover-0": turns, "rater-0": rater}, repeat=("rater-0",))


def write_bundle(directory: str | Path, agent_kind: str = "D") -> Path:
    """Write the problem, a replay script and a manifest; returns the manifest path."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    (out / "problem.toy").write_text(PROBLEM_TEXT, encoding="utf-8")
    (out / "script.json").write_text(json.dumps(script_for(agent_kind), indent=2), encoding="utf-8")
    manifest = out / "manifest.toml"
    manifest.write_text(
        "\n".join(
            [
                'problem_file = "problem.toy"',
                f'agent_kind = "{agent_kind}"',
                "n_subagents = 1",
                "episode_budget = 5",
                "seed = 7",
                "",
                "[llm]",
                'backend = "replay"',
                'script = "script.json"',
                "",
                "[checker]",
                'backend = "toy"',
                "",
                "[prover]",
                f'backend = "{"sim" if agent_kind in ("B", "D") else "none"}"',
                "",
            ]
        ),
        encoding="utf-8",
    )
    return manifest
