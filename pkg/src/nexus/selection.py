"""Parent selection by P-UCB over the Elo elite, and prompt assembly."""

from __future__ import annotations

import math
import random
import string
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping, Sequence

from .errors import MissingTemplateVariable, NoRatedSketch
from .population import PopulationStore, SketchRecord

DIRECTIVES = (
    "decompose unsolved goals",
    "combine ideas from prior attempts",
    "try a completely new approach",
    "",
)


def _uniform_directives() -> dict[str, float]:
    return {d: 1.0 / len(DIRECTIVES) for d in DIRECTIVES}


@dataclass(frozen=True)
class PUCBConfig:
    exploration_c: float = 0.2
    elite_size: int = 64
    n_inspirations: int = 2
    directive_weights: Mapping[str, float] = field(default_factory=_uniform_directives)

    def __post_init__(self) -> None:
        if self.exploration_c < 0:
            raise ValueError("exploration_c must be non-negative")
        if self.elite_size < 1:
            raise ValueError("elite_size must be >= 1")
        if self.n_inspirations < 0:
            raise ValueError("n_inspirations must be >= 0")
        weights = list(self.directive_weights.values())
        if not weights or any(w < 0 for w in weights) or not math.isclose(sum(weights), 1.0, abs_tol=1e-9):
            raise ValueError("directive weights must be non-negative and sum to 1")


@dataclass(frozen=True)
class PromptBundle:
    root_id: str
    inspiration_ids: tuple[str, ...]
    rendered_prompt: str
    directive: str


def pucb_scores(candidates: Sequence[tuple[float, int]], total_visits: int, c: float) -> list[float]:
    """``q + c * sqrt(total_visits) / (v + 1)`` with ``q`` the min-max normalised Elo.

    When every Elo is equal the normalisation is undefined and ``q = 1``.
    """
    if not candidates:
        raise ValueError("need at least one candidate")
    elos = [e for e, _ in candidates]
    lo, hi = min(elos), max(elos)
    bonus = c * math.sqrt(total_visits)
    scores = []
    for elo, visits in candidates:
        q = 1.0 if hi == lo else (elo - lo) / (hi - lo)
        scores.append(q + bonus / (visits + 1))
    return scores


def select_parent(store: PopulationStore, cfg: PUCBConfig, seed: int | None = None) -> str:
    """Pick the P-UCB argmax among the top ``elite_size`` rated sketches and count the visit.

    Ties go to the lowest id.  ``seed`` is accepted for interface symmetry;
    the choice itself is deterministic.
    """
    with store.lock:
        elite = store.top_by_elo(cfg.elite_size)
        if not elite:
            raise NoRatedSketch("population has no rated sketch")
        records = [store.get(i) for i in elite]
        total = sum(r.visits for r in records)
        scores = pucb_scores([(r.rating.elo, r.visits) for r in records], total, cfg.exploration_c)
        best = min(range(len(records)), key=lambda i: (-scores[i], records[i].id))
        winner = records[best].id
        store.increment_visits(winner)
        return winner


def pick_inspirations(store: PopulationStore, root_id: str, m: int) -> list[SketchRecord]:
    """The ``m`` highest-Elo rated records other than the root."""
    if m <= 0:
        return []
    ids = [i for i in store.top_by_elo(m + 1) if i != root_id][:m]
    return [store.get(i) for i in ids]


def load_template(name: str) -> str:
    """Read a bundled template (``prover``, ``rater`` or ``basic``)."""
    return resources.files("nexus.templates").joinpath(f"{name}.txt").read_text(encoding="utf-8")


def template_fields(template: str) -> list[str]:
    return [f for _, f, _, _ in string.Formatter().parse(template) if f is not None]


def render_template(template: str, values: Mapping[str, str]) -> str:
    """Substitute ``{name}`` fields without re-reading braces inside the values."""
    out = []
    for literal, name, spec, conv in string.Formatter().parse(template):
        out.append(literal)
        if name is None:
            continue
        if name not in values:
            raise MissingTemplateVariable(f"template variable {{{name}}} has no value")
        out.append(str(values[name]))
    return "".join(out)


def render_feedback(record: SketchRecord) -> str:
    if not record.goal_feedback:
        return "(no prover feedback)"
    lines = []
    for key, outcome in record.goal_feedback.items():
        lines.append(f"- goal {key[:12]}: {outcome.describe()}")
    return "\n".join(lines)


def render_inspirations(inspirations: Sequence[SketchRecord]) -> str:
    if not inspirations:
        return ""
    parts = ["## Prior attempts"]
    for n, rec in enumerate(inspirations, start=1):
        parts.append(
            f"### Attempt {n} (id {rec.id})\n"
            f"Elo: {rec.rating.elo:.1f}\n"
            f"Plan: {rec.plan_summary or '(none)'}\n"
            f"```\n{rec.sketch.render()}```\n"
            f"Prover feedback:\n{render_feedback(rec)}\n"
        )
    return "\n".join(parts)


def assemble_prompt(
    root: SketchRecord,
    inspirations: Sequence[SketchRecord],
    template: str,
    seed: int,
    cfg: PUCBConfig | None = None,
) -> PromptBundle:
    cfg = cfg or PUCBConfig()
    if "code" not in template_fields(template):
        raise MissingTemplateVariable("template must reference {code}")
    if len(inspirations) > cfg.n_inspirations:
        raise ValueError(f"at most {cfg.n_inspirations} inspirations allowed")
    insp = [r for r in inspirations if r.id != root.id]
    rng = random.Random(seed)
    names = list(cfg.directive_weights)
    directive = rng.choices(names, weights=[cfg.directive_weights[n] for n in names], k=1)[0]
    values = {
        "code": root.sketch.render(),
        "plan": root.plan_summary or "(none yet)",
        "feedback": render_feedback(root),
        "inspirations": render_inspirations(insp),
        "directive": f"Directive: {directive}." if directive else "",
    }
    return PromptBundle(root.id, tuple(r.id for r in insp), render_template(template, values), directive)


def render_players(records: Sequence[SketchRecord]) -> str:
    blocks = []
    for n, rec in enumerate(records, start=1):
        blocks.append(
            f"### Player P{n}\nPlan: {rec.plan_summary or '(none)'}\n"
            f"```\n{rec.sketch.render()}```\nProver feedback:\n{render_feedback(rec)}\n"
        )
    return "\n".join(blocks)
