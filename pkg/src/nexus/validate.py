"""Sandbox integrity checks, cached-goal incorporation and final proof verification."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Protocol, Sequence

from .backends.checker import Checker
from .backends.types import Diagnostics, ProverOutcome
from .errors import MarkerError
from .population import GoalCacheEntry, goal_key
from .sketch import (
    DEFAULT_PLACEHOLDER,
    ProofSketch,
    find_sorries,
    mask_comments,
    parse_sketch,
    protected_digest,
    token_offsets,
)

DEFAULT_DISALLOWED = ("sorryAx",)


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.code}: {self.detail}" if self.detail else self.code


@dataclass(frozen=True)
class Verdict:
    passed: bool
    reasons: tuple[Violation, ...] = ()

    def __post_init__(self) -> None:
        if not self.passed and not self.reasons:
            raise ValueError("a failing verdict needs a reason")

    @property
    def codes(self) -> list[str]:
        return [r.code for r in self.reasons]

    @classmethod
    def from_reasons(cls, reasons: Sequence[Violation]) -> Verdict:
        return cls(not reasons, tuple(reasons))


def sandbox_check(original: ProofSketch, candidate: ProofSketch, checker: Checker) -> Verdict:
    """Pass iff the frozen text is untouched and the candidate compiles (placeholders allowed).

    The candidate is re-parsed from its rendered text so marker lines smuggled
    into an editable region show up as a structural change.
    """
    reasons: list[Violation] = []
    text = candidate.render()
    try:
        reparsed = parse_sketch(text)
    except MarkerError as exc:
        reasons.append(Violation("MarkerCorrupted", str(exc)))
        reparsed = candidate
    if [r.kind for r in reparsed.regions] != [r.kind for r in original.regions]:
        reasons.append(Violation("StructureChanged", "region layout differs from the original"))
    if protected_digest(reparsed) != protected_digest(original):
        reasons.append(Violation("StatementAltered", "frozen text differs from the original"))
    diag = checker.check(text)
    if not diag.compiles:
        loc, msg = diag.errors[0]
        reasons.append(Violation("CompileError", f"{loc} {msg}"))
    return Verdict.from_reasons(reasons)


class GoalCache(Protocol):
    def goal_lookup(self, key: str) -> GoalCacheEntry | None: ...


@dataclass
class Incorporation:
    sketch: ProofSketch
    unresolved: list[str]
    spliced: list[str] = field(default_factory=list)
    feedback: dict[str, ProverOutcome] = field(default_factory=dict)
    issues: list[Violation] = field(default_factory=list)

    def __iter__(self) -> Iterator:
        # unpacks as (sketch, unresolved keys)
        return iter((self.sketch, self.unresolved))


def splice_scripts(
    sketch: ProofSketch,
    diagnostics: Diagnostics,
    scripts: Mapping[str, str],
    token: str = DEFAULT_PLACEHOLDER,
) -> Incorporation:
    """Replace the placeholder paired with each goal that has a script.

    Goals pair with placeholder sites in document order; if the counts differ
    nothing is spliced and a ``GoalSiteMismatch`` issue is reported.
    """
    keys = [goal_key(g) for g in diagnostics.open_goals]
    sites = find_sorries(sketch, token)
    if len(sites) != len(keys):
        issue = Violation("GoalSiteMismatch", f"{len(keys)} open goals but {len(sites)} placeholders")
        return Incorporation(sketch, keys, issues=[issue])
    edits: dict[int, list[tuple[int, str]]] = {}
    unresolved, spliced, issues = [], [], []
    for key, site in zip(keys, sites):
        script = scripts.get(key)
        if script is None:
            unresolved.append(key)
        elif not sketch.regions[site.region_index].editable:
            issues.append(Violation("SpliceOutsideEditable", f"goal {key[:12]} sits in frozen text"))
            unresolved.append(key)
        else:
            edits.setdefault(site.region_index, []).append((site.offset, script))
            spliced.append(key)
    out = sketch
    for index, region_edits in edits.items():
        text = out.regions[index].text
        for offset, script in sorted(region_edits, reverse=True):
            text = text[:offset] + script + text[offset + len(token):]
        out = out.replace_region(index, text)
    return Incorporation(out, unresolved, spliced, issues=issues)


def incorporate_cached_goals(
    sketch: ProofSketch,
    diagnostics: Diagnostics,
    cache: GoalCache,
    token: str = DEFAULT_PLACEHOLDER,
) -> Incorporation:
    """Splice cached proofs for open goals; disproofs and failures come back as feedback."""
    if not diagnostics.open_goals:
        return Incorporation(sketch, [])
    scripts: dict[str, str] = {}
    feedback: dict[str, ProverOutcome] = {}
    for goal in diagnostics.open_goals:
        key = goal_key(goal)
        if key in scripts or key in feedback:
            continue
        entry = cache.goal_lookup(key)
        if entry is None:
            continue
        feedback[key] = entry.outcome
        if entry.outcome.verdict == "proved":
            scripts[key] = entry.outcome.script
    result = splice_scripts(sketch, diagnostics, scripts, token)
    result.feedback = feedback
    return result


def final_verify(
    sketch: ProofSketch,
    checker: Checker,
    disallowed: Sequence[str] = DEFAULT_DISALLOWED,
    token: str = DEFAULT_PLACEHOLDER,
) -> Verdict:
    """Pass iff it compiles with no open goals, no placeholders, and no disallowed tokens outside comments."""
    reasons: list[Violation] = []
    text = sketch.render()
    diag = checker.check(text)
    if not diag.compiles:
        loc, msg = diag.errors[0]
        reasons.append(Violation("CompileError", f"{loc} {msg}"))
    elif diag.open_goals:
        reasons.append(Violation("GoalsRemain", f"{len(diag.open_goals)} open goals"))
    n_sorry = len(find_sorries(sketch, token))
    if n_sorry:
        reasons.append(Violation("SorryRemains", f"{n_sorry} placeholders"))
    masked = mask_comments(text)
    for bad in disallowed:
        hits = token_offsets(masked, bad)
        if hits:
            reasons.append(Violation("DisallowedToken", f"{bad} at offset {hits[0]}"))
    return Verdict.from_reasons(reasons)
