"""Proof sketches: marker parsing, protected-region edits and placeholder scanning.

A sketch file is split into alternating frozen and editable regions.  Two
marker forms are recognised:

* a multi-line block, each marker on its own line::

      -- EVOLVE-BLOCK-START
      lemma helper : 1+1 = 2 := sorry
      -- EVOLVE-BLOCK-END

* an inline value, at most one per line::

      lemma target : 6*7 = /- EVOLVE-VALUE -/ 42 /- END-EVOLVE-VALUE -/ := eval

Marker text always belongs to the neighbouring frozen regions, so the
editable regions hold exactly the bytes between the markers.  Frozen regions
therefore sit at even indices and editable ones at odd indices, and
``render(parse_sketch(t)) == t`` for every well-formed ``t``.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from typing import Iterator, Literal

from .errors import (
    AmbiguousSearch,
    FrozenRegionTouched,
    MarkerError,
    NestedMarkers,
    SearchNotFound,
    UnbalancedMarkers,
    ValueLineBreak,
)

BLOCK_START = "-- EVOLVE-BLOCK-START"
BLOCK_END = "-- EVOLVE-BLOCK-END"
VALUE_OPEN = "/- EVOLVE-VALUE -/"
VALUE_CLOSE = "/- END-EVOLVE-VALUE -/"
DEFAULT_PLACEHOLDER = "sorry"

RegionKind = Literal["frozen", "evolve_block", "evolve_value"]


@dataclass(frozen=True)
class Region:
    kind: RegionKind
    text: str

    @property
    def editable(self) -> bool:
        return self.kind != "frozen"


@dataclass(frozen=True)
class SearchReplaceEdit:
    search: str
    replace: str

    def __post_init__(self) -> None:
        if not self.search:
            raise ValueError("search string must be non-empty")


@dataclass(frozen=True)
class SorrySite:
    region_index: int
    offset: int


def _digest(data: str) -> str:
    return hashlib.sha256(data.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ProofSketch:
    regions: tuple[Region, ...]
    source_digest: str = field(init=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "regions", tuple(self.regions))
        object.__setattr__(self, "source_digest", _digest(self.render()))

    def render(self) -> str:
        return "".join(r.text for r in self.regions)

    @property
    def text(self) -> str:
        return self.render()

    def editable_indices(self) -> list[int]:
        return [i for i, r in enumerate(self.regions) if r.editable]

    def frozen_text(self) -> str:
        return "".join(r.text for r in self.regions if not r.editable)

    def region_spans(self) -> list[tuple[int, int]]:
        """Absolute ``[start, end)`` offsets of every region in the rendered text."""
        spans = []
        pos = 0
        for r in self.regions:
            spans.append((pos, pos + len(r.text)))
            pos += len(r.text)
        return spans

    def locate(self, offset: int) -> tuple[int, int]:
        """Map an absolute offset to ``(region_index, offset_in_region)``."""
        for i, (start, end) in enumerate(self.region_spans()):
            if start <= offset < end:
                return i, offset - start
        last = len(self.regions) - 1
        return last, offset - self.region_spans()[last][0]

    def replace_region(self, index: int, text: str) -> ProofSketch:
        region = self.regions[index]
        if not region.editable:
            raise FrozenRegionTouched(f"region {index} is frozen")
        regions = list(self.regions)
        regions[index] = Region(region.kind, text)
        return ProofSketch(tuple(regions))


def _marker_error_for_stray(line: str, lineno: int) -> None:
    for marker in (BLOCK_START, BLOCK_END):
        if marker in line and line.strip() != marker:
            raise MarkerError(f"line {lineno}: '{marker}' must stand on its own line")


def parse_sketch(text: str) -> ProofSketch:
    """Split ``text`` into frozen and editable regions."""
    regions: list[Region] = []
    frozen = ""
    block: str | None = None
    for lineno, line in enumerate(text.splitlines(keepends=True), start=1):
        stripped = line.strip()
        if stripped == BLOCK_START:
            if block is not None:
                raise NestedMarkers(f"line {lineno}: EVOLVE-BLOCK opened inside another block")
            regions.append(Region("frozen", frozen + line))
            frozen, block = "", ""
            continue
        if stripped == BLOCK_END:
            if block is None:
                raise UnbalancedMarkers(f"line {lineno}: EVOLVE-BLOCK-END without matching start")
            regions.append(Region("evolve_block", block))
            frozen, block = line, None
            continue
        _marker_error_for_stray(line, lineno)
        n_open, n_close = line.count(VALUE_OPEN), line.count(VALUE_CLOSE)
        if block is not None:
            if n_open or n_close:
                raise NestedMarkers(f"line {lineno}: EVOLVE-VALUE inside an EVOLVE-BLOCK")
            block += line
            continue
        if n_open == 0 and n_close == 0:
            frozen += line
            continue
        if n_open != n_close:
            raise UnbalancedMarkers(f"line {lineno}: EVOLVE-VALUE markers must open and close on one line")
        if n_open > 1:
            raise MarkerError(f"line {lineno}: at most one EVOLVE-VALUE per line")
        i_open = line.index(VALUE_OPEN)
        i_close = line.index(VALUE_CLOSE)
        if i_close < i_open:
            raise UnbalancedMarkers(f"line {lineno}: END-EVOLVE-VALUE before EVOLVE-VALUE")
        cut = i_open + len(VALUE_OPEN)
        regions.append(Region("frozen", frozen + line[:cut]))
        regions.append(Region("evolve_value", line[cut:i_close]))
        frozen = line[i_close:]
    if block is not None:
        raise UnbalancedMarkers("EVOLVE-BLOCK-START without matching end")
    regions.append(Region("frozen", frozen))
    return ProofSketch(tuple(regions))


def _occurrences(haystack: str, needle: str) -> Iterator[int]:
    # overlapping matches count: "aa" occurs twice in "aaa"
    start = haystack.find(needle)
    while start != -1:
        yield start
        start = haystack.find(needle, start + 1)


def apply_edit(sketch: ProofSketch, edit: SearchReplaceEdit) -> ProofSketch:
    """Replace the unique occurrence of ``edit.search`` inside an editable region."""
    hits = [
        (i, pos)
        for i in sketch.editable_indices()
        for pos in _occurrences(sketch.regions[i].text, edit.search)
    ]
    if len(hits) > 1:
        raise AmbiguousSearch(f"search string occurs {len(hits)} times in editable regions")
    if not hits:
        if edit.search in sketch.render():
            raise FrozenRegionTouched("search string only occurs in frozen text or across a region boundary")
        raise SearchNotFound("search string not found")
    index, pos = hits[0]
    old = sketch.regions[index].text
    new = old[:pos] + edit.replace + old[pos + len(edit.search):]
    if sketch.regions[index].kind == "evolve_value" and ("\n" in new or "\r" in new):
        raise ValueLineBreak("EVOLVE-VALUE regions cannot contain line breaks")
    return sketch.replace_region(index, new)


# --- lexical helpers -------------------------------------------------------

_OPENERS = re.compile(r'"|--|/-')
_BLOCK_EDGE = re.compile(r"/-|-/")
_NOT_NEWLINE = re.compile(r"[^\n]")


def mask_comments(text: str) -> str:
    """Blank out Lean-style comments, keeping offsets and newlines intact.

    Handles ``--`` line comments and nestable ``/- ... -/`` block comments;
    string literals are skipped so comment openers inside them are ignored.
    """
    out: list[str] = []
    i, n = 0, len(text)
    while i < n:
        m = _OPENERS.search(text, i)
        if m is None:
            break
        start = m.start()
        out.append(text[i:start])
        token = m.group()
        if token == '"':
            j = start + 1
            while j < n and text[j] != '"':
                j += 2 if text[j] == "\\" else 1
            end = min(j + 1, n)
            out.append(text[start:end])
        elif token == "--":
            nl = text.find("\n", start)
            end = n if nl == -1 else nl
            out.append(" " * (end - start))
        else:
            depth, j = 0, start
            end = n
            for edge in _BLOCK_EDGE.finditer(text, start):
                if edge.start() < j:
                    continue  # overlapping match such as "/-/"
                depth += 1 if edge.group() == "/-" else -1
                j = edge.end()
                if depth == 0:
                    end = j
                    break
            out.append(_NOT_NEWLINE.sub(" ", text[start:end]))
        i = end
    out.append(text[i:])
    return "".join(out)


def is_ident_char(c: str) -> bool:
    return c.isalnum() or c in "_'"


def token_offsets(text: str, token: str) -> list[int]:
    """Offsets of ``token`` where it is not part of a longer identifier."""
    found = []
    for pos in _occurrences(text, token):
        before = text[pos - 1] if pos > 0 else ""
        after_i = pos + len(token)
        after = text[after_i] if after_i < len(text) else ""
        if (before and is_ident_char(before)) or (after and is_ident_char(after)):
            continue
        found.append(pos)
    return found


def find_sorries(sketch: ProofSketch, token: str = DEFAULT_PLACEHOLDER) -> list[SorrySite]:
    """Standalone placeholder occurrences outside comments, in document order."""
    masked = mask_comments(sketch.render())
    return [SorrySite(*sketch.locate(pos)) for pos in token_offsets(masked, token)]


def protected_digest(sketch: ProofSketch) -> str:
    """SHA-256 over the frozen bytes only."""
    return _digest(sketch.frozen_text())
