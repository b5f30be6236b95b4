"""The shared population database: sketch records, match log, visits and the goal cache.

All public operations are linearizable: they run under one re-entrant lock,
which callers may also hold (``with store.lock:``) to compose a
read-select-increment sequence atomically.
"""

from __future__ import annotations

import hashlib
import itertools
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

from .backends.types import ProverOutcome
from .errors import ConflictingOutcome, DuplicateId, MissingParent, UnknownPlayer
from .journal import Journal, read_journal
from .sketch import ProofSketch, parse_sketch

UNRATED_ELO = 1200.0


@dataclass(frozen=True)
class RatingState:
    strength_samples: tuple[float, ...] = ()
    thinned_samples: tuple[float, ...] = ()
    strength_mean: float | None = None
    strength_var: float | None = None
    elo: float = UNRATED_ELO
    rated: bool = False


@dataclass
class SketchRecord:
    id: str
    sketch: ProofSketch
    parent_id: str | None = None
    plan_summary: str = ""
    goal_feedback: dict[str, ProverOutcome] = field(default_factory=dict)
    visits: int = 0
    rating: RatingState = field(default_factory=RatingState)
    created_at: int = 0


@dataclass(frozen=True)
class MatchResult:
    players: tuple[str, ...]
    raw_ranking: tuple[tuple[str, ...], ...] = ()
    rater_id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "players", tuple(self.players))
        object.__setattr__(self, "raw_ranking", tuple(tuple(g) for g in self.raw_ranking))
        if len(self.players) < 2:
            raise ValueError("a match needs at least two players")
        if len(set(self.players)) != len(self.players):
            raise ValueError("match players must be distinct")

    def to_dict(self) -> dict[str, Any]:
        return {
            "players": list(self.players),
            "raw_ranking": [list(g) for g in self.raw_ranking],
            "rater_id": self.rater_id,
        }


@dataclass
class GoalCacheEntry:
    goal_key: str
    outcome: ProverOutcome
    hits: int = 0


def normalize_goal(text: str) -> str:
    return " ".join(text.split())


def goal_key(text: str) -> str:
    """Content address of a goal: SHA-256 of the whitespace-collapsed text."""
    return hashlib.sha256(normalize_goal(text).encode("utf-8")).hexdigest()


class PopulationStore:
    def __init__(self, journal: Journal | None = None):
        self.journal = journal
        self.lock = threading.RLock()
        self._records: dict[str, SketchRecord] = {}
        self._matches: list[MatchResult] = []
        self._cache: dict[str, GoalCacheEntry] = {}
        self._clock = itertools.count(1)
        self._ids = itertools.count(1)
        # called with the store after every recorded match (rating refresh)
        self.on_match: Callable[[PopulationStore], None] | None = None

    def _log(self, kind: str, payload: dict[str, Any]) -> None:
        if self.journal is not None:
            self.journal.append(kind, payload)

    # --- records -----------------------------------------------------------

    def new_id(self) -> str:
        with self.lock:
            while True:
                candidate = f"s{next(self._ids):06d}"
                if candidate not in self._records:
                    return candidate

    def insert_sketch(self, record: SketchRecord) -> str:
        with self.lock:
            if record.id in self._records:
                raise DuplicateId(record.id)
            if record.parent_id is not None and record.parent_id not in self._records:
                raise MissingParent(record.parent_id)
            record.created_at = next(self._clock)
            self._records[record.id] = record
            self._log(
                "insert",
                {
                    "id": record.id,
                    "parent_id": record.parent_id,
                    "text": record.sketch.render(),
                    "plan_summary": record.plan_summary,
                    "goal_feedback": {k: v.to_dict() for k, v in record.goal_feedback.items()},
                    "created_at": record.created_at,
                },
            )
            return record.id

    def get(self, record_id: str) -> SketchRecord:
        with self.lock:
            return self._records[record_id]

    def __contains__(self, record_id: object) -> bool:
        with self.lock:
            return record_id in self._records

    def __len__(self) -> int:
        with self.lock:
            return len(self._records)

    def records(self) -> list[SketchRecord]:
        """All records in insertion order."""
        with self.lock:
            return list(self._records.values())

    def increment_visits(self, record_id: str) -> int:
        with self.lock:
            rec = self._records[record_id]
            rec.visits += 1
            self._log("visit", {"id": record_id, "visits": rec.visits})
            return rec.visits

    def top_by_elo(self, n: int) -> list[str]:
        """Rated records by Elo, highest first; equal Elo goes to the older record."""
        if n < 1:
            raise ValueError("n must be >= 1")
        with self.lock:
            rated = [r for r in self._records.values() if r.rating.rated]
            rated.sort(key=lambda r: (-r.rating.elo, r.created_at))
            return [r.id for r in rated[:n]]

    def publish_ratings(self, ratings: dict[str, RatingState], meta: dict[str, Any] | None = None) -> None:
        with self.lock:
            for rid, state in ratings.items():
                self._records[rid].rating = state
            self._log(
                "ratings",
                {
                    "meta": meta or {},
                    "summary": {
                        rid: {"mean": s.strength_mean, "var": s.strength_var, "elo": s.elo}
                        for rid, s in sorted(ratings.items())
                    },
                },
            )

    # --- matches -----------------------------------------------------------

    def record_match(self, result: MatchResult) -> None:
        with self.lock:
            unknown = [p for p in result.players if p not in self._records]
            if unknown:
                raise UnknownPlayer(", ".join(unknown))
            self._matches.append(result)
            self._log("match", result.to_dict())
            hook = self.on_match
        if hook is not None:
            hook(self)

    def matches(self) -> list[MatchResult]:
        with self.lock:
            return list(self._matches)

    # --- goal cache ----------------------------------------------------------

    def goal_lookup(self, key: str) -> GoalCacheEntry | None:
        with self.lock:
            entry = self._cache.get(key)
            if entry is None:
                return None
            entry.hits += 1
            self._log("goal_hit", {"goal_key": key, "hits": entry.hits})
            return replace(entry)

    def goal_peek(self, key: str) -> GoalCacheEntry | None:
        """Read an entry without counting a hit."""
        with self.lock:
            entry = self._cache.get(key)
            return replace(entry) if entry is not None else None

    def goal_store(self, key: str, outcome: ProverOutcome) -> None:
        """Store an outcome; failures may be upgraded, verdicts are final."""
        with self.lock:
            entry = self._cache.get(key)
            if entry is not None:
                old = entry.outcome
                if old.is_verdict:
                    if outcome.is_verdict and outcome.verdict != old.verdict:
                        raise ConflictingOutcome(f"{key}: {old.verdict} vs {outcome.verdict}")
                    return
                entry.outcome = outcome
            else:
                self._cache[key] = GoalCacheEntry(key, outcome)
            self._log("goal_store", {"goal_key": key, "outcome": outcome.to_dict()})

    def cache_entries(self) -> dict[str, GoalCacheEntry]:
        with self.lock:
            return {k: replace(v) for k, v in self._cache.items()}

    # --- persistence ---------------------------------------------------------

    @classmethod
    def replay(cls, path: str | Path, recompute_samples: bool = True) -> PopulationStore:
        """Rebuild store state from a journal file."""
        store = cls()
        last_ratings: dict[str, Any] | None = None
        for event in read_journal(path):
            kind, p = event["event_kind"], event["payload"]
            if kind == "insert":
                rec = SketchRecord(
                    id=p["id"],
                    sketch=parse_sketch(p["text"]),
                    parent_id=p.get("parent_id"),
                    plan_summary=p.get("plan_summary", ""),
                    goal_feedback={k: ProverOutcome.from_dict(v) for k, v in p.get("goal_feedback", {}).items()},
                )
                store.insert_sketch(rec)
            elif kind == "visit":
                store._records[p["id"]].visits = p["visits"]
            elif kind == "match":
                store._matches.append(
                    MatchResult(tuple(p["players"]), tuple(tuple(g) for g in p["raw_ranking"]), p["rater_id"])
                )
            elif kind == "goal_store":
                store.goal_store(p["goal_key"], ProverOutcome.from_dict(p["outcome"]))
            elif kind == "goal_hit":
                store._cache[p["goal_key"]].hits = p["hits"]
            elif kind == "ratings":
                last_ratings = p
        if last_ratings is not None:
            meta = last_ratings.get("meta") or {}
            if recompute_samples and meta.get("seed") is not None:
                from .rating import GibbsConfig, refresh_ratings

                cfg = GibbsConfig(**meta["cfg"]) if meta.get("cfg") else GibbsConfig(seed=meta["seed"])
                states = refresh_ratings(store, cfg, publish=False, n_matches=meta.get("n_matches"))
            else:
                states = {
                    rid: RatingState(strength_mean=s["mean"], strength_var=s["var"], elo=s["elo"], rated=True)
                    for rid, s in last_ratings["summary"].items()
                }
            for rid, state in states.items():
                store._records[rid].rating = state
        return store
