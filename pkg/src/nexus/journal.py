"""Append-only JSONL event journal.

The first line is a schema header; every following line is one event::

    {"schema": "nexus-journal", "version": 1}
    {"seq": 1, "event_kind": "insert", "logical_time": 1, "wall_time": 1730000000.0, "payload": {...}}

``logical_time`` is the event's position in the journal and is what the
evaluator and the replay harness rely on; ``wall_time`` is informational.
"""

from __future__ import annotations

import json
import threading
import time
from pathlib import Path
from typing import Any, Callable, Iterable

from .errors import JournalError

SCHEMA = "nexus-journal"
VERSION = 1
SEMANTIC_DROP = ("wall_time",)


class Journal:
    def __init__(self, path: str | Path | None = None, clock: Callable[[], float] = time.time):
        self.path = Path(path) if path is not None else None
        self.clock = clock
        self.events: list[dict[str, Any]] = []
        self._lock = threading.Lock()
        self._fh = None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = self.path.open("w", encoding="utf-8")
            self._fh.write(json.dumps({"schema": SCHEMA, "version": VERSION}) + "\n")
            self._fh.flush()

    def append(self, kind: str, payload: dict[str, Any] | None = None) -> dict[str, Any]:
        with self._lock:
            seq = len(self.events) + 1
            event = {
                "seq": seq,
                "event_kind": kind,
                "logical_time": seq,
                "wall_time": self.clock(),
                "payload": payload or {},
            }
            self.events.append(event)
            if self._fh is not None:
                self._fh.write(json.dumps(event, ensure_ascii=False, sort_keys=True) + "\n")
                self._fh.flush()
            return event

    def count(self, kind: str) -> int:
        with self._lock:
            return sum(1 for e in self.events if e["event_kind"] == kind)

    def of_kind(self, kind: str) -> list[dict[str, Any]]:
        with self._lock:
            return [e for e in self.events if e["event_kind"] == kind]

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> Journal:
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


def read_journal(path: str | Path) -> list[dict[str, Any]]:
    """Load events from a journal file, validating the header and each line."""
    events = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise JournalError(f"{path}: invalid JSON ({exc.msg})", lineno) from exc
            if lineno == 1:
                if not isinstance(obj, dict) or obj.get("schema") != SCHEMA:
                    raise JournalError(f"{path}: missing '{SCHEMA}' header", lineno)
                if obj.get("version") != VERSION:
                    raise JournalError(f"{path}: unsupported journal version {obj.get('version')}", lineno)
                continue
            if not isinstance(obj, dict) or "event_kind" not in obj or "payload" not in obj:
                raise JournalError(f"{path}: event needs 'event_kind' and 'payload'", lineno)
            events.append(obj)
    if not events and not Path(path).read_text(encoding="utf-8").strip():
        raise JournalError(f"{path}: empty journal", 1)
    return events


def semantic_events(events: Iterable[dict[str, Any]]) -> list[dict[str, Any]]:
    """Events with wall-clock fields removed, for byte-level run comparison."""
    return [{k: v for k, v in e.items() if k not in SEMANTIC_DROP} for e in events]


def semantic_bytes(events: Iterable[dict[str, Any]]) -> bytes:
    lines = (json.dumps(e, ensure_ascii=False, sort_keys=True) for e in semantic_events(events))
    return ("\n".join(lines) + "\n").encode("utf-8")
