"""Sketch checkers: the in-process toy checker and an external-command adapter."""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from typing import Protocol

from ..errors import CheckerUnavailable
from .toylang import toy_check
from .types import Diagnostics


class Checker(Protocol):
    concurrent_safe: bool

    def check(self, sketch_text: str) -> Diagnostics: ...


class ToyChecker:
    concurrent_safe = True

    def check(self, sketch_text: str) -> Diagnostics:
        return toy_check(sketch_text)


def parse_diagnostic_lines(output: str) -> tuple[list[tuple[str, str]], list[str], bool]:
    """Parse the line protocol ``ERROR <line>:<col> <msg>`` / ``GOAL <id> <text>`` / ``OK``.

    Returns ``(errors, goals, saw_ok)``; unrecognised lines are ignored.
    """
    errors: list[tuple[str, str]] = []
    goals: list[str] = []
    saw_ok = False
    for raw in output.splitlines():
        line = raw.strip()
        if line == "OK":
            saw_ok = True
        elif line.startswith("ERROR "):
            parts = line.split(" ", 2)
            errors.append((parts[1], parts[2] if len(parts) > 2 else ""))
        elif line.startswith("GOAL "):
            parts = line.split(" ", 2)
            if len(parts) == 3:
                goals.append(parts[2])
    return errors, goals, saw_ok


class CommandChecker:
    """Runs a user-configured compiler command on a temporary copy of the sketch.

    ``command`` is a template such as ``"lake env lean-adapter {file}"``; the
    tool must print the line protocol understood by :func:`parse_diagnostic_lines`.
    """

    concurrent_safe = True

    def __init__(self, command: str, timeout_s: float = 600.0, suffix: str = ".lean"):
        if "{file}" not in command:
            raise ValueError("checker command template must contain {file}")
        self.command = command
        self.timeout_s = timeout_s
        self.suffix = suffix

    def check(self, sketch_text: str) -> Diagnostics:
        fd, path = tempfile.mkstemp(suffix=self.suffix)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(sketch_text)
            argv = [part.replace("{file}", path) for part in shlex.split(self.command)]
            try:
                proc = subprocess.run(argv, capture_output=True, text=True, timeout=self.timeout_s)
            except FileNotFoundError as exc:
                raise CheckerUnavailable(f"checker command not found: {argv[0]}") from exc
            except subprocess.TimeoutExpired as exc:
                raise CheckerUnavailable(f"checker timed out after {self.timeout_s}s") from exc
        finally:
            os.unlink(path)
        errors, goals, saw_ok = parse_diagnostic_lines(proc.stdout)
        if proc.returncode != 0 and not errors:
            tail = (proc.stderr or proc.stdout).strip().splitlines()[-1:] or ["no output"]
            errors.append(("0:0", f"checker exited with status {proc.returncode}: {tail[0]}"))
        if not errors and not saw_ok and not goals:
            errors.append(("0:0", "checker produced neither OK nor GOAL lines"))
        return Diagnostics(not errors, tuple(errors), tuple(goals))
