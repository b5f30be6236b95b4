"""Exception hierarchy shared across the package."""

from __future__ import annotations


class NexusError(Exception):
    """Base class for all errors raised by this package."""


# sketch
class MarkerError(NexusError):
    """Malformed EVOLVE marker layout."""


class UnbalancedMarkers(MarkerError):
    pass


class NestedMarkers(MarkerError):
    pass


class EditError(NexusError):
    """A search-and-replace edit could not be applied."""


class SearchNotFound(EditError):
    pass


class AmbiguousSearch(EditError):
    pass


class FrozenRegionTouched(EditError):
    pass


class ValueLineBreak(EditError):
    """A replacement would put a line break into an inline value region."""


# population
class StoreError(NexusError):
    pass


class DuplicateId(StoreError):
    pass


class MissingParent(StoreError):
    pass


class UnknownPlayer(StoreError):
    pass


class ConflictingOutcome(StoreError):
    pass


class JournalError(NexusError):
    """A journal file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


# rating
class RatingError(NexusError):
    pass


class EmptyMatchLog(RatingError):
    pass


class UnknownIdInMatch(RatingError):
    pass


class NonPositiveStrength(RatingError, ValueError):
    pass


class PopulationTooSmall(RatingError):
    pass


# selection
class NoRatedSketch(NexusError):
    pass


class MissingTemplateVariable(NexusError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


# backends
class BackendFailure(NexusError):
    """A backend call failed; carries the transcript gathered so far when raised by an episode."""

    def __init__(self, message: str, transcript: list | None = None):
        super().__init__(message)
        self.transcript = transcript or []


class TransportError(BackendFailure):
    pass


class ScriptExhausted(BackendFailure):
    pass


class CheckerUnavailable(BackendFailure):
    pass


class InvalidRequest(NexusError, ValueError):
    pass


# validate
class SpliceOutsideEditable(NexusError):
    pass


# evalkit
class IndivisibleChunking(NexusError, ValueError):
    pass


# cli
class ManifestError(NexusError):
    def __init__(self, path: str, field: str, message: str):
        self.path = path
        self.field = field
        super().__init__(f"{path}: field '{field}': {message}")


class NotReplayable(NexusError):
    pass
