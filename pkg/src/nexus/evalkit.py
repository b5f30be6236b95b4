"""Cost accounting and chunked solve-rate estimation over attempt logs.

An attempt is one independent run of a subagent (or of a whole evolutionary
pool).  Chunking ``chunk_size`` attempts together simulates that many
attempts running in parallel: the chunk succeeds if any member does, and its
cost is everything its members spent up to the earliest success.
"""

from __future__ import annotations

import csv
import io
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

from .backends.types import TokenUsage
from .errors import IndivisibleChunking

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

COMPONENTS = ("prover", "rater")


@dataclass(frozen=True)
class Rates:
    p_input: float = 0.0
    p_cache: float = 0.0
    p_output: float = 0.0

    def __post_init__(self) -> None:
        for name in ("p_input", "p_cache", "p_output"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a finite non-negative number (got {value!r})")


@dataclass(frozen=True)
class PriceTable:
    """Per-token rates for each component.  A component that is not listed costs nothing."""

    rates: Mapping[str, Rates] = field(default_factory=dict)

    def for_component(self, component: str) -> Rates:
        return self.rates.get(component, Rates())

    @classmethod
    def uniform(cls, p_input: float, p_cache: float, p_output: float) -> PriceTable:
        r = Rates(p_input, p_cache, p_output)
        return cls({c: r for c in COMPONENTS})

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> PriceTable:
        rates = {}
        for component, table in data.items():
            if not isinstance(table, Mapping):
                raise ValueError(f"[{component}] must be a table of rates")
            unknown = set(table) - {"p_input", "p_cache", "p_output"}
            if unknown:
                raise ValueError(f"[{component}] has unknown keys {sorted(unknown)}")
            rates[component] = Rates(**{k: float(v) for k, v in table.items()})
        return cls(rates)

    @classmethod
    def load(cls, path: str | Path) -> PriceTable:
        """Read a TOML file with one ``[prover]`` / ``[rater]`` table of ``p_input``, ``p_cache``, ``p_output``."""
        with Path(path).open("rb") as fh:
            return cls.from_mapping(tomllib.load(fh))


def compute_cost(usage: TokenUsage, prices: PriceTable, component: str = "prover") -> float:
    r = prices.for_component(component)
    return usage.input_tokens * r.p_input + usage.cache_read_tokens * r.p_cache + usage.output_tokens * r.p_output


@dataclass(frozen=True)
class UsageEvent:
    time: float
    usage: TokenUsage
    component: str = "prover"


@dataclass
class AttemptLog:
    attempt_id: str
    events: list[UsageEvent] = field(default_factory=list)
    success_time: float | None = None

    def __post_init__(self) -> None:
        self.events = sorted(self.events, key=lambda e: e.time)
        if self.success_time is not None and self.events and self.success_time < self.events[0].time:
            raise ValueError(f"attempt {self.attempt_id}: success precedes its first event")

    @property
    def solved(self) -> bool:
        return self.success_time is not None

    def cost(self, prices: PriceTable, until: float | None = None) -> float:
        return sum(
            compute_cost(e.usage, prices, e.component)
            for e in self.events
            if until is None or e.time <= until
        )

    def cost_by_component(self, prices: PriceTable) -> dict[str, float]:
        out: dict[str, float] = {}
        for e in self.events:
            out[e.component] = out.get(e.component, 0.0) + compute_cost(e.usage, prices, e.component)
        return out


def attempts_from_events(
    events: Iterable[Mapping[str, Any]],
    time_field: str = "logical_time",
    prefix: str = "",
) -> list[AttemptLog]:
    """Build one AttemptLog per ``attempt_id`` from a journal's ``turn`` and ``solve`` events.

    Attempts appear in order of their first event.  ``time_field`` may be
    ``logical_time`` or ``wall_time``.
    """
    logs: dict[str, AttemptLog] = {}
    for ev in events:
        payload = ev.get("payload", {})
        attempt = payload.get("attempt_id")
        if attempt is None:
            continue
        kind = ev.get("event_kind")
        if kind not in ("turn", "solve", "episode_start"):
            continue
        log = logs.setdefault(attempt, AttemptLog(prefix + attempt))
        t = float(ev[time_field])
        if kind == "turn":
            usage = TokenUsage.from_dict(payload.get("usage", {}))
            log.events.append(UsageEvent(t, usage, payload.get("component", "prover")))
        elif kind == "solve" and log.success_time is None:
            log.success_time = t
    for log in logs.values():
        log.events.sort(key=lambda e: e.time)
    return list(logs.values())


@dataclass(frozen=True)
class ChunkRow:
    index: int
    attempt_ids: tuple[str, ...]
    solved: bool
    success_time: float | None
    cost: float


@dataclass(frozen=True)
class ChunkEstimate:
    chunk_size: int
    n_chunks: int
    solve_rate: float
    standard_error: float
    mean_success_cost: float | None
    mean_chunk_cost: float
    rows: tuple[ChunkRow, ...]

    def summary(self) -> dict[str, Any]:
        return {
            "chunk_size": self.chunk_size,
            "n_chunks": self.n_chunks,
            "solve_rate": self.solve_rate,
            "standard_error": self.standard_error,
            "mean_success_cost": self.mean_success_cost,
            "mean_chunk_cost": self.mean_chunk_cost,
        }


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


def chunk_estimate(
    attempts: Sequence[AttemptLog],
    chunk_size: int,
    prices: PriceTable | None = None,
    cost_of: Callable[[UsageEvent], float] | None = None,
) -> ChunkEstimate:
    """Chunk attempts in input order and score each chunk by any-success.

    A successful chunk's cost counts every member event at or before the
    earliest member success; a failed chunk's cost counts everything.
    ``cost_of`` replaces the token pricing, e.g. with per-event durations.
    """
    if not attempts:
        raise ValueError("need at least one attempt")
    if chunk_size < 1 or len(attempts) % chunk_size:
        raise IndivisibleChunking(f"chunk size {chunk_size} does not divide {len(attempts)} attempts")
    if cost_of is None:
        table = prices or PriceTable()
        cost_of = lambda e: compute_cost(e.usage, table, e.component)  # noqa: E731
    rows = []
    for index in range(len(attempts) // chunk_size):
        members = attempts[index * chunk_size:(index + 1) * chunk_size]
        times = [a.success_time for a in members if a.success_time is not None]
        t_success = min(times) if times else None
        cost = sum(
            cost_of(e)
            for a in members
            for e in a.events
            if t_success is None or e.time <= t_success
        )
        rows.append(ChunkRow(index, tuple(a.attempt_id for a in members), t_success is not None, t_success, cost))
    n = len(rows)
    wins = [r for r in rows if r.solved]
    p = len(wins) / n
    return ChunkEstimate(
        chunk_size=chunk_size,
        n_chunks=n,
        solve_rate=p,
        standard_error=binomial_se(p, n),
        mean_success_cost=sum(r.cost for r in wins) / len(wins) if wins else None,
        mean_chunk_cost=sum(r.cost for r in rows) / n,
        rows=tuple(rows),
    )


@dataclass(frozen=True)
class ParetoRow:
    label: str
    solve_rate: float
    cost: float
    dominated: bool


def pareto_table(estimates: Iterable[tuple[str, float, float]]) -> list[ParetoRow]:
    """Sort by cost and flag points beaten by another on cost and solve rate (one strictly)."""
    points = list(estimates)
    rows = []
    for label, rate, cost in points:
        dominated = any(
            c2 <= cost and r2 >= rate and (c2 < cost or r2 > rate)
            for _, r2, c2 in points
        )
        rows.append(ParetoRow(label, rate, cost, dominated))
    return sorted(rows, key=lambda r: (r.cost, -r.solve_rate, r.label))


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def chunk_rows_csv(estimate: ChunkEstimate) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["chunk", "attempts", "solved", "success_time", "cost"])
    for r in estimate.rows:
        w.writerow([r.index, ";".join(r.attempt_ids), int(r.solved), _fmt(r.success_time), _fmt(r.cost)])
    return buf.getvalue()


def estimates_csv(estimates: Sequence[ChunkEstimate]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["chunk_size", "n_chunks", "solve_rate", "standard_error", "mean_success_cost", "mean_chunk_cost"])
    for e in estimates:
        w.writerow([e.chunk_size, e.n_chunks, _fmt(e.solve_rate), _fmt(e.standard_error),
                    _fmt(e.mean_success_cost), _fmt(e.mean_chunk_cost)])
    return buf.getvalue()


def pareto_csv(rows: Sequence[ParetoRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "solve_rate", "cost", "dominated"])
    for r in rows:
        w.writerow([r.label, _fmt(r.solve_rate), _fmt(r.cost), int(r.dominated)])
    return buf.getvalue()


def text_table(rows: Sequence[ParetoRow]) -> str:
    lines = [f"{'label':<16} {'solve_rate':>10} {'cost':>14}  frontier"]
    for r in rows:
        lines.append(f"{r.label:<16} {r.solve_rate:>10.3f} {r.cost:>14.6g}  {'' if r.dominated else '*'}")
    return "\n".join(lines)


def write_scatter_svg(rows: Sequence[ParetoRow], path: str | Path) -> Path | None:
    """Solve rate against cost as an SVG; returns None when matplotlib is not installed."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return None
    fig, ax = plt.subplots(figsize=(5, 3.5))
    front = sorted((r for r in rows if not r.dominated), key=lambda r: r.cost)
    ax.scatter([r.cost for r in rows], [r.solve_rate for r in rows], c=["tab:gray" if r.dominated else "tab:blue" for r in rows])
    if front:
        ax.plot([r.cost for r in front], [r.solve_rate for r in front], color="tab:blue", lw=1)
    for r in rows:
        ax.annotate(r.label, (r.cost, r.solve_rate), textcoords="offset points", xytext=(4, 4), fontsize=8)
    ax.set_xlabel("mean cost per chunk")
    ax.set_ylabel("solve rate")
    ax.set_ylim(-0.05, 1.05)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, format="svg")
    plt.close(fig)
    return out
