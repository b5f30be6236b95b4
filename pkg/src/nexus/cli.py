"""Command-line entry points: ``nexus run``, ``nexus eval`` and ``nexus replay``.

Exit codes
  run:    0 solved, 2 episode budget exhausted, 1 error
  eval:   0 report written, 1 error
  replay: 0 journals match, 3 divergence, 1 error or not replayable

Every command ends with ``key=value`` summary lines on stdout.

Manifest (TOML; relative paths resolve against the manifest's directory)::

    problem_file = "problem.toy"
    agent_kind = "D"              # A | B | C | D
    n_subagents = 10
    episode_budget = 3000
    seed = 0                      # or seeds = [..] with one entry per subagent
    n_raters = 1
    players_per_match = 7
    match_budget = 100            # optional
    deterministic_schedule = false
    output_dir = "out"            # overridden by --output-dir
    disallowed_tokens = ["sorryAx"]

    [limits]   max_prover_queries, max_edits, max_turns
    [llm]      backend = "replay" (script = "...") | "wire" (url, model, timeout_s)
    [checker]  backend = "toy" | "command" (command = "tool {file}", timeout_s, suffix)
    [prover]   backend = "sim" | "wire" (url) | "none"; simulations, timeout_ms
    [gibbs]    n_samples, burn_in, thinning
    [pucb]     exploration_c, elite_size, n_inspirations

Secrets (``NEXUS_LLM_TOKEN``, ``NEXUS_PROVER_TOKEN``) come from the environment only.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .agents import EpisodeLimits, RunConfig, run_agent
from .backends import Backends, CommandChecker, ReplayLLM, SimulatedProver, ToyChecker, WireLLM, WireProver
from .backends.types import ProverBudget
from .errors import IndivisibleChunking, JournalError, ManifestError, NexusError, NotReplayable
from .evalkit import (
    PriceTable,
    attempts_from_events,
    chunk_estimate,
    chunk_rows_csv,
    estimates_csv,
    pareto_csv,
    pareto_table,
    text_table,
    write_scatter_svg,
)
from .journal import Journal, read_journal, semantic_events
from .rating import GibbsConfig
from .selection import PUCBConfig
from .sketch import parse_sketch

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_ERROR, EXIT_BUDGET, EXIT_DIVERGED = 0, 1, 2, 3
_TOP_KEYS = {
    "problem_file", "agent_kind", "n_subagents", "episode_budget", "seed", "seeds", "n_raters",
    "players_per_match", "match_budget", "deterministic_schedule", "output_dir", "disallowed_tokens",
    "placeholder", "max_turn_tokens", "limits", "llm", "checker", "prover", "gibbs", "pucb",
}
_SECTIONS = {
    "limits": {"max_prover_queries", "max_edits", "max_turns"},
    "llm": {"backend", "script", "url", "model", "timeout_s"},
    "checker": {"backend", "command", "timeout_s", "suffix"},
    "prover": {"backend", "url", "simulations", "timeout_ms"},
    "gibbs": {"n_samples", "burn_in", "thinning"},
    "pucb": {"exploration_c", "elite_size", "n_inspirations"},
}


@dataclass
class RunManifest:
    path: str
    problem_text: str
    config: RunConfig
    llm: dict[str, Any]
    checker: dict[str, Any]
    prover: dict[str, Any]
    output_dir: Path | None
    script: dict[str, Any] | None = None
    raw: dict[str, Any] = field(default_factory=dict)

    @property
    def replayable(self) -> bool:
        return self.llm["backend"] == "replay" and self.prover["backend"] != "wire"


def _section(data: dict[str, Any], name: str, path: str) -> dict[str, Any]:
    sec = data.get(name, {})
    if not isinstance(sec, dict):
        raise ManifestError(path, name, "must be a table")
    unknown = set(sec) - _SECTIONS[name]
    if unknown:
        raise ManifestError(path, f"{name}.{sorted(unknown)[0]}", "unknown key")
    return dict(sec)


def manifest_from_dict(data: dict[str, Any], path: str = "<manifest>", base: Path | None = None) -> RunManifest:
    """Validate a manifest mapping; file references resolve against ``base``."""
    base = base or Path.cwd()
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ManifestError(path, sorted(unknown)[0], "unknown key")

    def resolve(value: Any, fld: str) -> Path:
        if not isinstance(value, str) or not value:
            raise ManifestError(path, fld, "must be a non-empty path string")
        p = Path(value)
        p = p if p.is_absolute() else base / p
        if not p.is_file():
            raise ManifestError(path, fld, f"file not found: {p}")
        return p

    if "problem_file" not in data:
        raise ManifestError(path, "problem_file", "required")
    problem_text = resolve(data["problem_file"], "problem_file").read_text(encoding="utf-8")
    try:
        parse_sketch(problem_text)
    except NexusError as exc:
        raise ManifestError(path, "problem_file", f"does not parse: {exc}") from exc

    llm = _section(data, "llm", path)
    checker = _section(data, "checker", path)
    prover = _section(data, "prover", path)
    llm.setdefault("backend", "replay")
    checker.setdefault("backend", "toy")
    prover.setdefault("backend", "sim")
    if llm["backend"] not in ("replay", "wire"):
        raise ManifestError(path, "llm.backend", "must be 'replay' or 'wire'")
    if checker["backend"] not in ("toy", "command"):
        raise ManifestError(path, "checker.backend", "must be 'toy' or 'command'")
    if prover["backend"] not in ("sim", "wire", "none"):
        raise ManifestError(path, "prover.backend", "must be 'sim', 'wire' or 'none'")
    script = None
    if llm["backend"] == "replay":
        if "script" in llm and isinstance(llm["script"], dict):
            script = llm["script"]
        else:
            script_path = resolve(llm.get("script"), "llm.script")
            try:
                script = json.loads(script_path.read_text(encoding="utf-8"))
                ReplayLLM.from_document(script)
            except ValueError as exc:
                raise ManifestError(path, "llm.script", str(exc)) from exc
    elif "url" not in llm:
        raise ManifestError(path, "llm.url", "required for the wire backend")
    if checker["backend"] == "command" and "{file}" not in str(checker.get("command", "")):
        raise ManifestError(path, "checker.command", "must be a command template containing {file}")
    if prover["backend"] == "wire" and "url" not in prover:
        raise ManifestError(path, "prover.url", "required for the wire backend")

    try:
        limits = EpisodeLimits(**_section(data, "limits", path))
        gibbs = GibbsConfig(**_section(data, "gibbs", path))
        pucb = PUCBConfig(**_section(data, "pucb", path))
        budget = ProverBudget(
            int(prover.get("simulations", ProverBudget().simulations)),
            int(prover.get("timeout_ms", ProverBudget().timeout_ms)),
        )
        kwargs: dict[str, Any] = {
            k: data[k]
            for k in ("n_subagents", "episode_budget", "seed", "n_raters", "players_per_match",
                      "match_budget", "placeholder", "max_turn_tokens")
            if k in data
        }
        if "seeds" in data:
            kwargs["seeds"] = tuple(int(s) for s in data["seeds"])
        if "disallowed_tokens" in data:
            kwargs["disallowed_tokens"] = tuple(str(t) for t in data["disallowed_tokens"])
        cfg = RunConfig(
            agent_kind=data.get("agent_kind", "A"),
            limits=limits,
            gibbs=gibbs,
            pucb=pucb,
            prover_budget=budget,
            deterministic_schedule=bool(data.get("deterministic_schedule", False)),
            **kwargs,
        )
    except (TypeError, ValueError) as exc:
        raise ManifestError(path, _guess_field(str(exc)), str(exc)) from exc
    if cfg.uses_prover and prover["backend"] == "none":
        raise ManifestError(path, "prover.backend", f"agent {cfg.agent_kind} needs a focused prover")
    out = data.get("output_dir")
    return RunManifest(
        path=path,
        problem_text=problem_text,
        config=cfg,
        llm=llm,
        checker=checker,
        prover=prover,
        output_dir=(base / out) if out else None,
        script=script,
        raw=data,
    )


def _guess_field(message: str) -> str:
    for key in ("agent_kind", "n_subagents", "episode_budget", "seeds", "match_budget", "limits", "gibbs", "pucb"):
        if key.replace("_", " ") in message or key in message:
            return key
    return "<config>"


def load_manifest(path: str | Path) -> RunManifest:
    p = Path(path)
    if not p.is_file():
        raise ManifestError(str(p), "--manifest", "file not found")
    try:
        with p.open("rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ManifestError(str(p), "<toml>", str(exc)) from exc
    return manifest_from_dict(data, str(p), p.parent)


def build_backends(m: RunManifest) -> Backends:
    if m.llm["backend"] == "replay":
        llm = ReplayLLM.from_document(m.script or {})
    else:
        llm = WireLLM(m.llm["url"], m.llm.get("model", ""), float(m.llm.get("timeout_s", 600.0)))
    if m.checker["backend"] == "toy":
        checker = ToyChecker()
    else:
        checker = CommandChecker(
            m.checker["command"], float(m.checker.get("timeout_s", 600.0)), m.checker.get("suffix", ".lean")
        )
    prover = {"sim": SimulatedProver, "none": lambda: None}.get(m.prover["backend"])
    prover = prover() if prover else WireProver(m.prover["url"])
    return Backends(llm, checker, prover, m.config.prover_budget)


def _summary(**items: Any) -> None:
    for k, v in items.items():
        print(f"{k}={v}")


def _run_config_payload(m: RunManifest) -> dict[str, Any]:
    return {
        "agent_kind": m.config.agent_kind,
        "replayable": m.replayable,
        "deterministic_schedule": m.config.deterministic_schedule,
        "manifest": {k: v for k, v in m.raw.items() if k not in ("problem_file", "output_dir", "llm")},
        "llm": {**{k: v for k, v in m.llm.items() if k != "script"}, "script": m.script},
        "problem_text": m.problem_text,
    }


def execute(m: RunManifest, journal: Journal):
    journal.append("run_config", _run_config_payload(m))
    return run_agent(parse_sketch(m.problem_text), m.config, build_backends(m), journal=journal)


def cmd_run(args: argparse.Namespace) -> int:
    try:
        m = load_manifest(args.manifest)
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _summary(status="error", error="ManifestError", field=exc.field)
        return EXIT_ERROR
    if args.deterministic_schedule:
        m.config = dataclasses.replace(m.config, deterministic_schedule=True)
    out = Path(args.output_dir) if args.output_dir else (m.output_dir or Path("nexus-out"))
    out.mkdir(parents=True, exist_ok=True)
    journal_path = out / "journal.jsonl"
    try:
        with Journal(journal_path) as journal:
            result = execute(m, journal)
    except NexusError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        _summary(status="error", error=type(exc).__name__, journal=journal_path)
        return EXIT_ERROR
    lines = {
        "status": "solved" if result.solved else "budget_exhausted",
        "agent": m.config.agent_kind,
        "episodes": result.episodes,
        "solver": result.solver or "",
        "input_tokens": result.usage_total.input_tokens,
        "cache_read_tokens": result.usage_total.cache_read_tokens,
        "output_tokens": result.usage_total.output_tokens,
        "journal": journal_path,
    }
    if result.solved and result.final_sketch is not None:
        solution = out / "solution.txt"
        solution.write_text(result.final_sketch.render(), encoding="utf-8")
        lines["solution"] = solution
    (out / "summary.txt").write_text("".join(f"{k}={v}\n" for k, v in lines.items()), encoding="utf-8")
    _summary(**lines)
    return EXIT_OK if result.solved else EXIT_BUDGET


def cmd_eval(args: argparse.Namespace) -> int:
    paths = list(args.journal or [])
    if not paths:
        print("error: no journals given (use --journal)", file=sys.stderr)
        _summary(status="error", error="NoJournals")
        return EXIT_ERROR
    try:
        prices = PriceTable.load(args.prices) if args.prices else PriceTable()
    except (OSError, ValueError, tomllib.TOMLDecodeError) as exc:
        print(f"error: prices file {args.prices}: {exc}", file=sys.stderr)
        _summary(status="error", error="PriceTable")
        return EXIT_ERROR
    attempts = []
    for n, path in enumerate(paths):
        try:
            events = read_journal(path)
        except (JournalError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            _summary(status="error", error="JournalError", journal=path, line=getattr(exc, "line", "") or "")
            return EXIT_ERROR
        attempts += attempts_from_events(events, args.time_field, prefix=f"j{n}:" if len(paths) > 1 else "")
    if not attempts:
        print("error: the journals contain no attempts", file=sys.stderr)
        _summary(status="error", error="NoAttempts")
        return EXIT_ERROR
    estimates = []
    try:
        for k in args.chunk_size or [1]:
            estimates.append(chunk_estimate(attempts, k, prices))
    except IndivisibleChunking as exc:
        print(f"error: IndivisibleChunking: {exc}", file=sys.stderr)
        _summary(status="error", error="IndivisibleChunking")
        return EXIT_ERROR
    rows = pareto_table([(f"K={e.chunk_size}", e.solve_rate, e.mean_chunk_cost) for e in estimates])
    out = Path(args.output_dir) if args.output_dir else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "estimates.csv").write_text(estimates_csv(estimates), encoding="utf-8")
        (out / "pareto.csv").write_text(pareto_csv(rows), encoding="utf-8")
        for e in estimates:
            (out / f"chunks_k{e.chunk_size}.csv").write_text(chunk_rows_csv(e), encoding="utf-8")
        if not args.no_plot:
            write_scatter_svg(rows, out / "pareto.svg")
    print(text_table(rows))
    _summary(status="ok", attempts=len(attempts))
    for e in estimates:
        s = e.summary()
        mean_success = "" if s["mean_success_cost"] is None else f"{s['mean_success_cost']:.6g}"
        print(
            f"chunk_size={e.chunk_size} n_chunks={e.n_chunks} solve_rate={e.solve_rate:.6g} "
            f"standard_error={e.standard_error:.6g} mean_success_cost={mean_success} "
            f"mean_chunk_cost={e.mean_chunk_cost:.6g}"
        )
    return EXIT_OK


def replay_journal(path: str | Path) -> tuple[list[dict[str, Any]], list[dict[str, Any]]]:
    """Re-run a recorded journal and return (original, fresh) semantic events."""
    original = read_journal(path)
    if not original or original[0]["event_kind"] != "run_config":
        raise NotReplayable("journal does not start with a run_config event")
    rc = original[0]["payload"]
    if not rc.get("replayable"):
        raise NotReplayable("journal comes from a run with a wire backend")
    if not rc.get("deterministic_schedule"):
        raise NotReplayable("journal comes from a threaded run; replay needs --deterministic-schedule")
    data = {**rc["manifest"], "llm": rc["llm"]}
    m = _manifest_from_recorded(data, rc["problem_text"], str(path))
    fresh = Journal()
    execute(m, fresh)
    return semantic_events(original), semantic_events(fresh.events)


def _manifest_from_recorded(data: dict[str, Any], problem_text: str, path: str) -> RunManifest:
    with tempfile.TemporaryDirectory() as tmp:
        problem = Path(tmp) / "problem.txt"
        problem.write_text(problem_text, encoding="utf-8")
        m = manifest_from_dict({**data, "problem_file": str(problem)}, path, Path(tmp))
    m.config = dataclasses.replace(m.config, deterministic_schedule=True)
    return m


def first_divergence(a: Sequence[dict[str, Any]], b: Sequence[dict[str, Any]]) -> int | None:
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return i
    return None if len(a) == len(b) else min(len(a), len(b))


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        original, fresh = replay_journal(args.journal)
    except NotReplayable as exc:
        print(f"error: NotReplayable: {exc}", file=sys.stderr)
        _summary(status="not_replayable")
        return EXIT_ERROR
    except (NexusError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        _summary(status="error", error=type(exc).__name__)
        return EXIT_ERROR
    index = first_divergence(original, fresh)
    if index is None:
        _summary(status="match", events=len(original))
        return EXIT_OK
    kind = original[index]["event_kind"] if index < len(original) else "<end>"
    print(f"divergence at event {index} ({kind})", file=sys.stderr)
    _summary(status="diverged", index=index, event_kind=kind, original_events=len(original), replay_events=len(fresh))
    return EXIT_DIVERGED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nexus", description="Evolutionary proof-sketch search.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an agent from a manifest")
    run.add_argument("--manifest", required=True)
    run.add_argument("--output-dir")
    run.add_argument("--deterministic-schedule", action="store_true",
                     help="step workers round-robin on one thread instead of a thread pool")
    run.set_defaults(func=cmd_run)

    ev = sub.add_parser("eval", help="chunked solve-rate and cost report over journals")
    ev.add_argument("--journal", action="append", help="journal file (repeatable)")
    ev.add_argument("--chunk-size", action="append", type=int, help="attempts per chunk (repeatable)")
    ev.add_argument("--prices", help="TOML price table")
    ev.add_argument("--output-dir")
    ev.add_argument("--time-field", choices=("logical_time", "wall_time"), default="logical_time")
    ev.add_argument("--no-plot", action="store_true", help="skip the SVG scatter")
    ev.set_defaults(func=cmd_eval)

    rp = sub.add_parser("replay", help="re-run a journal and compare its events")
    rp.add_argument("--journal", required=True)
    rp.set_defaults(func=cmd_replay)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
