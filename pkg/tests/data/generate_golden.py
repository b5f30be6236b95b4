"""Regenerate the frozen evaluator fixtures in this directory.

``synthetic_attempts.json`` holds 100 seeded attempts; ``golden_chunks_k10.csv``
is their chunk table at chunk size 10, computed here by brute force without
importing the package.  Prices are dyadic and token counts integral, so every
cost is exactly representable and the CSV can be compared byte for byte.

Run from the repository root:  python tests/data/generate_golden.py
"""

from __future__ import annotations

import json
import random
from pathlib import Path

HERE = Path(__file__).parent
PRICES = {"prover": (0.5, 0.25, 2.0), "rater": (0.125, 0.0, 1.0)}
N_ATTEMPTS = 100
CHUNK = 10


def make_attempts(seed: int = 20240917) -> list[dict]:
    rng = random.Random(seed)
    attempts = []
    for a in range(N_ATTEMPTS):
        n_events = rng.randint(1, 12)
        times = sorted(rng.sample(range(1, 200), n_events))
        events = [
            [t, rng.randint(0, 4000), rng.randint(0, 2000), rng.randint(0, 800), rng.choice(["prover", "prover", "rater"])]
            for t in times
        ]
        success = None
        if rng.random() < 0.15:
            success = rng.choice(times)
        attempts.append({"attempt_id": f"a{a:03d}", "events": events, "success_time": success})
    return attempts


def event_cost(ev: list) -> float:
    p_in, p_cache, p_out = PRICES[ev[4]]
    return ev[1] * p_in + ev[2] * p_cache + ev[3] * p_out


def brute_force_rows(attempts: list[dict]) -> list[str]:
    lines = ["chunk,attempts,solved,success_time,cost"]
    for c in range(N_ATTEMPTS // CHUNK):
        members = attempts[c * CHUNK:(c + 1) * CHUNK]
        horizon = None
        for m in members:
            if m["success_time"] is not None and (horizon is None or m["success_time"] < horizon):
                horizon = m["success_time"]
        # walk the timeline tick by tick so truncation is enumerated rather than filtered
        last = max(ev[0] for m in members for ev in m["events"])
        stop = last if horizon is None else horizon
        total = 0.0
        for tick in range(0, stop + 1):
            for m in members:
                for ev in m["events"]:
                    if ev[0] == tick:
                        total += event_cost(ev)
        ids = ";".join(m["attempt_id"] for m in members)
        success = "" if horizon is None else repr(float(horizon))
        lines.append(f"{c},{ids},{int(horizon is not None)},{success},{total!r}")
    return lines


def main() -> None:
    attempts = make_attempts()
    (HERE / "synthetic_attempts.json").write_text(json.dumps({"prices": PRICES, "attempts": attempts}, indent=1) + "\n")
    (HERE / "golden_chunks_k10.csv").write_text("\n".join(brute_force_rows(attempts)) + "\n")


if __name__ == "__main__":
    main()
