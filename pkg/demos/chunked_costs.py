"""Chunked solve rate and cost for simulated parallel attempts, with a Pareto table.

    python demos/chunked_costs.py [output_dir]
"""

from __future__ import annotations

import random
import sys
from pathlib import Path

from nexus.backends.types import TokenUsage
from nexus.evalkit import (
    AttemptLog,
    PriceTable,
    Rates,
    UsageEvent,
    chunk_estimate,
    estimates_csv,
    pareto_table,
    text_table,
    write_scatter_svg,
)

PRICES = PriceTable({"prover": Rates(3e-6, 3e-7, 1.5e-5), "rater": Rates(1e-6, 1e-7, 5e-6)})


def simulate(n: int, p_solve: float, seed: int) -> list[AttemptLog]:
    rng = random.Random(seed)
    attempts = []
    for a in range(n):
        events = []
        t = 0.0
        for _ in range(rng.randint(5, 40)):
            t += rng.expovariate(1.0)
            component = "rater" if rng.random() < 0.2 else "prover"
            events.append(UsageEvent(t, TokenUsage(rng.randint(2000, 20000), rng.randint(0, 10000), rng.randint(100, 3000)), component))
        success = rng.choice(events).time if rng.random() < p_solve else None
        attempts.append(AttemptLog(f"a{a:03d}", events, success))
    return attempts


def main(out: Path | None) -> None:
    attempts = simulate(120, 0.12, seed=3)
    estimates = [chunk_estimate(attempts, k, PRICES) for k in (1, 2, 3, 6, 10)]
    for e in estimates:
        mean_success = "n/a" if e.mean_success_cost is None else f"{e.mean_success_cost:.4f}"
        print(f"K={e.chunk_size:<3} chunks={e.n_chunks:<4} solve_rate={e.solve_rate:.3f} +- {e.standard_error:.3f} "
              f"mean_cost={e.mean_chunk_cost:.4f} mean_success_cost={mean_success}")
    rows = pareto_table([(f"K={e.chunk_size}", e.solve_rate, e.mean_chunk_cost) for e in estimates])
    print()
    print(text_table(rows))
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "estimates.csv").write_text(estimates_csv(estimates))
        svg = write_scatter_svg(rows, out / "pareto.svg")
        print(f"\nwrote {out / 'estimates.csv'}" + (f" and {svg}" if svg else ""))


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else None)
