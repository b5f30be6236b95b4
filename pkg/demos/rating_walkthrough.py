"""Fit strengths to a handful of listwise matches and show how selection uses them.

    python demos/rating_walkthrough.py
"""

from __future__ import annotations

import numpy as np

from nexus.rating import GibbsConfig, PlackettLuceModel, break_ties, elo_from_mean, gibbs_posterior
from nexus.selection import pucb_scores

MATCHES = [
    ("s1", "s2", "s3"),
    ("s1", "s3"),
    ("s2", "s1", "s4"),
    ("s1", "s4", "s3", "s2"),
    ("s3", "s4"),
]
VISITS = {"s1": 6, "s2": 3, "s3": 1, "s4": 0}


def main() -> None:
    model = PlackettLuceModel.from_matches(MATCHES, sorted(VISITS))
    samples = gibbs_posterior(model, GibbsConfig(seed=1))
    ids = sorted(samples)
    means = {i: float(np.mean(samples[i])) for i in ids}
    shares = np.stack([samples[i] for i in ids], axis=1)
    shares = (shares / shares.sum(axis=1, keepdims=True)).mean(axis=0)

    print(f"{'id':<4} {'mean':>8} {'share':>7} {'elo':>8} {'visits':>6}")
    for i, share in zip(ids, shares):
        print(f"{i:<4} {means[i]:>8.3f} {share:>7.3f} {elo_from_mean(means[i]):>8.1f} {VISITS[i]:>6}")

    elos = [(elo_from_mean(means[i]), VISITS[i]) for i in ids]
    total = sum(VISITS.values())
    for c in (0.0, 0.2, 2.0):
        scores = pucb_scores(elos, total, c)
        best = ids[int(np.argmax(scores))]
        print(f"c={c:<4} scores={[round(s, 3) for s in scores]} -> parent {best}")

    tied = [["s2", "s3"], ["s4"]]
    orders = [tuple(break_ties(tied, means, seed)) for seed in range(2000)]
    first = sum(o[0] == "s2" for o in orders) / len(orders)
    expected = means["s2"] / (means["s2"] + means["s3"])
    print(f"tie s2 = s3 broken with s2 first {first:.3f} of the time (strength ratio {expected:.3f})")


if __name__ == "__main__":
    main()
