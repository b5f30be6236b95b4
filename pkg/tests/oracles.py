"""Independent reference computations used by the test-suite.

Nothing here imports the code paths it checks.
"""

from __future__ import annotations

import math

import numpy as np


def pl_log_posterior(log_lam: np.ndarray, rankings: list[list[int]]) -> np.ndarray:
    """Log posterior of log-strengths with ``r`` integrated out analytically.

    ``lam | r ~ Exp(r)``, ``r ~ Exp(1)`` gives the marginal prior density
    ``(1 + lam)^-2``; the change of variables to ``u = log lam`` adds ``u``.
    ``log_lam`` has shape (chains, players).
    """
    lam = np.exp(log_lam)
    lp = np.sum(-2.0 * np.log1p(lam) + log_lam, axis=1)
    for ranking in rankings:
        for k in range(len(ranking) - 1):
            rest = lam[:, ranking[k:]].sum(axis=1)
            lp += log_lam[:, ranking[k]] - np.log(rest)
    return lp


def metropolis_pl(
    rankings: list[list[int]],
    n_players: int,
    n_chains: int = 400,
    n_steps: int = 3000,
    burn: int = 1000,
    step: float = 0.8,
    seed: int = 0,
) -> np.ndarray:
    """Random-walk Metropolis on log-strengths, many independent chains in parallel.

    Returns samples of shape (n_chains, n_steps - burn, n_players) of the strengths.
    """
    rng = np.random.default_rng(seed)
    r = rng.exponential(1.0, size=(n_chains, n_players))
    u = np.log(rng.exponential(1.0 / r))
    lp = pl_log_posterior(u, rankings)
    keep = np.empty((n_chains, n_steps - burn, n_players))
    for t in range(n_steps):
        prop = u + step * rng.standard_normal(u.shape)
        lp_prop = pl_log_posterior(prop, rankings)
        accept = np.log(rng.random(n_chains)) < lp_prop - lp
        u = np.where(accept[:, None], prop, u)
        lp = np.where(accept, lp_prop, lp)
        if t >= burn:
            keep[:, t - burn] = np.exp(u)
    return keep


def chain_mean_and_se(per_chain_values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean over independent chains and its standard error. Input (chains, steps, k)."""
    chain_means = per_chain_values.mean(axis=1)
    n = chain_means.shape[0]
    return chain_means.mean(axis=0), chain_means.std(axis=0, ddof=1) / math.sqrt(n)


def batch_mean_and_se(samples: np.ndarray, n_batches: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Batch-means estimate for a single correlated chain. Input (steps, k)."""
    usable = (samples.shape[0] // n_batches) * n_batches
    batches = samples[:usable].reshape(n_batches, -1, samples.shape[1]).mean(axis=1)
    return samples.mean(axis=0), batches.std(axis=0, ddof=1) / math.sqrt(n_batches)


def normalized(samples: np.ndarray) -> np.ndarray:
    """Strength shares lam_s / sum(lam) along the last axis."""
    return samples / samples.sum(axis=-1, keepdims=True)


def eval_int(lhs: tuple[int, str, int]) -> int:
    a, op, b = lhs
    return a + b if op == "+" else a - b if op == "-" else a * b


def count_standalone(text: str, token: str) -> int:
    """Count ``token`` occurrences not glued to identifier characters, ignoring
    ``--`` line comments and ``/- -/`` block comments (no nesting needed for fixtures)."""
    count = 0
    i = 0
    n = len(text)
    in_block = 0
    while i < n:
        if in_block:
            if text.startswith("-/", i):
                in_block -= 1
                i += 2
            elif text.startswith("/-", i):
                in_block += 1
                i += 2
            else:
                i += 1
            continue
        if text.startswith("/-", i):
            in_block = 1
            i += 2
            continue
        if text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text.startswith(token, i):
            before = text[i - 1] if i else " "
            j = i + len(token)
            after = text[j] if j < n else " "
            ident = lambda c: c.isalnum() or c in "_'"  # noqa: E731
            if not ident(before) and not ident(after):
                count += 1
            i = j
            continue
        i += 1
    return count
