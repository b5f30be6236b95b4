"""Bayesian Plackett-Luce ratings.

Each sketch ``s`` has a strength ``lam_s`` with the hierarchical prior::

    lam_s | r_s ~ Gamma(shape=1, rate=r_s)
    r_s         ~ Gamma(shape=1, rate=1)

A ranking ``rho`` of ``n`` players is generated by picking players one at a
time without replacement, each with probability proportional to its
strength.  Following Caron & Doucet (2012), every choice stage ``k`` gets a
latent ``Z ~ Exp(sum of strengths still in play)``, which makes all full
conditionals Gamma:

    Z_jk  | lam      ~ Exp(sum_{i >= k} lam_{rho_j(i)})
    lam_s | Z, r_s   ~ Gamma(1 + wins_s, r_s + sum of Z over stages s took part in)
    r_s   | lam_s    ~ Gamma(2, 1 + lam_s)

Only stages with at least two remaining players carry information, so the
final (forced) stage of each ranking is skipped.

Players are indexed by first appearance in the match log, never by label,
so relabelling ids permutes the sample streams exactly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyMatchLog, NonPositiveStrength, PopulationTooSmall, UnknownIdInMatch
from .population import PopulationStore, RatingState

ELO_BASE = 1200.0
ELO_SCALE = 400.0


@dataclass(frozen=True)
class GibbsConfig:
    n_samples: int = 1000
    burn_in: int = 200
    thinning: int = 25
    seed: int = 0
    shape: float = 1.0
    hyper_shape: float = 1.0
    hyper_rate: float = 1.0

    def __post_init__(self) -> None:
        if self.n_samples < 1 or self.burn_in < 0 or self.thinning < 1:
            raise ValueError("need n_samples >= 1, burn_in >= 0, thinning >= 1")

    def with_seed(self, seed: int) -> GibbsConfig:
        return GibbsConfig(**{**asdict(self), "seed": seed})


@dataclass
class PlackettLuceModel:
    strengths: dict[str, float] = field(default_factory=dict)
    rates: dict[str, float] = field(default_factory=dict)
    matches: list[tuple[str, ...]] = field(default_factory=list)

    @classmethod
    def from_matches(cls, matches: Sequence[Sequence[str]], ids: Sequence[str] = ()) -> PlackettLuceModel:
        order: dict[str, None] = {}
        for ranking in matches:
            order.update(dict.fromkeys(ranking))
        order.update(dict.fromkeys(ids))
        return cls({i: 1.0 for i in order}, {i: 1.0 for i in order}, [tuple(m) for m in matches])


def _player_order(model: PlackettLuceModel) -> list[str]:
    order: dict[str, None] = {}
    for ranking in model.matches:
        order.update(dict.fromkeys(ranking))
    order.update(dict.fromkeys(model.strengths))
    return list(order)


def gibbs_posterior(model: PlackettLuceModel, cfg: GibbsConfig) -> dict[str, np.ndarray]:
    """Draw ``cfg.n_samples`` posterior strength samples per player after ``cfg.burn_in`` sweeps."""
    if not model.matches:
        raise EmptyMatchLog("no matches to fit")
    for ranking in model.matches:
        missing = [p for p in ranking if p not in model.strengths]
        if missing:
            raise UnknownIdInMatch(", ".join(missing))
    players = _player_order(model)
    index = {p: i for i, p in enumerate(players)}
    n = len(players)

    members: list[int] = []
    sizes: list[int] = []
    winners: list[int] = []
    for ranking in model.matches:
        idx = [index[p] for p in ranking]
        for k in range(len(idx) - 1):
            members.extend(idx[k:])
            sizes.append(len(idx) - k)
            winners.append(idx[k])
    members_a = np.asarray(members, dtype=np.intp)
    sizes_a = np.asarray(sizes, dtype=np.intp)
    starts = np.concatenate(([0], np.cumsum(sizes_a)[:-1])).astype(np.intp)
    wins = np.bincount(np.asarray(winners, dtype=np.intp), minlength=n).astype(float)

    rng = np.random.default_rng(cfg.seed)
    lam = np.array([model.strengths[p] for p in players], dtype=float)
    rate = np.array([model.rates.get(p, 1.0) for p in players], dtype=float)
    if np.any(lam <= 0) or np.any(rate <= 0):
        raise NonPositiveStrength("initial strengths and rates must be positive")
    post_shape = cfg.shape + wins
    rate_shape = cfg.hyper_shape + cfg.shape
    out = np.empty((cfg.n_samples, n))
    for sweep in range(cfg.burn_in + cfg.n_samples):
        if len(sizes_a):
            stage_total = np.add.reduceat(lam[members_a], starts)
            z = rng.standard_exponential(len(stage_total)) / stage_total
            exposure = np.bincount(members_a, weights=np.repeat(z, sizes_a), minlength=n)
        else:
            exposure = np.zeros(n)
        lam = rng.gamma(post_shape, 1.0 / (rate + exposure))
        # gamma draws can underflow to 0 for tiny shapes; strengths stay positive
        lam = np.maximum(lam, np.finfo(float).tiny)
        rate = rng.gamma(rate_shape, 1.0 / (cfg.hyper_rate + lam))
        if sweep >= cfg.burn_in:
            out[sweep - cfg.burn_in] = lam
    return {p: out[:, index[p]] for p in players}


def elo_from_mean(strength_mean: float) -> float:
    """``1200 + 400 * log10(strength_mean)``."""
    if not strength_mean > 0 or not math.isfinite(strength_mean):
        raise NonPositiveStrength(f"strength must be a positive finite number, got {strength_mean}")
    return ELO_BASE + ELO_SCALE * math.log10(strength_mean)


def rating_state(samples: np.ndarray, thinning: int) -> RatingState:
    mean = float(np.mean(samples))
    var = float(np.var(samples, ddof=1)) if len(samples) > 1 else 0.0
    return RatingState(
        strength_samples=tuple(float(x) for x in samples),
        thinned_samples=tuple(float(x) for x in samples[thinning - 1 :: thinning]) or (float(samples[-1]),),
        strength_mean=mean,
        strength_var=var,
        elo=elo_from_mean(mean),
        rated=True,
    )


def refresh_ratings(
    store: PopulationStore,
    cfg: GibbsConfig,
    publish: bool = True,
    n_matches: int | None = None,
) -> dict[str, RatingState]:
    """Refit every rated record from the full match log (or its first ``n_matches``)."""
    matches = store.matches()
    if n_matches is not None:
        matches = matches[:n_matches]
    if not matches:
        return {}
    model = PlackettLuceModel.from_matches([m.players for m in matches])
    samples = gibbs_posterior(model, cfg)
    states = {rid: rating_state(s, cfg.thinning) for rid, s in samples.items()}
    if publish:
        store.publish_ratings(states, meta={"seed": cfg.seed, "cfg": asdict(cfg), "n_matches": len(matches)})
    return states


@dataclass(frozen=True)
class RatingView:
    id: str
    thinned_samples: tuple[float, ...] = ()
    strength_var: float | None = None
    rated: bool = False


def rating_views(store: PopulationStore) -> list[RatingView]:
    return [
        RatingView(r.id, r.rating.thinned_samples, r.rating.strength_var, r.rating.rated)
        for r in store.records()
    ]


def thompson_select(population: Sequence[RatingView], P: int, cfg: GibbsConfig) -> list[str]:
    """Pick ``min(P, len(population))`` distinct players by Thompson sampling.

    Each of the ``P`` draws takes one retained (thinned) posterior sample per
    sketch and keeps the argmax; duplicates are dropped and refilled with the
    unchosen sketches of highest posterior variance.  Unrated sketches draw
    from the prior and count as having infinite variance.
    """
    if len(population) < 2:
        raise PopulationTooSmall(f"need at least 2 sketches, have {len(population)}")
    if P < 2:
        raise ValueError("P must be >= 2")
    rng = np.random.default_rng(cfg.seed)
    chosen: list[int] = []
    for _ in range(P):
        values = np.empty(len(population))
        for i, view in enumerate(population):
            if view.rated and view.thinned_samples:
                values[i] = view.thinned_samples[rng.integers(len(view.thinned_samples))]
            else:
                r = rng.gamma(cfg.hyper_shape, 1.0 / cfg.hyper_rate)
                values[i] = rng.gamma(cfg.shape, 1.0 / r)
        chosen.append(int(np.argmax(values)))
    distinct = list(dict.fromkeys(chosen))
    target = min(P, len(population))
    if len(distinct) < target:
        def variance(i: int) -> float:
            v = population[i]
            return math.inf if not v.rated or v.strength_var is None else v.strength_var

        rest = sorted((i for i in range(len(population)) if i not in distinct), key=lambda i: (-variance(i), i))
        distinct += rest[: target - len(distinct)]
    return [population[i].id for i in distinct]


def break_ties(
    raw_ranking: Sequence[Sequence[str]],
    model: PlackettLuceModel | Mapping[str, float],
    seed: int,
) -> list[str]:
    """Turn a ranking with tie groups into a strict order.

    Each tie group is ordered by a Plackett-Luce draw from the current
    strengths; singleton groups pass through untouched.
    """
    strengths = model.strengths if isinstance(model, PlackettLuceModel) else model
    rng = np.random.default_rng(seed)
    order: list[str] = []
    for group in raw_ranking:
        remaining = list(group)
        while len(remaining) > 1:
            weights = np.array([strengths.get(p, 1.0) for p in remaining], dtype=float)
            u = rng.random() * weights.sum()
            pick = min(int(np.searchsorted(np.cumsum(weights), u, side="right")), len(remaining) - 1)
            order.append(remaining.pop(pick))
        order.extend(remaining)
    return order
