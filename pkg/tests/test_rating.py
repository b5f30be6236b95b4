from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from oracles import batch_mean_and_se, chain_mean_and_se, metropolis_pl

from nexus.errors import EmptyMatchLog, NonPositiveStrength, PopulationTooSmall, UnknownIdInMatch
from nexus.population import MatchResult, PopulationStore, SketchRecord
from nexus.rating import (
    GibbsConfig,
    PlackettLuceModel,
    RatingView,
    break_ties,
    elo_from_mean,
    gibbs_posterior,
    rating_state,
    refresh_ratings,
    thompson_select,
)
from nexus.sketch import parse_sketch

CFG = GibbsConfig(seed=11)


def posterior(matches, cfg=CFG, ids=()):
    return gibbs_posterior(PlackettLuceModel.from_matches(matches, ids), cfg)


def test_config_validation():
    for bad in ({"n_samples": 0}, {"burn_in": -1}, {"thinning": 0}):
        with pytest.raises(ValueError):
            GibbsConfig(**bad)
    assert (GibbsConfig().n_samples, GibbsConfig().burn_in, GibbsConfig().thinning) == (1000, 200, 25)


def test_errors():
    with pytest.raises(EmptyMatchLog):
        gibbs_posterior(PlackettLuceModel.from_matches([]), CFG)
    model = PlackettLuceModel({"a": 1.0}, {"a": 1.0}, [("a", "b")])
    with pytest.raises(UnknownIdInMatch):
        gibbs_posterior(model, CFG)


def test_sample_shape_and_positivity():
    samples = posterior([("a", "b", "c")])
    assert set(samples) == {"a", "b", "c"}
    for s in samples.values():
        assert s.shape == (1000,) and np.all(s > 0)


def test_winner_has_higher_posterior():
    s = posterior([("a", "b")])
    assert np.median(s["a"]) > np.median(s["b"])
    assert np.mean(s["a"] / (s["a"] + s["b"])) > 0.5


def test_symmetric_record():
    s = posterior([("a", "b"), ("b", "a")], GibbsConfig(n_samples=4000, seed=2))
    share = s["a"] / (s["a"] + s["b"])
    mean, se = batch_mean_and_se(share[:, None])
    assert abs(mean[0] - 0.5) < 3 * se[0] + 1e-3


def test_determinism():
    a = posterior([("a", "b", "c"), ("c", "a")])
    b = posterior([("a", "b", "c"), ("c", "a")])
    for k in a:
        assert np.array_equal(a[k], b[k])


def test_label_invariance():
    matches = [("a", "b", "c"), ("c", "a"), ("b", "c")]
    relabel = {"a": "zz", "b": "m", "c": "aa"}
    s1 = posterior(matches)
    s2 = posterior([tuple(relabel[p] for p in m) for m in matches])
    for k, v in relabel.items():
        assert np.array_equal(s1[k], s2[v])


def test_three_player_win_probability_matches_oracle():
    matches = [(0, 1, 2), (1, 0), (0, 2)]
    names = [tuple("abc"[i] for i in m) for m in matches]
    s = posterior(names, GibbsConfig(n_samples=4000, burn_in=200, seed=9))
    win = (s["a"] / (s["a"] + s["b"]))[:, None]
    g_mean, g_se = batch_mean_and_se(win)
    oracle = metropolis_pl([list(m) for m in matches], 3, n_chains=300, n_steps=2500, burn=800, seed=4)
    o_win = oracle[..., 0:1] / (oracle[..., 0:1] + oracle[..., 1:2])
    o_mean, o_se = chain_mean_and_se(o_win)
    assert abs(g_mean[0] - o_mean[0]) <= 3 * math.hypot(g_se[0], o_se[0])


@pytest.mark.parametrize("mean, elo", [(1.0, 1200.0), (10.0, 1600.0), (0.1, 800.0)])
def test_elo_formula(mean, elo):
    assert elo_from_mean(mean) == pytest.approx(elo, abs=1e-9)


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
def test_elo_rejects_non_positive(bad):
    with pytest.raises(NonPositiveStrength):
        elo_from_mean(bad)


def test_elo_is_strictly_increasing():
    xs = np.geomspace(1e-6, 1e6, 200)
    elos = [elo_from_mean(x) for x in xs]
    assert all(a < b for a, b in zip(elos, elos[1:]))


def test_rating_state_summary():
    samples = np.arange(1.0, 101.0)
    st = rating_state(samples, 25)
    assert st.strength_mean == pytest.approx(50.5)
    assert st.strength_var == pytest.approx(np.var(samples, ddof=1))
    assert st.thinned_samples == (25.0, 50.0, 75.0, 100.0)
    assert st.elo == pytest.approx(1200 + 400 * math.log10(50.5))
    assert st.rated


def test_refresh_only_rates_players():
    store = PopulationStore()
    sk = parse_sketch("x\n")
    for i in "abc":
        store.insert_sketch(SketchRecord(i, sk))
    store.record_match(MatchResult(("a", "b")))
    refresh_ratings(store, GibbsConfig(n_samples=100, burn_in=10))
    assert store.get("a").rating.rated and store.get("b").rating.rated
    assert not store.get("c").rating.rated and store.get("c").rating.elo == 1200
    assert store.get("a").rating.elo > store.get("b").rating.elo


def views(n, rated=True, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        samples = tuple(rng.gamma(2.0, 1.0, size=40))
        out.append(RatingView(f"s{i}", samples if rated else (), float(np.var(samples)) if rated else None, rated))
    return out


def test_thompson_population_of_seven():
    ids = thompson_select(views(7), 7, GibbsConfig(seed=1))
    assert sorted(ids) == sorted(f"s{i}" for i in range(7))


def test_thompson_twenty_gives_seven_distinct():
    for seed in range(20):
        ids = thompson_select(views(20, seed=seed), 7, GibbsConfig(seed=seed))
        assert len(ids) == len(set(ids)) == 7


def test_thompson_dominant_sketch_almost_always_chosen():
    pop = views(10)
    pop[3] = RatingView("s3", tuple([1e6] * 40), 0.0, True)
    hits = sum("s3" in thompson_select(pop, 2, GibbsConfig(seed=s)) for s in range(100))
    assert hits / 100 > 0.99


def test_thompson_refill_prefers_high_variance():
    pop = [RatingView("top", (100.0,), 0.0, True), RatingView("low", (0.01,), 0.1, True), RatingView("wide", (0.01,), 5.0, True)]
    assert thompson_select(pop, 2, GibbsConfig(seed=0)) == ["top", "wide"]


def test_thompson_deterministic_and_handles_unrated():
    pop = views(5, rated=False)
    assert thompson_select(pop, 3, GibbsConfig(seed=8)) == thompson_select(pop, 3, GibbsConfig(seed=8))
    with pytest.raises(PopulationTooSmall):
        thompson_select(pop[:1], 7, GibbsConfig())


def test_break_ties_without_ties_is_identity():
    assert break_ties([["a"], ["b"], ["c"]], {"a": 1, "b": 5, "c": 9}, 0) == ["a", "b", "c"]


def test_break_ties_two_way_ratio():
    n = 4000
    wins = sum(break_ties([["a", "b"]], {"a": 9.0, "b": 1.0}, s)[0] == "a" for s in range(n))
    sigma = math.sqrt(0.9 * 0.1 / n)
    assert abs(wins / n - 0.9) <= 3 * sigma


def test_break_ties_accepts_model():
    model = PlackettLuceModel({"a": 1.0, "b": 1.0}, {}, [])
    assert sorted(break_ties([["a", "b"]], model, 3)) == ["a", "b"]


def test_break_ties_three_way_uniform():
    n = 6000
    counts = dict.fromkeys(itertools.permutations("abc"), 0)
    for s in range(n):
        counts[tuple(break_ties([["a", "b", "c"]], {"a": 1.0, "b": 1.0, "c": 1.0}, s))] += 1
    sigma = math.sqrt((1 / 6) * (5 / 6) / n)
    for c in counts.values():
        assert abs(c / n - 1 / 6) <= 3 * sigma
