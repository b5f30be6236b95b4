from __future__ import annotations

import random
import re

import pytest

from nexus.backends.types import ProverOutcome
from nexus.errors import MissingTemplateVariable, NoRatedSketch
from nexus.population import PopulationStore, RatingState, SketchRecord, goal_key
from nexus.selection import (
    DIRECTIVES,
    PUCBConfig,
    assemble_prompt,
    load_template,
    pick_inspirations,
    pucb_scores,
    render_players,
    render_template,
    select_parent,
    template_fields,
)
from nexus.sketch import parse_sketch

SK = parse_sketch("lemma a : 1 + 1 = 2 := sorry\n")


def rated(elo: float) -> RatingState:
    mean = 10 ** ((elo - 1200) / 400)
    return RatingState((mean,), (mean,), mean, 0.0, elo, True)


def population(elos, store=None):
    store = store or PopulationStore()
    ids = []
    for elo in elos:
        rid = store.insert_sketch(SketchRecord(store.new_id(), SK))
        if elo is not None:
            store.get(rid).rating = rated(elo)
        ids.append(rid)
    return store, ids


def test_config_defaults_and_validation():
    cfg = PUCBConfig()
    assert (cfg.exploration_c, cfg.elite_size, cfg.n_inspirations) == (0.2, 64, 2)
    assert set(cfg.directive_weights) == set(DIRECTIVES)
    with pytest.raises(ValueError):
        PUCBConfig(elite_size=0)
    with pytest.raises(ValueError):
        PUCBConfig(directive_weights={"a": 0.5, "b": 0.4})


def test_scores_without_exploration_are_normalised_elo():
    assert pucb_scores([(800, 3), (1200, 0), (1000, 9)], 12, 0.0) == [0.0, 1.0, 0.5]


def test_worked_example():
    assert pucb_scores([(1500, 4)], 100, 0.2) == [1.4]


def test_unvisited_scores_higher_at_equal_elo():
    a, b = pucb_scores([(1200, 0), (1200, 5)], 5, 0.2)
    assert a > b


def test_no_rated_sketch():
    store, _ = population([None, None])
    with pytest.raises(NoRatedSketch):
        select_parent(store, PUCBConfig())


def test_single_rated_sketch_gets_visit():
    store, ids = population([None, 1300])
    assert select_parent(store, PUCBConfig()) == ids[1]
    assert store.get(ids[1]).visits == 1


def test_elite_closure_randomised():
    rng = random.Random(0)
    for trial in range(100):
        store, ids = population([rng.uniform(600, 1800) for _ in range(100)])
        for rid in ids:
            store.get(rid).visits = rng.randrange(20)
        elite = set(store.top_by_elo(64))
        assert select_parent(store, PUCBConfig(exploration_c=rng.uniform(0, 3))) in elite


def test_equal_elos_round_robin():
    store, ids = population([1200] * 64)
    for _ in range(640):
        select_parent(store, PUCBConfig())
    visits = [store.get(i).visits for i in ids]
    assert max(visits) - min(visits) <= 1


def test_shift_invariance():
    base = [900, 1100, 1250, 1400]
    s1, _ = population(base)
    s2, _ = population([e + 333 for e in base])
    for rec1, rec2, v in zip(s1.records(), s2.records(), (5, 0, 3, 9)):
        rec1.visits = rec2.visits = v
    assert select_parent(s1, PUCBConfig()) == select_parent(s2, PUCBConfig())


def test_ties_go_to_lowest_id():
    store, ids = population([1200, 1200, 1200])
    assert select_parent(store, PUCBConfig()) == min(ids)


def test_inspirations_exclude_root():
    store, ids = population([1000, 1500, 1300, 1400])
    picked = [r.id for r in pick_inspirations(store, ids[1], 2)]
    assert picked == [ids[3], ids[2]]
    assert pick_inspirations(store, ids[1], 0) == []


def test_prompt_without_inspirations():
    rec = SketchRecord("root", SK)
    bundle = assemble_prompt(rec, [], load_template("prover"), seed=3)
    assert SK.render() in bundle.rendered_prompt
    assert "## Prior attempts" not in bundle.rendered_prompt
    assert bundle.directive in DIRECTIVES
    assert bundle.inspiration_ids == ()


def test_prompt_with_two_inspirations():
    root = SketchRecord("root", SK)
    fb = {goal_key("⊢ 1+1 = 3"): ProverOutcome("disproved", script="eval", feedback="left side is 2, right side is 3")}
    insp = [
        SketchRecord("i1", SK, plan_summary="split", goal_feedback=fb, rating=rated(1350)),
        SketchRecord("i2", SK, rating=rated(1275.5)),
    ]
    bundle = assemble_prompt(root, insp, load_template("prover"), seed=1)
    text = bundle.rendered_prompt
    assert "Elo: 1350.0" in text and "Elo: 1275.5" in text
    assert "disproved" in text
    assert bundle.inspiration_ids == ("i1", "i2")


def test_too_many_inspirations():
    insp = [SketchRecord(f"i{k}", SK) for k in range(3)]
    with pytest.raises(ValueError):
        assemble_prompt(SketchRecord("root", SK), insp, load_template("prover"), 0)


def test_degenerate_directive_distribution():
    weights = {d: 0.0 for d in DIRECTIVES}
    weights["try a completely new approach"] = 1.0
    cfg = PUCBConfig(directive_weights=weights)
    for seed in range(20):
        bundle = assemble_prompt(SketchRecord("r", SK), [], load_template("prover"), seed, cfg)
        assert bundle.directive == "try a completely new approach"
        assert "Directive: try a completely new approach." in bundle.rendered_prompt


def test_prompt_is_deterministic_given_seed():
    a = assemble_prompt(SketchRecord("r", SK), [], load_template("prover"), 42)
    b = assemble_prompt(SketchRecord("r", SK), [], load_template("prover"), 42)
    assert a == b


def test_missing_code_variable():
    with pytest.raises(MissingTemplateVariable):
        assemble_prompt(SketchRecord("r", SK), [], "no code here {plan}", 0)
    with pytest.raises(MissingTemplateVariable):
        render_template("{code} {unknown}", {"code": "x"})


@pytest.mark.parametrize("name", ["prover", "rater", "basic"])
def test_templates_render_completely(name):
    template = load_template(name)
    values = {f: "VALUE{}" for f in template_fields(template)}
    out = render_template(template, values)
    leftover = set(re.findall(r"\{([a-z_]+)\}", out))
    assert not leftover
    assert out.count("VALUE{}") == len(template_fields(template))


def test_render_players_labels():
    text = render_players([SketchRecord("a", SK), SketchRecord("b", SK)])
    assert "### Player P1" in text and "### Player P2" in text
