from __future__ import annotations

import pytest

from nexus.backends import ToyChecker
from nexus.backends.types import Diagnostics, ProverOutcome
from nexus.population import PopulationStore, goal_key
from nexus.sketch import BLOCK_END, BLOCK_START, SearchReplaceEdit, apply_edit, parse_sketch
from nexus.validate import (
    Verdict,
    Violation,
    final_verify,
    incorporate_cached_goals,
    sandbox_check,
    splice_scripts,
)

CHECK = ToyChecker()
ORIGINAL = parse_sketch(
    "-- problem\n"
    f"{BLOCK_START}\n"
    "lemma g1 : 2 * 3 = 6 := sorry\n"
    "lemma g2 : 4 + 4 = 8 := sorry\n"
    f"{BLOCK_END}\n"
    "lemma target : 6 = /- EVOLVE-VALUE -/ 2 * 3 /- END-EVOLVE-VALUE -/ := by_lemma g1x\n"
)
# the frozen target cites g1x, so give the block a lemma with that name
BASE = apply_edit(ORIGINAL, SearchReplaceEdit("lemma g2", "lemma g1x : 6 = 2 * 3 := eval\nlemma g2"))


def test_verdict_invariant():
    with pytest.raises(ValueError):
        Verdict(False)
    assert Verdict.from_reasons([]).passed
    assert Verdict.from_reasons([Violation("X")]).codes == ["X"]


def test_sandbox_passes_editable_only_change():
    assert CHECK.check(BASE.render()).compiles
    assert sandbox_check(ORIGINAL, BASE, CHECK).passed


def test_sandbox_rejects_frozen_change():
    tampered = parse_sketch(BASE.render().replace("-- problem", "-- problen"))
    verdict = sandbox_check(ORIGINAL, tampered, CHECK)
    assert not verdict.passed and "StatementAltered" in verdict.codes


def test_sandbox_rejects_compile_error():
    broken = apply_edit(BASE, SearchReplaceEdit("lemma g2 : 4 + 4 = 8", "lemma g2 : 4 + = 8"))
    verdict = sandbox_check(ORIGINAL, broken, CHECK)
    assert verdict.codes == ["CompileError"]


def test_sandbox_rejects_smuggled_markers():
    smuggled = BASE.replace_region(1, BASE.regions[1].text + f"{BLOCK_END}\nlemma z : 1 = 1 := eval\n{BLOCK_START}\n")
    verdict = sandbox_check(ORIGINAL, smuggled, CHECK)
    assert not verdict.passed and "StructureChanged" in verdict.codes


def test_sandbox_allows_sorries():
    assert CHECK.check(BASE.render()).open_goals
    assert sandbox_check(ORIGINAL, BASE, CHECK).passed


def test_incorporate_no_goals():
    done = parse_sketch("lemma a : 1 = 1 := eval\n")
    sk, unresolved = incorporate_cached_goals(done, CHECK.check(done.render()), PopulationStore())
    assert sk is done and unresolved == []


def test_incorporate_one_of_two():
    store = PopulationStore()
    store.goal_store(goal_key("⊢ 2*3 = 6"), ProverOutcome("proved", script="eval"))
    inc = incorporate_cached_goals(BASE, CHECK.check(BASE.render()), store)
    assert inc.spliced == [goal_key("⊢ 2*3 = 6")]
    assert inc.unresolved == [goal_key("⊢ 4+4 = 8")]
    assert "lemma g1 : 2 * 3 = 6 := eval" in inc.sketch.render()
    assert inc.sketch.frozen_text() == BASE.frozen_text()


def test_disproved_goal_is_never_spliced():
    store = PopulationStore()
    outcome = ProverOutcome("disproved", script="eval", feedback="left side is 6, right side is 7")
    sk = parse_sketch(f"{BLOCK_START}\nlemma a : 2 * 3 = 7 := sorry\n{BLOCK_END}\n")
    store.goal_store(goal_key("⊢ 2*3 = 7"), outcome)
    inc = incorporate_cached_goals(sk, CHECK.check(sk.render()), store)
    assert inc.sketch == sk and inc.unresolved == [goal_key("⊢ 2*3 = 7")]
    assert inc.feedback == {goal_key("⊢ 2*3 = 7"): outcome}


def test_splice_outside_editable_reported():
    sk = parse_sketch(f"lemma a : 1 + 1 = 2 := sorry\n{BLOCK_START}\n{BLOCK_END}\n")
    key = goal_key("⊢ 1+1 = 2")
    inc = splice_scripts(sk, CHECK.check(sk.render()), {key: "eval"})
    assert inc.sketch == sk and inc.unresolved == [key]
    assert [i.code for i in inc.issues] == ["SpliceOutsideEditable"]


def test_goal_site_mismatch_is_reported():
    inc = splice_scripts(BASE, Diagnostics(True, (), ("⊢ 1 = 1",)), {goal_key("⊢ 1 = 1"): "eval"})
    assert inc.sketch == BASE and [i.code for i in inc.issues] == ["GoalSiteMismatch"]


def test_splice_only_replaces_placeholder_span():
    diag = CHECK.check(BASE.render())
    inc = splice_scripts(BASE, diag, {goal_key(g): "eval" for g in diag.open_goals})
    before, after = BASE.render(), inc.sketch.render()
    assert after == before.replace(":= sorry", ":= eval")


def test_final_verify_complete_proof():
    diag = CHECK.check(BASE.render())
    done = splice_scripts(BASE, diag, {goal_key(g): "eval" for g in diag.open_goals}).sketch
    assert final_verify(done, CHECK).passed


def test_final_verify_placeholder_present():
    verdict = final_verify(BASE, CHECK)
    assert "SorryRemains" in verdict.codes and "GoalsRemain" in verdict.codes


def test_final_verify_disallowed_token_as_code():
    sk = parse_sketch(f"{BLOCK_START}\nlemma a : 1 = 1 := eval\nsorryAx\n{BLOCK_END}\n")
    verdict = final_verify(sk, _AlwaysOK())
    assert verdict.codes == ["DisallowedToken"]


def test_final_verify_disallowed_token_in_comment_is_fine():
    sk = parse_sketch(f"{BLOCK_START}\n-- no sorryAx here\nlemma a : 1 = 1 := eval\n{BLOCK_END}\n")
    assert final_verify(sk, CHECK).passed


class _AlwaysOK:
    concurrent_safe = True

    def check(self, text):
        return Diagnostics(True)


def test_final_verify_conjunction_is_independent():
    # a checker that claims success cannot hide a placeholder from the lexical scan
    assert "SorryRemains" in final_verify(BASE, _AlwaysOK()).codes
