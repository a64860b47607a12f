"""Victim oracle: access modes, budget accounting, persistence bundle."""

from __future__ import annotations

import pytest

from bpelab import (
    graybox_output_corpus,
    load_victim,
    make_victim,
    reveal_vocabulary,
    save_victim,
)
from bpelab.extraction import AccessModeError
from bpelab.victim import (
    BLACK_BOX,
    GRAY_BOX,
    BudgetExhaustedError,
    VictimOracle,
)


def test_translate_validates_input_shape(small_victim):
    with pytest.raises(TypeError):
        small_victim.fresh().translate("not a batch")
    with pytest.raises(ValueError):
        small_victim.fresh().translate([])
    with pytest.raises(TypeError):
        small_victim.fresh().translate([42])


def test_graybox_returns_subwords_blackbox_does_not(small_victim):
    gray = small_victim.fresh()
    black = VictimOracle(gray.hidden_model, gray.lexicon, BLACK_BOX)
    g = gray.translate(["banola mitopan"])[0]
    b = black.translate(["banola mitopan"])[0]
    assert g.subwords is not None
    assert b.subwords is None
    assert g.text == b.text
    assert g.subwords.detokenize() == g.text
    assert g.charged == b.charged == len(g.subwords)
    assert g.input_words == b.input_words == 2


def test_budget_is_charged_per_output_subword(small_victim):
    oracle = small_victim.fresh()
    assert oracle.spent == 0
    results = oracle.translate(["banola", "banola mitopan"])
    assert oracle.spent == sum(r.charged for r in results)
    assert oracle.remaining_budget == oracle.budget - oracle.spent
    assert len(oracle.query_log) == 2


def test_budget_exhaustion_returns_partial_results(small_victim):
    probe = small_victim.fresh()
    sentences = ["banola mitopan", "banola banola", "mitopan"]
    costs = [probe.translate([s])[0].charged for s in sentences]
    limited = VictimOracle(
        probe.hidden_model, probe.lexicon, GRAY_BOX, budget=costs[0] + costs[1]
    )
    with pytest.raises(BudgetExhaustedError) as err:
        limited.translate(sentences)
    assert len(err.value.results) == 2
    assert limited.spent == costs[0] + costs[1]  # the failing query is not charged
    assert limited.remaining_budget == 0
    # a later affordable query is still rejected only if it exceeds the rest
    with pytest.raises(BudgetExhaustedError):
        limited.translate(["mitopan"])


def test_fresh_resets_spend_but_shares_model(small_victim):
    oracle = small_victim.fresh()
    oracle.translate(["banola"])
    assert oracle.spent > 0
    again = oracle.fresh()
    assert again.spent == 0
    assert again.hidden_model is oracle.hidden_model
    assert again.budget == oracle.budget


def test_reveal_vocabulary_matches_hidden_model(small_victim):
    assert reveal_vocabulary(small_victim) == small_victim.hidden_model.vocab_


def test_bundle_round_trip(tmp_path, small_victim):
    save_victim(small_victim, tmp_path / "victim")
    loaded = load_victim(tmp_path / "victim")
    assert loaded.hidden_model.merges_ == small_victim.hidden_model.merges_
    assert loaded.hidden_model.vocab_ == small_victim.hidden_model.vocab_
    assert loaded.hidden_model.alphabet_ == small_victim.hidden_model.alphabet_
    assert loaded.lexicon == small_victim.lexicon
    assert loaded.access_mode == small_victim.access_mode
    assert loaded.budget == small_victim.budget
    assert loaded.spent == 0  # budgets do not persist
    query = ["banola mitopan banola"]
    assert (
        loaded.translate(query)[0].subwords.render()
        == small_victim.fresh().translate(query)[0].subwords.render()
    )


def test_bundle_rejects_damaged_manifest(tmp_path, small_victim):
    save_victim(small_victim, tmp_path / "victim")
    manifest = tmp_path / "victim" / "manifest.txt"
    manifest.write_text("access_mode=purple\nbudget=10\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_victim(tmp_path / "victim")
    manifest.write_text("access_mode=gray-box\nbudget=ten\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_victim(tmp_path / "victim")


def test_bundle_rejects_damaged_lexicon(tmp_path, small_victim):
    save_victim(small_victim, tmp_path / "victim")
    lexfile = tmp_path / "victim" / "lexicon.tsv"
    lexfile.write_text("word-without-forms\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_victim(tmp_path / "victim")


def test_graybox_output_corpus_requires_graybox_results(small_victim):
    gray = small_victim.fresh()
    results = gray.translate(["banola mitopan", "mitopan"])
    corpus = graybox_output_corpus(results)
    assert len(corpus) == 2
    assert corpus.sentences[0] == results[0].subwords.render()

    black = VictimOracle(gray.hidden_model, gray.lexicon, BLACK_BOX)
    with pytest.raises(AccessModeError):
        graybox_output_corpus(black.translate(["banola"]))


def test_make_victim_validates_vocab_size(domains, lex):
    from bpelab import native_target_corpus

    hidden = native_target_corpus(domains["web-a"], 1, 50)
    with pytest.raises(ValueError):
        make_victim(hidden, lex, 5)  # smaller than the character alphabet
