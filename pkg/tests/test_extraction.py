"""Extraction strategies: query plans, budget metering, traces, cyclic attack."""

from __future__ import annotations

import random

import pytest

from bpelab import (
    builtin_domains,
    inverse_lexicon,
    lexicon,
    make_victim,
    reveal_vocabulary,
    steal_cyclic,
    steal_dedup_sentences,
    steal_graybox_sentences,
    steal_local_bpe,
    steal_local_bpe_on_outputs,
    steal_unique_words,
    steal_unique_words_minimized,
    synthesize,
)
from bpelab.extraction import (
    DEFAULT_GRID_START,
    ExtractionTrace,
    TraceSample,
    TRACE_CSV_HEADER,
    dedup_sentences,
    minimized_words,
    overlap,
    traces_to_csv,
    unique_words,
    _weighted_sample,
)
from bpelab.victim import BLACK_BOX, AccessModeError, VictimOracle


def test_overlap_exact_values_and_errors():
    assert overlap({"a"}, {"a"}) == 1.0
    assert overlap({"a", "b"}, {"b", "c"}) == 0.5
    assert overlap({"a", "b", "c"}, {"c"}) == 0.5
    with pytest.raises(ValueError):
        overlap(set(), {"a"})
    with pytest.raises(ValueError):
        overlap({"a"}, set())


def test_unique_words_first_occurrence_order():
    assert unique_words(["b a", "a c b"]) == ["b", "a", "c"]


def test_minimized_words_drops_contained_words():
    words = minimized_words(["low lower", "west low"])
    assert words == ["lower", "west"]  # "low" is inside "lower"
    # nothing containable: everything stays
    assert minimized_words(["aa bb"]) == ["aa", "bb"]


def test_dedup_sentences_covers_each_word_once():
    queries = dedup_sentences(["a b a", "b c", "c"])
    assert queries == ["a b", "c"]
    flat = " ".join(queries).split()
    assert sorted(flat) == sorted(set(flat))


def test_empty_corpus_rejected(small_victim):
    with pytest.raises(ValueError):
        steal_graybox_sentences([], small_victim.fresh())


def test_graybox_strategies_require_graybox_oracle(small_victim):
    black = VictimOracle(small_victim.hidden_model, small_victim.lexicon, BLACK_BOX)
    corpus = ["banola mitopan"]
    for strategy in (
        steal_graybox_sentences,
        steal_unique_words,
        steal_unique_words_minimized,
        steal_dedup_sentences,
    ):
        with pytest.raises(AccessModeError):
            strategy(corpus, black)


def test_budget_metering_is_exact(domains, small_victim):
    corpus = synthesize(domains["web-a"], 6, 40).source
    oracle = small_victim.fresh()
    recovered, trace = steal_graybox_sentences(corpus, oracle, seed=6)
    assert oracle.spent == trace.final.budget_spent
    assert oracle.query_log == list(corpus.sentences)  # every sentence, in order
    assert trace.final.recovered_size == len(recovered)
    # spend strictly increases along the trace; recovery never shrinks
    spends = [s.budget_spent for s in trace.samples]
    sizes = [s.recovered_size for s in trace.samples]
    assert spends == sorted(set(spends))
    assert sizes == sorted(sizes)


def test_budget_cap_stops_querying(domains, small_victim):
    corpus = synthesize(domains["web-a"], 6, 40).source
    capped, trace = steal_graybox_sentences(corpus, small_victim.fresh(), budget=100)
    full, _ = steal_graybox_sentences(corpus, small_victim.fresh())
    assert capped <= full
    # the cap is checked before each query, so at most one query overshoots
    per_query_max = max(r.charged for r in small_victim.fresh().translate(list(corpus.sentences)))
    assert trace.final.budget_spent < 100 + per_query_max


def test_recovered_subwords_come_from_victim_vocabulary(domains, small_victim):
    corpus = synthesize(domains["web-a"], 8, 30).source
    truth = reveal_vocabulary(small_victim)
    recovered, trace = steal_unique_words(corpus, small_victim.fresh(), truth=truth)
    assert recovered <= truth
    assert trace.final.overlap == overlap(recovered, truth)
    assert trace.strategy == "unique-words"


def test_strategy_budget_ordering_holds_even_small(domains, small_victim):
    corpus = synthesize(domains["web-a"], 9, 200).source
    _, tg = steal_graybox_sentences(corpus, small_victim.fresh())
    _, td = steal_dedup_sentences(corpus, small_victim.fresh())
    _, tu = steal_unique_words(corpus, small_victim.fresh())
    _, tm = steal_unique_words_minimized(corpus, small_victim.fresh())
    assert tm.final.budget_spent <= tu.final.budget_spent
    assert tu.final.budget_spent < td.final.budget_spent
    assert td.final.budget_spent < tg.final.budget_spent


def test_grid_must_be_strictly_increasing(domains, small_victim):
    corpus = synthesize(domains["web-a"], 6, 5).source
    with pytest.raises(ValueError):
        steal_graybox_sentences(corpus, small_victim.fresh(), grid=[10, 10])


def test_custom_grid_sampling(domains, small_victim):
    corpus = synthesize(domains["web-a"], 6, 10).source
    _, trace = steal_graybox_sentences(corpus, small_victim.fresh(), grid=[5, 50])
    total = trace.final.budget_spent
    assert total > 50
    crossings = [s.budget_spent for s in trace.samples]
    assert crossings[0] >= 5  # sampled when the grid point was crossed
    assert crossings[-1] == total


def test_overlap_at_steps_through_samples():
    trace = ExtractionTrace(
        "graybox-sentences", 0,
        [TraceSample(300, 10, 0.2), TraceSample(700, 20, 0.5)],
    )
    assert trace.overlap_at(DEFAULT_GRID_START) == 0.0
    assert trace.overlap_at(300) == 0.2
    assert trace.overlap_at(699) == 0.2
    assert trace.overlap_at(10**9) == 0.5
    assert trace.final.overlap == 0.5
    with pytest.raises(ValueError):
        ExtractionTrace("graybox-sentences", 0, []).final


def test_traces_to_csv_format():
    trace = ExtractionTrace("unique-words", 3, [TraceSample(10, 4, 0.25)])
    text = traces_to_csv([trace])
    lines = text.splitlines()
    assert lines[0] == TRACE_CSV_HEADER
    assert lines[1] == "unique-words,3,10,4,0.250000"


def test_local_bpe_needs_no_oracle(domains):
    corpus = synthesize(domains["web-a"], 10, 100).source
    vocab = steal_local_bpe(corpus, 400)
    assert len(vocab) == 400


def test_local_bpe_on_outputs_counts_spend(domains, small_victim):
    corpus = synthesize(domains["web-a"], 10, 50).source
    oracle = small_victim.fresh()
    vocab, spent = steal_local_bpe_on_outputs(corpus, oracle, 300)
    assert spent == oracle.spent > 0
    assert len(vocab) == 300
    # works black-box too: only output text is used
    black = VictimOracle(small_victim.hidden_model, small_victim.lexicon, BLACK_BOX)
    vocab_b, spent_b = steal_local_bpe_on_outputs(corpus, black, 300)
    assert vocab_b == vocab
    assert spent_b == spent


def test_weighted_sample_is_deterministic_and_distinct():
    vocab = {w: 0 for w in "abcdefgh"}
    s1 = _weighted_sample(dict.fromkeys(vocab, 0), 5, random.Random("ws/1"))
    s2 = _weighted_sample(dict.fromkeys(vocab, 0), 5, random.Random("ws/1"))
    assert s1 == s2
    assert len(set(s1)) == 5
    everything = _weighted_sample(dict.fromkeys(vocab, 0), 99, random.Random("ws/2"))
    assert sorted(everything) == sorted(vocab)


def test_weighted_sample_updates_draw_counts():
    vocab = {"a": 0, "b": 0}
    _weighted_sample(vocab, 2, random.Random("ws/3"))
    assert vocab == {"a": 1, "b": 1}


@pytest.fixture(scope="module")
def small_backward(domains, lex):
    hidden_src = synthesize(domains["web-a"], 11, 1500).source
    return make_victim(hidden_src, inverse_lexicon(lex), 700)


def test_cyclic_validation(small_victim, small_backward):
    fwd, bwd = small_victim.fresh(), small_backward.fresh()
    with pytest.raises(ValueError):
        steal_cyclic([], fwd, bwd)
    with pytest.raises(ValueError):
        steal_cyclic(["seed words"], fwd, bwd, k=0)
    with pytest.raises(ValueError):
        steal_cyclic(["seed words"], fwd, bwd, patience=0)
    black = VictimOracle(fwd.hidden_model, fwd.lexicon, BLACK_BOX)
    with pytest.raises(AccessModeError):
        steal_cyclic(["seed words"], black, bwd)
    with pytest.raises(AccessModeError):
        steal_cyclic(["seed words"], fwd, black)


def test_cyclic_small_run_structure(domains, small_victim, small_backward):
    seed_sentence = synthesize(domains["web-a"], 12, 1).source.sentences[0]
    result = steal_cyclic(
        [seed_sentence],
        small_victim.fresh(),
        small_backward.fresh(),
        k=8,
        patience=3,
        iteration_cap=200,
        seed=4,
    )
    assert result.iterations >= 1
    assert result.source_words >= frozenset(seed_sentence.split())
    assert result.target_words  # forward outputs harvested
    assert result.target_vocab <= reveal_vocabulary(small_victim)
    assert result.source_vocab <= reveal_vocabulary(small_backward)
    assert result.trace.strategy == "cyclic"
    assert result.trace.final.budget_spent > 0
    # determinism: identical configuration replays identically
    again = steal_cyclic(
        [seed_sentence],
        small_victim.fresh(),
        small_backward.fresh(),
        k=8,
        patience=3,
        iteration_cap=200,
        seed=4,
    )
    assert again.target_vocab == result.target_vocab
    assert again.iterations == result.iterations


def test_cyclic_iteration_cap_reported(domains, small_victim, small_backward):
    seed_sentence = synthesize(domains["web-a"], 12, 1).source.sentences[0]
    result = steal_cyclic(
        [seed_sentence],
        small_victim.fresh(),
        small_backward.fresh(),
        k=4,
        patience=10**9,  # never stall out: the cap must stop the loop
        iteration_cap=5,
        seed=4,
    )
    assert result.cap_reached
    assert result.iterations == 5
