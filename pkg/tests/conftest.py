"""Shared fixtures.

The expensive simulated-victim fixtures are session-scoped and shared: the
full-scale victim and the per-seed strategy runs are built once, by the
first test that asks for them (in the default suite order that is the
budget-curve acceptance test, whose runtime budget covers the build).
"""

from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from bpelab import (
    builtin_domains,
    builtin_language,
    lexicon,
    make_victim,
    native_target_corpus,
    reveal_vocabulary,
    steal_dedup_sentences,
    steal_graybox_sentences,
    steal_local_bpe,
    steal_local_bpe_on_outputs,
    steal_unique_words,
    synthesize,
)

settings.register_profile(
    "suite",
    max_examples=40,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

FULLSCALE_VICTIM_SEED = 101
FULLSCALE_VICTIM_SENTENCES = 200_000
FULLSCALE_VOCAB = 4_000
ATTACKER_SENTENCES = 50_000
FIG1_SEEDS = (0, 1, 2, 3, 4)


@pytest.fixture(scope="session")
def lang():
    return builtin_language()


@pytest.fixture(scope="session")
def lex(lang):
    return lexicon(lang)


@pytest.fixture(scope="session")
def domains():
    return builtin_domains()


@pytest.fixture(scope="session")
def small_victim(domains, lex):
    """Unit-test scale oracle: small hidden corpus, small vocabulary."""
    hidden = native_target_corpus(domains["web-a"], 41, 3000)
    return make_victim(hidden, lex, 900)


@pytest.fixture(scope="session")
def fullscale_victim(domains, lex):
    """The budget-curve victim: 4k hidden vocabulary over 200k native sentences."""
    hidden = native_target_corpus(
        domains["web-a"], FULLSCALE_VICTIM_SEED, FULLSCALE_VICTIM_SENTENCES
    )
    return make_victim(hidden, lex, FULLSCALE_VOCAB)


@pytest.fixture(scope="session")
def fullscale_truth(fullscale_victim):
    return reveal_vocabulary(fullscale_victim)


@pytest.fixture(scope="session")
def fig1_results(domains, fullscale_victim, fullscale_truth):
    """All five strategies against the full-scale victim, five attacker seeds.

    Keyed by seed; each value holds the final overlaps, the query traces,
    and the gray-box recovered vocabulary (reused by the missing-subword
    test).
    """
    truth = fullscale_truth
    out = {}
    for seed in FIG1_SEEDS:
        att = synthesize(domains["web-a"], seed, ATTACKER_SENTENCES).source
        g_vocab, g_trace = steal_graybox_sentences(
            att, fullscale_victim.fresh(), seed=seed, truth=truth
        )
        d_vocab, d_trace = steal_dedup_sentences(
            att, fullscale_victim.fresh(), seed=seed, truth=truth
        )
        u_vocab, u_trace = steal_unique_words(
            att, fullscale_victim.fresh(), seed=seed, truth=truth
        )
        lo_vocab, _ = steal_local_bpe_on_outputs(
            att, fullscale_victim.fresh(), FULLSCALE_VOCAB
        )
        l_vocab = steal_local_bpe(att, FULLSCALE_VOCAB)

        def dice(recovered):
            return 2.0 * len(recovered & truth) / (len(truth) + len(recovered))

        out[seed] = {
            "attacker": att,
            "graybox_vocab": g_vocab,
            "graybox_trace": g_trace,
            "dedup_trace": d_trace,
            "unique_trace": u_trace,
            "final": {
                "graybox": g_trace.final.overlap,
                "dedup": d_trace.final.overlap,
                "unique": u_trace.final.overlap,
                "local_outputs": dice(lo_vocab),
                "local": dice(l_vocab),
            },
        }
    return out
