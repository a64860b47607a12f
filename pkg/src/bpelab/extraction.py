"""Vocabulary extraction strategies against a metered translation oracle.

Every query strategy walks its query plan sentence by sentence, accumulates
the set of observed output subwords, and records an extraction trace: one
sample per crossing of a geometric budget grid, plus a final sample.  The
trace's overlap column scores the recovered set against the victim's true
vocabulary, which callers normally obtain through the evaluation-only
``reveal_vocabulary``; the recovered vocabulary itself is built purely from
query outputs.
"""

from __future__ import annotations

import random
from bisect import bisect_left
from dataclasses import dataclass
from itertools import accumulate
from typing import Iterable, Sequence

from .bpe import BpeTokenizer, pretokenize
from .victim import (
    GRAY_BOX,
    AccessModeError,
    BudgetExhaustedError,
    QueryResult,
    VictimOracle,
    reveal_vocabulary,
)

__all__ = [
    "overlap",
    "TraceSample",
    "ExtractionTrace",
    "CyclicResult",
    "steal_local_bpe",
    "steal_local_bpe_on_outputs",
    "steal_graybox_sentences",
    "steal_unique_words",
    "steal_dedup_sentences",
    "steal_unique_words_minimized",
    "steal_cyclic",
    "traces_to_csv",
    "STRATEGY_NAMES",
    "DEFAULT_GRID_START",
]

DEFAULT_GRID_START = 256

STRATEGY_NAMES = (
    "local-bpe",
    "local-bpe-outputs",
    "graybox-sentences",
    "dedup-sentences",
    "unique-words",
    "unique-words-minimized",
    "cyclic",
)


def overlap(a: Iterable[str], b: Iterable[str]) -> float:
    """Symmetric vocabulary overlap: 2*|a & b| / (|a| + |b|).

    Both vocabularies must be non-empty.
    """
    sa, sb = set(a), set(b)
    if not sa or not sb:
        raise ValueError("overlap is undefined for empty vocabularies")
    return 2.0 * len(sa & sb) / (len(sa) + len(sb))


@dataclass(frozen=True)
class TraceSample:
    budget_spent: int
    recovered_size: int
    overlap: float


@dataclass
class ExtractionTrace:
    """Budget trajectory of one strategy run.

    ``budget_spent`` is strictly increasing across samples and
    ``recovered_size`` never decreases.
    """

    strategy: str
    seed: int
    samples: list[TraceSample]

    @property
    def final(self) -> TraceSample:
        if not self.samples:
            raise ValueError("empty trace has no final sample")
        return self.samples[-1]

    def overlap_at(self, budget: int) -> float:
        """Overlap of the last sample at or below ``budget`` (0.0 before any)."""
        best = 0.0
        for s in self.samples:
            if s.budget_spent > budget:
                break
            best = s.overlap
        return best

    def rows(self) -> list[tuple[str, str, str, str, str]]:
        return [
            (self.strategy, str(self.seed), str(s.budget_spent), str(s.recovered_size), f"{s.overlap:.6f}")
            for s in self.samples
        ]


TRACE_CSV_HEADER = "strategy,seed,budget_spent,recovered_size,overlap"


def traces_to_csv(traces: Sequence[ExtractionTrace]) -> str:
    lines = [TRACE_CSV_HEADER]
    for trace in traces:
        lines.extend(",".join(row) for row in trace.rows())
    return "\n".join(lines) + "\n"


class _Collector:
    """Accumulates observed subwords and samples the trace on a budget grid."""

    def __init__(
        self,
        strategy: str,
        seed: int,
        truth: frozenset[str],
        grid: Sequence[int] | None,
    ):
        self.strategy = strategy
        self.seed = seed
        self.truth = truth
        self.collected: set[str] = set()
        self.hits = 0
        self.spent = 0
        self.samples: list[TraceSample] = []
        if grid is not None:
            pts = list(grid)
            if any(b <= a for a, b in zip(pts, pts[1:])):
                raise ValueError("budget grid must be strictly increasing")
            self._grid = pts
            self._gi = 0
            self._next_power = None
        else:
            self._grid = None
            self._next_power = DEFAULT_GRID_START

    def add_result(self, result: QueryResult) -> None:
        if result.subwords is not None:
            for tok in result.subwords:
                r = tok.rendered
                if r not in self.collected:
                    self.collected.add(r)
                    if r in self.truth:
                        self.hits += 1
        self.add_spend(result.charged)

    def add_spend(self, cost: int) -> None:
        self.spent += cost
        self._maybe_sample()

    def _overlap(self) -> float:
        if not self.collected:
            return 0.0
        return 2.0 * self.hits / (len(self.truth) + len(self.collected))

    def _crossed(self) -> bool:
        if self._grid is not None:
            crossed = False
            while self._gi < len(self._grid) and self._grid[self._gi] <= self.spent:
                self._gi += 1
                crossed = True
            return crossed
        crossed = False
        while self._next_power <= self.spent:
            self._next_power *= 2
            crossed = True
        return crossed

    def _maybe_sample(self) -> None:
        if self._crossed():
            self._record()

    def _record(self) -> None:
        if self.samples and self.samples[-1].budget_spent == self.spent:
            return
        self.samples.append(TraceSample(self.spent, len(self.collected), self._overlap()))

    def finish(self) -> tuple[frozenset[str], ExtractionTrace]:
        if self.spent > 0:
            self._record()
        return frozenset(self.collected), ExtractionTrace(self.strategy, self.seed, self.samples)


def _require_graybox(oracle: VictimOracle, strategy: str) -> None:
    if oracle.access_mode != GRAY_BOX:
        raise AccessModeError(f"{strategy} requires a gray-box oracle")


def _truth(oracle: VictimOracle, truth: frozenset[str] | None) -> frozenset[str]:
    return truth if truth is not None else reveal_vocabulary(oracle)


def _sentences(corpus) -> list[str]:
    sentences = list(getattr(corpus, "sentences", corpus))
    if not sentences:
        raise ValueError("empty corpus")
    return sentences


# -- zero-interaction baselines ---------------------------------------------------


def steal_local_bpe(authentic, target_size: int, min_pair_frequency: int = 2) -> frozenset[str]:
    """Train a local tokenizer on authentic data; consumes no budget."""
    model = BpeTokenizer(
        target_size=target_size, min_pair_frequency=min_pair_frequency
    ).fit(_sentences(authentic))
    return model.vocab_


def steal_local_bpe_on_outputs(
    authentic,
    oracle: VictimOracle,
    target_size: int,
    min_pair_frequency: int = 2,
) -> tuple[frozenset[str], int]:
    """Translate the corpus, then train a local tokenizer on the outputs.

    Works under either access mode (only the output text is used).  Returns
    the vocabulary and the budget spent on the translations.
    """
    sentences = _sentences(authentic)
    before = oracle.spent
    outputs: list[str] = []
    try:
        for sent in sentences:
            outputs.append(oracle.translate([sent])[0].text)
    except BudgetExhaustedError:
        pass
    if not outputs:
        raise ValueError("budget too small to translate any sentence")
    model = BpeTokenizer(
        target_size=target_size, min_pair_frequency=min_pair_frequency
    ).fit(outputs)
    return model.vocab_, oracle.spent - before


# -- gray-box collection strategies ------------------------------------------------


def _run_queries(
    queries: Iterable[str],
    oracle: VictimOracle,
    budget: int | None,
    collector: _Collector,
) -> None:
    for query in queries:
        if budget is not None and collector.spent >= budget:
            break
        try:
            result = oracle.translate([query])[0]
        except BudgetExhaustedError:
            break
        collector.add_result(result)


def steal_graybox_sentences(
    corpus,
    oracle: VictimOracle,
    budget: int | None = None,
    *,
    seed: int = 0,
    truth: frozenset[str] | None = None,
    grid: Sequence[int] | None = None,
) -> tuple[frozenset[str], ExtractionTrace]:
    """Translate the corpus in order, collecting every output subword."""
    _require_graybox(oracle, "graybox-sentences")
    collector = _Collector("graybox-sentences", seed, _truth(oracle, truth), grid)
    _run_queries(_sentences(corpus), oracle, budget, collector)
    return collector.finish()


def unique_words(corpus) -> list[str]:
    """Distinct case-sensitive words in first-occurrence order."""
    seen: dict[str, None] = {}
    for sent in _sentences(corpus):
        for w in pretokenize(sent):
            seen.setdefault(w, None)
    return list(seen)


def steal_unique_words(
    corpus,
    oracle: VictimOracle,
    budget: int | None = None,
    *,
    seed: int = 0,
    truth: frozenset[str] | None = None,
    grid: Sequence[int] | None = None,
) -> tuple[frozenset[str], ExtractionTrace]:
    """Query each distinct word exactly once, one word per query."""
    _require_graybox(oracle, "unique-words")
    collector = _Collector("unique-words", seed, _truth(oracle, truth), grid)
    _run_queries(unique_words(corpus), oracle, budget, collector)
    return collector.finish()


def minimized_words(corpus) -> list[str]:
    """Unique words that are not substrings of any other unique word.

    The skip set is computed up front: a word is dropped when it occurs
    inside some other word of the query set (its subwords are then already
    covered by that word's query).
    """
    words = unique_words(corpus)
    # One joined text with a separator absent from words makes each
    # substring test a single C-level scan; a kept word occurs exactly once.
    sep = "\x1f"
    joined = sep + sep.join(words) + sep
    return [w for w in words if joined.count(w) == 1]


def steal_unique_words_minimized(
    corpus,
    oracle: VictimOracle,
    budget: int | None = None,
    *,
    seed: int = 0,
    truth: frozenset[str] | None = None,
    grid: Sequence[int] | None = None,
) -> tuple[frozenset[str], ExtractionTrace]:
    """Unique-word querying that skips words contained in other queries."""
    _require_graybox(oracle, "unique-words-minimized")
    collector = _Collector("unique-words-minimized", seed, _truth(oracle, truth), grid)
    _run_queries(minimized_words(corpus), oracle, budget, collector)
    return collector.finish()


def dedup_sentences(corpus) -> list[str]:
    """Minified sentences: each filtered to its not-yet-seen words."""
    seen: set[str] = set()
    queries: list[str] = []
    for sent in _sentences(corpus):
        fresh = list(dict.fromkeys(w for w in pretokenize(sent) if w not in seen))
        if not fresh:
            continue
        seen.update(fresh)
        queries.append(" ".join(fresh))
    return queries


def steal_dedup_sentences(
    corpus,
    oracle: VictimOracle,
    budget: int | None = None,
    *,
    seed: int = 0,
    truth: frozenset[str] | None = None,
    grid: Sequence[int] | None = None,
) -> tuple[frozenset[str], ExtractionTrace]:
    """Query minified sentences, keeping one context per new word."""
    _require_graybox(oracle, "dedup-sentences")
    collector = _Collector("dedup-sentences", seed, _truth(oracle, truth), grid)
    _run_queries(dedup_sentences(corpus), oracle, budget, collector)
    return collector.finish()


# -- cyclic nonsense-query attack ----------------------------------------------------


@dataclass
class CyclicResult:
    """Outcome of the two-directional nonsense-query attack."""

    source_words: frozenset[str]
    target_words: frozenset[str]
    source_vocab: frozenset[str]
    target_vocab: frozenset[str]
    trace: ExtractionTrace
    iterations: int
    cap_reached: bool


def _weighted_sample(
    vocab: dict[str, int], k: int, rng: random.Random
) -> list[str]:
    """Sample up to k distinct words, weight 1/(1+times_sampled).

    Draws repeatedly from the fixed weight vector and discards repeats,
    which is distribution-identical to removing each drawn word and
    renormalizing, but needs only one cumulative-weight pass.
    """
    pool = list(vocab)
    want = min(k, len(pool))
    cum = list(accumulate(1.0 / (1.0 + vocab[w]) for w in pool))
    chosen: dict[str, None] = {}
    attempts = 0
    while len(chosen) < want and attempts < 8 * want + 16:
        attempts += 1
        chosen.setdefault(pool[bisect_left(cum, rng.random() * cum[-1], hi=len(pool) - 1)], None)
    if len(chosen) < want:
        # nearly everything is already drawn; take the rest deterministically
        for w in pool:
            if w not in chosen:
                chosen.setdefault(w, None)
                if len(chosen) == want:
                    break
    out = list(chosen)
    for w in out:
        vocab[w] += 1
    return out


def steal_cyclic(
    seeds: Sequence[str],
    oracle_fwd: VictimOracle,
    oracle_bwd: VictimOracle,
    *,
    k: int = 20,
    patience: int = 5,
    iteration_cap: int = 10000,
    seed: int = 0,
    budget: int | None = None,
    truth: frozenset[str] | None = None,
    grid: Sequence[int] | None = None,
) -> CyclicResult:
    """Grow word vocabularies by translating nonsense both ways.

    Each iteration samples up to ``k`` known source-side words (weight
    1/(1+times_sampled), without replacement within a query), translates
    them forward, harvests new output words, then does the same backward.
    Stops when neither side grows for ``patience`` consecutive iterations,
    or at ``iteration_cap`` (reported, not fatal), or when a budget runs
    out.  Word vocabularies are converted to subwords from the recorded
    gray-box outputs, costing no extra budget; the trace scores the
    forward-side collection against the forward victim's vocabulary and
    counts the spend of both directions.
    """
    _require_graybox(oracle_fwd, "cyclic")
    _require_graybox(oracle_bwd, "cyclic")
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if patience < 1:
        raise ValueError(f"patience must be positive, got {patience}")
    src_words: dict[str, int] = {}
    for sent in seeds:
        for w in pretokenize(sent):
            src_words.setdefault(w, 0)
    if not src_words:
        raise ValueError("seed sentences contain no words")
    tgt_words: dict[str, int] = {}

    rng = random.Random(f"cyclic/{seed}")
    collector = _Collector("cyclic", seed, _truth(oracle_fwd, truth), grid)
    src_vocab: set[str] = set()  # backward-side subwords, kept off the trace

    iterations = 0
    stall = 0
    cap_reached = False
    while True:
        if iterations >= iteration_cap:
            cap_reached = True
            break
        if budget is not None and collector.spent >= budget:
            break
        iterations += 1
        grew = False

        query = " ".join(_weighted_sample(src_words, k, rng))
        try:
            res_f = oracle_fwd.translate([query])[0]
        except BudgetExhaustedError:
            break
        collector.add_result(res_f)
        for w in pretokenize(res_f.text):
            if w not in tgt_words:
                tgt_words[w] = 0
                grew = True

        if tgt_words:
            back_query = " ".join(_weighted_sample(tgt_words, k, rng))
            try:
                res_b = oracle_bwd.translate([back_query])[0]
            except BudgetExhaustedError:
                break
            # Backward spend counts toward the attack budget even though
            # only forward-side subwords feed the trace.
            collector.add_spend(res_b.charged)
            src_vocab.update(t.rendered for t in res_b.subwords)
            for w in pretokenize(res_b.text):
                if w not in src_words:
                    src_words[w] = 0
                    grew = True

        stall = 0 if grew else stall + 1
        if stall >= patience:
            break

    tgt_vocab, trace = collector.finish()
    return CyclicResult(
        source_words=frozenset(src_words),
        target_words=frozenset(tgt_words),
        source_vocab=frozenset(src_vocab),
        target_vocab=tgt_vocab,
        trace=trace,
        iterations=iterations,
        cap_reached=cap_reached,
    )
