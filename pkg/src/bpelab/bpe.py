"""Trainable byte-pair subword tokenizer.

A tokenizer is learned from a corpus by greedily merging the most frequent
adjacent symbol pair inside words.  Words are never merged across their
boundary: the final character of each word is a distinguished end-of-word
variant of its base character, so "b" in the middle of a word and "b" at the
end of a word are different symbols with different surface forms ("b@@" vs
"b").  Non-final subwords carry the "@@" continuation marker in all rendered
output and in serialized merge tables and vocabulary files.

The estimator follows the sklearn protocol: hyperparameters are constructor
arguments mirrored as attributes, ``fit`` returns ``self``, and learned state
lives in trailing-underscore attributes.
"""

from __future__ import annotations

import heapq
import unicodedata
import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

__all__ = [
    "Token",
    "SubwordSequence",
    "DanglingSequenceWarning",
    "BpeTokenizer",
    "pretokenize",
    "normalize",
    "train_bpe",
    "encode",
    "decode",
    "save_merges",
    "load_merges",
    "save_vocabulary",
    "load_vocabulary",
    "render_symbol",
    "parse_symbol",
    "CONTINUATION_MARKER",
]

# A symbol is (text, word_final).  Initial symbols are single characters;
# merged symbols concatenate texts and inherit finality from the right side.
Symbol = tuple[str, bool]
MergePair = tuple[Symbol, Symbol]

CONTINUATION_MARKER = "@@"
MERGE_FILE_HEADER = "# bpe merge table v1"


class DanglingSequenceWarning(UserWarning):
    """A subword sequence ended on a continuation-marked token."""


class Token(NamedTuple):
    """One subword occurrence in an encoded sentence."""

    text: str
    final: bool
    oov: bool = False

    @property
    def rendered(self) -> str:
        """Surface form: continuation tokens get the trailing marker."""
        return self.text if self.final else self.text + CONTINUATION_MARKER


@dataclass(frozen=True)
class SubwordSequence:
    """An encoded sentence: ordered subword tokens with finality flags."""

    tokens: tuple[Token, ...]

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    @property
    def dangling(self) -> bool:
        """True when the sequence ends mid-word (last token non-final)."""
        return bool(self.tokens) and not self.tokens[-1].final

    def render(self) -> str:
        """Space-joined surface forms, e.g. ``Gest@@ ohl@@ ene``."""
        return " ".join(t.rendered for t in self.tokens)

    def detokenize(self) -> str:
        """Reassemble words: concatenate runs ending at final tokens."""
        return decode(self)

    @classmethod
    def from_rendered(cls, line: str) -> "SubwordSequence":
        """Parse a space-joined surface form back into a sequence."""
        toks = []
        for field in line.split():
            text, final = parse_symbol(field)
            if not text:
                raise ValueError(f"empty subword in rendered sequence: {line!r}")
            toks.append(Token(text, final))
        return cls(tuple(toks))


def _is_punctuation(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def pretokenize(text: str) -> list[str]:
    """Split on Unicode whitespace, then detach edge punctuation.

    Leading and trailing punctuation characters become separate
    single-character tokens; interior punctuation stays attached.
    """
    out: list[str] = []
    for chunk in text.split():
        lead: list[str] = []
        while chunk and _is_punctuation(chunk[0]):
            lead.append(chunk[0])
            chunk = chunk[1:]
        trail: list[str] = []
        while chunk and _is_punctuation(chunk[-1]):
            trail.append(chunk[-1])
            chunk = chunk[:-1]
        out.extend(lead)
        if chunk:
            out.append(chunk)
        out.extend(reversed(trail))
    return out


def normalize(text: str) -> str:
    """The pre-tokenized form of ``text``: the fixed point of encode/decode."""
    return " ".join(pretokenize(text))


def render_symbol(sym: Symbol) -> str:
    text, final = sym
    return text if final else text + CONTINUATION_MARKER


def parse_symbol(s: str) -> Symbol:
    if s.endswith(CONTINUATION_MARKER):
        return s[: -len(CONTINUATION_MARKER)], False
    return s, True


def _word_symbols(word: str) -> tuple[Symbol, ...]:
    if not word:
        return ()
    return tuple((ch, False) for ch in word[:-1]) + ((word[-1], True),)


def _merged_symbol(pair: MergePair) -> Symbol:
    (lt, _), (rt, rf) = pair
    return lt + rt, rf


def _pair_counts(syms: Sequence[Symbol]) -> Counter:
    return Counter(zip(syms, syms[1:]))


def _apply_pair(syms: list[Symbol], pair: MergePair, merged: Symbol) -> list[Symbol]:
    # Left-to-right replacement; overlapping occurrences resolve leftmost.
    left, right = pair
    out: list[Symbol] = []
    i = 0
    n = len(syms)
    while i < n:
        if i + 1 < n and syms[i] == left and syms[i + 1] == right:
            out.append(merged)
            i += 2
        else:
            out.append(syms[i])
            i += 1
    return out


def _sort_key(pair: MergePair) -> tuple[str, str]:
    return render_symbol(pair[0]), render_symbol(pair[1])


def _learn_merges(
    word_freqs: dict[tuple[Symbol, ...], int],
    n_merges: int,
    min_pair_frequency: int,
) -> list[MergePair]:
    """Greedy most-frequent-pair merging over a word frequency table.

    Ties on count break by lexicographic order of the rendered
    (left, right) strings.  Stops early when no pair reaches
    ``min_pair_frequency``.
    """
    words: list[list[Symbol]] = [list(w) for w in word_freqs]
    freqs: list[int] = list(word_freqs.values())

    stats: Counter = Counter()
    index: dict[MergePair, set[int]] = {}
    for wid, syms in enumerate(words):
        for pair, occ in _pair_counts(syms).items():
            stats[pair] += occ * freqs[wid]
            index.setdefault(pair, set()).add(wid)

    # Lazy-invalidation heap: entries go stale when counts change and are
    # skipped on pop by re-checking against stats.
    heap: list[tuple[int, str, str, MergePair]] = [
        (-count, *_sort_key(pair), pair) for pair, count in stats.items()
    ]
    heapq.heapify(heap)

    merges: list[MergePair] = []
    while len(merges) < n_merges and heap:
        neg, _, _, pair = heapq.heappop(heap)
        count = stats.get(pair, 0)
        if -neg != count:
            continue  # stale entry
        if count < min_pair_frequency:
            break
        merges.append(pair)
        merged = _merged_symbol(pair)
        touched: Counter = Counter()
        for wid in sorted(index.get(pair, ())):
            old = words[wid]
            new = _apply_pair(old, pair, merged)
            words[wid] = new
            delta = _pair_counts(new)
            delta.subtract(_pair_counts(old))
            f = freqs[wid]
            for p, d in delta.items():
                if d == 0:
                    continue
                stats[p] += d * f
                touched[p] = stats[p]
                if d > 0:
                    index.setdefault(p, set()).add(wid)
        del stats[pair]
        index.pop(pair, None)
        for p, c in touched.items():
            if p == pair:
                continue
            if c <= 0:
                stats.pop(p, None)
                index.pop(p, None)
            else:
                heapq.heappush(heap, (-c, *_sort_key(p), p))
    return merges


class BpeTokenizer(BaseEstimator, TransformerMixin):
    """Byte-pair tokenizer with a fit/transform estimator interface.

    Parameters
    ----------
    target_size:
        Requested vocabulary size; training adds merges until
        ``|alphabet| + |merges|`` reaches it or no pair is frequent enough.
    min_pair_frequency:
        Pairs below this count are never merged.

    Attributes (after ``fit``)
    --------------------------
    merges_:
        Learned merges in order, each a pair of symbols.
    alphabet_:
        Symbols observed as initial single characters, end-of-word
        variants distinct.
    vocab_:
        Rendered subword vocabulary, ``|vocab_| == |alphabet_| + |merges_|``.
    exhausted_early_:
        True when training stopped below ``target_size`` because no pair
        reached ``min_pair_frequency``.
    """

    def __init__(self, target_size: int = 8000, min_pair_frequency: int = 2):
        self.target_size = target_size
        self.min_pair_frequency = min_pair_frequency

    # -- validation helpers -------------------------------------------------

    @staticmethod
    def _as_sentences(X) -> list[str]:
        sentences = list(getattr(X, "sentences", X))
        for s in sentences:
            if not isinstance(s, str):
                raise TypeError(f"expected sentences as str, got {type(s).__name__}")
        return sentences

    def _check_params(self) -> None:
        if not isinstance(self.target_size, int) or self.target_size < 1:
            raise ValueError(f"target_size must be a positive int, got {self.target_size!r}")
        if not isinstance(self.min_pair_frequency, int) or self.min_pair_frequency < 1:
            raise ValueError(
                f"min_pair_frequency must be a positive int, got {self.min_pair_frequency!r}"
            )

    # -- estimator interface -------------------------------------------------

    def fit(self, X, y=None) -> "BpeTokenizer":
        """Learn merges from an iterable of sentences (or a Corpus).

        Raises ``ValueError`` when ``target_size`` does not exceed the
        symbol alphabet size (end-of-word variants counted separately).
        """
        self._check_params()
        sentences = self._as_sentences(X)
        word_freqs: Counter = Counter()
        for sent in sentences:
            word_freqs.update(pretokenize(sent))
        sym_freqs = {_word_symbols(w): f for w, f in word_freqs.items()}
        alphabet = {sym for word in sym_freqs for sym in word}
        if self.target_size <= len(alphabet):
            raise ValueError(
                f"target_size={self.target_size} must exceed the symbol alphabet "
                f"size {len(alphabet)} (end-of-word variants are distinct symbols)"
            )
        merges = _learn_merges(
            sym_freqs, self.target_size - len(alphabet), self.min_pair_frequency
        )
        self._set_fitted(merges, frozenset(alphabet))
        self.exhausted_early_ = len(self.vocab_) < self.target_size
        return self

    def _set_fitted(self, merges: list[MergePair], alphabet: frozenset) -> None:
        self.merges_ = list(merges)
        self.alphabet_ = alphabet
        symbols = set(alphabet)
        for pair in merges:
            symbols.add(_merged_symbol(pair))
        self.symbols_ = frozenset(symbols)
        self.vocab_ = frozenset(render_symbol(s) for s in symbols)
        self.ranks_ = {pair: i for i, pair in enumerate(merges)}
        self.exhausted_early_ = False
        self._cache: dict[str, tuple[Token, ...]] = {}

    @classmethod
    def from_merges(
        cls,
        merges: Sequence[MergePair],
        alphabet: Iterable[Symbol] | None = None,
    ) -> "BpeTokenizer":
        """Build a fitted tokenizer from an explicit merge list.

        Without an explicit alphabet, the alphabet is reconstructed as the
        merge constituents that are not themselves merge products; symbols
        that never participate in a merge are then unknown and must come
        from a vocabulary file instead.
        """
        merges = list(merges)
        if len(set(merges)) != len(merges):
            raise ValueError("duplicate merge in merge list")
        for left, right in merges:
            if left[1]:
                raise ValueError(
                    f"left side of a merge cannot be word-final: {render_symbol(left)}"
                )
        if alphabet is None:
            products = {_merged_symbol(p) for p in merges}
            alphabet = {s for pair in merges for s in pair if s not in products}
        alphabet = frozenset(alphabet)
        model = cls(target_size=max(1, len(merges) + len(alphabet)))
        model._set_fitted(merges, alphabet)
        return model

    def transform(self, X) -> list[SubwordSequence]:
        """Encode each sentence into a subword sequence."""
        check_is_fitted(self, "merges_")
        return [self.encode_sentence(s) for s in self._as_sentences(X)]

    def inverse_transform(self, sequences: Iterable[SubwordSequence]) -> list[str]:
        return [decode(seq) for seq in sequences]

    # -- encoding ------------------------------------------------------------

    def encode_word(self, word: str) -> tuple[Token, ...]:
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        syms = list(_word_symbols(word))
        ranks = self.ranks_
        while len(syms) > 1:
            best_rank = None
            best_pair = None
            for pair in zip(syms, syms[1:]):
                r = ranks.get(pair)
                if r is not None and (best_rank is None or r < best_rank):
                    best_rank = r
                    best_pair = pair
            if best_pair is None:
                break
            syms = _apply_pair(syms, best_pair, _merged_symbol(best_pair))
        known = self.symbols_
        tokens = tuple(Token(t, f, oov=(t, f) not in known) for t, f in syms)
        self._cache[word] = tokens
        return tokens

    def encode_sentence(self, text: str) -> SubwordSequence:
        check_is_fitted(self, "merges_")
        if not isinstance(text, str):
            raise TypeError(f"expected str, got {type(text).__name__}")
        tokens: list[Token] = []
        for word in pretokenize(text):
            tokens.extend(self.encode_word(word))
        return SubwordSequence(tuple(tokens))


# -- module-level operation wrappers ------------------------------------------


def train_bpe(
    corpus, target_size: int, min_pair_frequency: int = 2
) -> BpeTokenizer:
    """Train a tokenizer on a corpus (any iterable of sentences)."""
    return BpeTokenizer(
        target_size=target_size, min_pair_frequency=min_pair_frequency
    ).fit(corpus)


def encode(model: BpeTokenizer, text: str) -> SubwordSequence:
    return model.encode_sentence(text)


def decode(seq: SubwordSequence) -> str:
    """Reassemble the sentence; total even on malformed sequences.

    A sequence ending on a continuation token is completed as-is and a
    ``DanglingSequenceWarning`` is emitted as the diagnostic.
    """
    words: list[str] = []
    run: list[str] = []
    for tok in seq:
        run.append(tok.text)
        if tok.final:
            words.append("".join(run))
            run = []
    if run:
        warnings.warn(
            "subword sequence ends on a continuation token; completed as-is",
            DanglingSequenceWarning,
            stacklevel=2,
        )
        words.append("".join(run))
    return " ".join(words)


# -- serialization -------------------------------------------------------------


def save_merges(model: BpeTokenizer) -> str:
    """Merge table: version comment, then one ``left right`` pair per line."""
    check_is_fitted(model, "merges_")
    lines = [MERGE_FILE_HEADER]
    for left, right in model.merges_:
        lines.append(f"{render_symbol(left)} {render_symbol(right)}")
    return "\n".join(lines) + "\n"


def load_merges(text: str) -> BpeTokenizer:
    """Parse a merge table into a fitted tokenizer.

    Raises ``ValueError`` on a malformed line (anything but two
    space-separated symbols) or on a duplicate merge.
    """
    lines = text.splitlines()
    if lines and lines[0].startswith("#"):
        lines = lines[1:]
    merges: list[MergePair] = []
    seen: set[MergePair] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        fields = line.split(" ")
        if len(fields) != 2 or not all(fields):
            raise ValueError(f"malformed merge line {lineno}: {line!r}")
        pair = (parse_symbol(fields[0]), parse_symbol(fields[1]))
        if not pair[0][0] or not pair[1][0]:
            raise ValueError(f"malformed merge line {lineno}: {line!r}")
        if pair in seen:
            raise ValueError(f"duplicate merge at line {lineno}: {line!r}")
        seen.add(pair)
        merges.append(pair)
    return BpeTokenizer.from_merges(merges)


def save_vocabulary(vocab: Iterable[str]) -> str:
    """Vocabulary file: one rendered entry per line, sorted."""
    entries = sorted(set(vocab))
    for e in entries:
        if not e or " " in e:
            raise ValueError(f"invalid vocabulary entry: {e!r}")
    return "\n".join(entries) + "\n" if entries else ""


def load_vocabulary(text: str) -> frozenset[str]:
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        entry = line.strip()
        if not entry:
            continue
        if " " in entry:
            raise ValueError(f"malformed vocabulary line {lineno}: {line!r}")
        entries.append(entry)
    return frozenset(entries)
