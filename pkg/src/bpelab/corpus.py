"""Corpora: ingestion, measurement, splitting, and synthetic generation.

The synthetic generator produces parallel text in a pair of constructed
languages with a well-defined word-level translation.  Source words are
``stem + suffix``; target words apply an invertible per-character cipher to
the stem and swap the suffix inventory.  Every source word has a short
default translation plus longer context-dependent variants, and a small
deterministic fraction of words carries a cross-stem synonym, so translation
choice genuinely depends on context and the translation graph is connected.

Domains share the stem inventory but skew stem frequencies through
domain-specific Zipf rank permutations; one built-in domain ("patentese")
additionally uses an exclusive stem block, its own suffix skew, and longer
sentences, giving a strong domain shift against the two similar web domains.
"""

from __future__ import annotations

import random
import zlib
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from statistics import fmean
from typing import Iterable, Sequence

from .bpe import pretokenize

__all__ = [
    "Corpus",
    "ParallelCorpus",
    "LanguageStats",
    "CorpusStats",
    "Language",
    "DomainSpec",
    "ingest",
    "stats",
    "split",
    "synthesize",
    "native_target_corpus",
    "build_language",
    "builtin_language",
    "builtin_domains",
    "lexicon",
    "inverse_lexicon",
    "choose_form",
    "translate_words",
]


@dataclass(frozen=True)
class Corpus:
    """A monolingual list of sentences, immutable after construction."""

    sentences: tuple[str, ...]
    language: str
    domain: str = ""
    dropped_lines: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))

    def __len__(self) -> int:
        return len(self.sentences)


@dataclass(frozen=True)
class ParallelCorpus:
    """Aligned sentence pairs in two languages."""

    source: Corpus
    target: Corpus

    def __post_init__(self):
        if len(self.source) != len(self.target):
            raise ValueError(
                f"unaligned parallel corpus: {len(self.source)} vs {len(self.target)} sentences"
            )
        if self.source.language == self.target.language:
            raise ValueError("parallel corpus sides must have distinct languages")

    def __len__(self) -> int:
        return len(self.source)


def ingest(path: str | Path, language: str, domain: str = "") -> Corpus:
    """Read one sentence per line, UTF-8 strict.

    Whitespace is normalized; empty lines are dropped and counted on the
    returned corpus (``dropped_lines``).  Invalid UTF-8 raises.
    """
    raw = Path(path).read_bytes()
    text = raw.decode("utf-8")  # strict: malformed input must not pass silently
    sentences = []
    dropped = 0
    for line in text.splitlines():
        norm = " ".join(line.split())
        if norm:
            sentences.append(norm)
        else:
            dropped += 1
    return Corpus(tuple(sentences), language, domain, dropped_lines=dropped)


# -- measurement ---------------------------------------------------------------


@dataclass(frozen=True)
class LanguageStats:
    language: str
    sentences: int
    mean_tokens_per_line: float
    mean_chars_per_line: float
    unique_tokens: int
    unique_chars: int


@dataclass(frozen=True)
class CorpusStats:
    """Per-language and overall measurements of a corpus.

    Tokens are pre-tokenizer words, lowercased before counting uniques.
    Characters are counted over the raw sentences minus whitespace,
    lowercased.  Mean characters per line include interior spaces.
    """

    per_language: tuple[LanguageStats, ...]
    overall: LanguageStats

    def rows(self) -> list[tuple[str, str, str]]:
        out = []
        for ls in (*self.per_language, self.overall):
            out.append(("sentences", ls.language, str(ls.sentences)))
            out.append(("mean_tokens_per_line", ls.language, f"{ls.mean_tokens_per_line:.6f}"))
            out.append(("mean_chars_per_line", ls.language, f"{ls.mean_chars_per_line:.6f}"))
            out.append(("unique_tokens", ls.language, str(ls.unique_tokens)))
            out.append(("unique_chars", ls.language, str(ls.unique_chars)))
        return out

    def to_csv(self) -> str:
        lines = ["metric,language,value"]
        lines.extend(",".join(row) for row in self.rows())
        return "\n".join(lines) + "\n"


def _measure(sentences: Sequence[str], language: str) -> LanguageStats:
    tokens: set[str] = set()
    chars: set[str] = set()
    for s in sentences:
        tokens.update(w.lower() for w in pretokenize(s))
        chars.update(ch for ch in s.lower() if not ch.isspace())
    return LanguageStats(
        language=language,
        sentences=len(sentences),
        mean_tokens_per_line=fmean(len(pretokenize(s)) for s in sentences),
        mean_chars_per_line=fmean(len(s) for s in sentences),
        unique_tokens=len(tokens),
        unique_chars=len(chars),
    )


def stats(data: Corpus | ParallelCorpus) -> CorpusStats:
    """Measure a corpus; raises on an empty one (means are undefined)."""
    if isinstance(data, ParallelCorpus):
        sides = [data.source, data.target]
    else:
        sides = [data]
    if any(len(side) == 0 for side in sides):
        raise ValueError("cannot measure an empty corpus")
    per = tuple(_measure(side.sentences, side.language) for side in sides)
    all_sentences = [s for side in sides for s in side.sentences]
    overall = _measure(all_sentences, "all")
    return CorpusStats(per_language=per, overall=overall)


def split(
    parallel: ParallelCorpus, sizes: Sequence[int], seed: int | None = None
) -> list[ParallelCorpus]:
    """Partition aligned pairs into parts of the given sizes.

    Order-preserving when ``seed`` is None, otherwise a seeded shuffle of
    pair indices.  ``sizes`` must be non-negative and sum to the corpus size.
    """
    if any(n < 0 for n in sizes):
        raise ValueError(f"negative split size in {sizes}")
    if sum(sizes) != len(parallel):
        raise ValueError(f"split sizes {sizes} do not sum to corpus size {len(parallel)}")
    indices = list(range(len(parallel)))
    if seed is not None:
        random.Random(f"split/{seed}").shuffle(indices)
    parts = []
    at = 0
    for n in sizes:
        chunk = indices[at : at + n]
        at += n
        parts.append(
            ParallelCorpus(
                Corpus(
                    tuple(parallel.source.sentences[i] for i in chunk),
                    parallel.source.language,
                    parallel.source.domain,
                ),
                Corpus(
                    tuple(parallel.target.sentences[i] for i in chunk),
                    parallel.target.language,
                    parallel.target.domain,
                ),
            )
        )
    return parts


# -- synthetic language ---------------------------------------------------------


@dataclass(frozen=True)
class Language:
    """The shared inventory behind all domains of one synthetic language pair.

    ``form_keys`` aligns with ``stems`` and names the word family each stem
    belongs to: a prefixed stem variant carries its base stem's key, so the
    pair share translation habits (a base word and its prefixed superstring
    always agree on which form is the citation form).
    """

    stems: tuple[str, ...]
    target_stems: tuple[str, ...]
    source_suffixes: tuple[str, ...]
    target_suffixes: tuple[str, ...]
    target_suffixes_long: tuple[str, ...]
    form_keys: tuple[str, ...] = ()
    source_language: str = "l1"
    target_language: str = "l2"
    synonym_count: int = 2
    synonym_core_stems: int = 200
    long_primary_percent: int = 35

    def __post_init__(self):
        if not self.stems or not self.source_suffixes:
            raise ValueError("language needs at least one stem and one suffix")
        if len(self.stems) != len(self.target_stems):
            raise ValueError("stem inventories of the two sides must align")
        if not self.form_keys:
            object.__setattr__(self, "form_keys", self.stems)
        if len(self.form_keys) != len(self.stems):
            raise ValueError("form keys must align with stems")
        if not (
            len(self.source_suffixes)
            == len(self.target_suffixes)
            == len(self.target_suffixes_long)
        ):
            raise ValueError("suffix inventories of the two sides must align")


@dataclass(frozen=True)
class DomainSpec:
    """Sampling parameters for one domain of the synthetic language."""

    name: str
    language: Language
    stem_ids: tuple[int, ...]
    stem_weights: tuple[float, ...]
    suffix_weights: tuple[float, ...]
    min_words: int = 6
    max_words: int = 14

    def __post_init__(self):
        if not self.stem_ids:
            raise ValueError(f"domain {self.name!r} has no stems")
        if len(self.stem_ids) != len(self.stem_weights):
            raise ValueError(f"domain {self.name!r}: stem weights do not align with stems")
        if len(self.suffix_weights) != len(self.language.source_suffixes):
            raise ValueError(f"domain {self.name!r}: suffix weights do not align with suffixes")
        if any(w <= 0 for w in self.stem_weights) or any(w <= 0 for w in self.suffix_weights):
            raise ValueError(f"domain {self.name!r}: weights must be positive")
        if not (1 <= self.min_words <= self.max_words):
            raise ValueError(f"domain {self.name!r}: bad sentence length bounds")
        if any(i < 0 or i >= len(self.language.stems) for i in self.stem_ids):
            raise ValueError(f"domain {self.name!r}: stem id out of range")


_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"

# Deliberately prefix-free: no suffix is a prefix of another, so a word can
# only be a substring of another word through the designed stem prefixes.
_SOURCE_SUFFIXES = ("an", "el", "or", "at", "um", "ara", "ist", "ion", "ika", "ois", "ur", "ette")
# Six distinct target short suffixes cover twelve source suffixes, so pairs
# of source words per stem share a short translation.  Together with the
# cross-stem synonyms this makes translation many-to-many: backtranslating
# a shared form can wander to a different source word, which is what lets
# the two-directional nonsense attack explore beyond its seed words.
_TARGET_SUFFIXES_DISTINCT = ("o", "ar", "ena", "ul", "ir", "ot")
_TARGET_SUFFIXES = tuple(
    _TARGET_SUFFIXES_DISTINCT[i % len(_TARGET_SUFFIXES_DISTINCT)] for i in range(12)
)
_LONG_EXTENSIONS = ("enen", "isen", "aten", "eler")


def _make_stem(rng: random.Random, syllables: Sequence[int]) -> str:
    n = rng.choice(syllables)
    s = "".join(rng.choice(_CONSONANTS) + rng.choice(_VOWELS) for _ in range(n))
    if rng.random() < 0.35:
        s += rng.choice(_CONSONANTS)
    return s


def _unique_stems(rng: random.Random, count: int, syllables: Sequence[int], taken: set[str]) -> list[str]:
    out: list[str] = []
    while len(out) < count:
        s = _make_stem(rng, syllables)
        if s not in taken:
            taken.add(s)
            out.append(s)
    return out


def build_language(seed: int = 7) -> Language:
    """Construct the full synthetic language pair from a seed.

    Inventory: 840 base stems, 60 prefixed variants of base stems (so some
    words are substrings of others), and 300 longer technical stems (some
    with digit tails) used only by the shifted built-in domain.
    """
    rng = random.Random(f"language/{seed}")
    taken: set[str] = set()
    # Three syllables minimum keeps words long enough that accidental
    # substring collisions between unrelated words are vanishingly rare.
    base = _unique_stems(rng, 840, (3, 3, 3), taken)
    prefixed = []
    prefixed_base = []
    while len(prefixed) < 60:
        stem = rng.choice(base[200:])
        cand = rng.choice(("mi", "ver", "ko")) + stem
        if cand not in taken:
            taken.add(cand)
            prefixed.append(cand)
            prefixed_base.append(stem)
    technical = _unique_stems(rng, 300, (3, 4, 4), taken)
    technical = [
        s + str(rng.randint(2, 9)) if rng.random() < 0.25 else s for s in technical
    ]
    stems = tuple(base + prefixed + technical)
    form_keys = tuple(base + prefixed_base + technical)

    consonant_map = dict(zip(_CONSONANTS, rng.sample(_CONSONANTS, len(_CONSONANTS))))
    vowel_map = dict(zip(_VOWELS, rng.sample(_VOWELS, len(_VOWELS))))
    cipher = {**consonant_map, **vowel_map}
    target_stems = tuple("".join(cipher.get(ch, ch) for ch in s) for s in stems)

    long_suffixes = tuple(
        suf + _LONG_EXTENSIONS[i % len(_LONG_EXTENSIONS)]
        for i, suf in enumerate(_TARGET_SUFFIXES)
    )
    return Language(
        stems=stems,
        target_stems=target_stems,
        source_suffixes=_SOURCE_SUFFIXES,
        target_suffixes=_TARGET_SUFFIXES,
        target_suffixes_long=long_suffixes,
        form_keys=form_keys,
    )


@lru_cache(maxsize=1)
def builtin_language() -> Language:
    return build_language(7)


def _zipf_weights(n: int, exponent: float, permutation: Sequence[int]) -> tuple[float, ...]:
    return tuple(1.0 / (permutation[i] + 1) ** exponent for i in range(n))


def _jittered(perm: list[int], rng: random.Random, swaps: int) -> list[int]:
    out = list(perm)
    for _ in range(swaps):
        i = rng.randrange(len(out) - 1)
        out[i], out[i + 1] = out[i + 1], out[i]
    return out


@lru_cache(maxsize=1)
def builtin_domains() -> dict[str, DomainSpec]:
    """Three built-in domains: two similar web domains and one shifted."""
    lang = builtin_language()
    rng = random.Random("domains/1")
    web_ids = tuple(range(900))
    web_perm = list(range(900))
    rng.shuffle(web_perm)
    suffix_perm = list(range(len(lang.source_suffixes)))
    rng.shuffle(suffix_perm)

    rng_b = random.Random("domains/web-b")
    perm_b = _jittered(web_perm, rng_b, swaps=90)

    rng_p = random.Random("domains/patentese")
    patent_ids = tuple(range(600, 1200))
    patent_perm = list(range(600))
    rng_p.shuffle(patent_perm)
    patent_suffix_perm = list(range(len(lang.source_suffixes)))
    rng_p.shuffle(patent_suffix_perm)

    core = lang.synonym_core_stems

    def _with_core_boost(weights: tuple[float, ...]) -> tuple[float, ...]:
        # Core stems are the everyday vocabulary: frequent in running text
        # no matter where the Zipf permutation ranked them.
        return tuple(w * (2.5 if i < core else 1.0) for i, w in enumerate(weights))

    return {
        "web-a": DomainSpec(
            name="web-a",
            language=lang,
            stem_ids=web_ids,
            stem_weights=_with_core_boost(_zipf_weights(900, 1.1, web_perm)),
            suffix_weights=_zipf_weights(len(lang.source_suffixes), 0.7, suffix_perm),
        ),
        "web-b": DomainSpec(
            name="web-b",
            language=lang,
            stem_ids=web_ids,
            stem_weights=_with_core_boost(_zipf_weights(900, 1.1, perm_b)),
            suffix_weights=_zipf_weights(len(lang.source_suffixes), 0.7, suffix_perm),
        ),
        "patentese": DomainSpec(
            name="patentese",
            language=lang,
            stem_ids=patent_ids,
            stem_weights=_zipf_weights(600, 1.25, patent_perm),
            suffix_weights=_zipf_weights(
                len(lang.source_suffixes), 1.0, patent_suffix_perm
            ),
            min_words=10,
            max_words=22,
        ),
    }


# -- translation ----------------------------------------------------------------


@lru_cache(maxsize=4)
def lexicon(lang: Language) -> dict[str, tuple[str, ...]]:
    """Source word to target forms, first form being the isolated default.

    Every word has a short form and a longer inflected variant; which one
    comes first (the citation form, used for isolated words) is a stable
    per-family choice, so a word and its prefixed superstring agree on it.
    Words of the core stems (the most basic, most frequent vocabulary)
    carry cross-stem synonyms pointing at other core stems, so the core's
    translation graph is densely many-to-many while the long tail stays
    close to one-to-one.
    """
    lex: dict[str, tuple[str, ...]] = {}
    core = min(lang.synonym_core_stems, len(lang.stems))
    for si, stem in enumerate(lang.stems):
        tstem = lang.target_stems[si]
        key = lang.form_keys[si]
        for ji, suf in enumerate(lang.source_suffixes):
            word = stem + suf
            short = tstem + lang.target_suffixes[ji]
            long = tstem + lang.target_suffixes_long[ji]
            hk = zlib.crc32(f"{key}|{suf}".encode("utf-8"))
            forms = [long, short] if hk % 100 < lang.long_primary_percent else [short, long]
            if si < core:
                h = zlib.crc32(word.encode("utf-8"))
                for step in range(lang.synonym_count):
                    other = (si + 1 + (h >> (16 * step)) % 997) % core
                    # The synonym's suffix is re-drawn (never the word's own),
                    # so synonym edges hop between suffix classes; otherwise
                    # words sharing a short translation would form six
                    # disconnected sub-vocabularies.
                    oji = (ji + 1 + (h >> (16 * step + 7)) % 11) % len(
                        lang.source_suffixes
                    )
                    forms.append(lang.target_stems[other] + lang.target_suffixes[oji])
            lex[word] = tuple(dict.fromkeys(forms))
    return lex


def inverse_lexicon(lex: dict[str, tuple[str, ...]]) -> dict[str, tuple[str, ...]]:
    """Invert a lexicon: every target form maps back to its source words."""
    inv: dict[str, list[str]] = {}
    for word in sorted(lex):
        for form in lex[word]:
            bucket = inv.setdefault(form, [])
            if word not in bucket:
                bucket.append(word)
    return {form: tuple(words) for form, words in inv.items()}


def choose_form(forms: Sequence[str], word: str, prev: str | None) -> str:
    """Deterministic context-dependent form choice.

    Isolated words (no previous word) always take the first form — the
    word's citation form; in context the choice is a stable hash of
    (previous word, word) over all forms.
    """
    if len(forms) == 1 or prev is None:
        return forms[0]
    h = zlib.crc32(f"{prev}\x1f{word}".encode("utf-8"))
    return forms[h % len(forms)]


def translate_words(words: Sequence[str], lex: dict[str, tuple[str, ...]]) -> list[str]:
    """Word-by-word translation; out-of-lexicon words copy through."""
    out: list[str] = []
    prev: str | None = None
    for w in words:
        forms = lex.get(w)
        out.append(w if forms is None else choose_form(forms, w, prev))
        prev = w
    return out


# -- generation -----------------------------------------------------------------


@lru_cache(maxsize=16)
def _word_table(spec: DomainSpec) -> tuple[tuple[str, ...], ...]:
    lang = spec.language
    return tuple(
        tuple(lang.stems[i] + suf for suf in lang.source_suffixes) for i in spec.stem_ids
    )


def _sample_sentences(
    spec: DomainSpec, rng: random.Random, n_sentences: int, words_of: tuple[tuple[str, ...], ...]
) -> list[list[str]]:
    n_stems = len(spec.stem_ids)
    n_suffix = len(spec.suffix_weights)
    stem_cum = list(_accumulate(spec.stem_weights))
    suffix_cum = list(_accumulate(spec.suffix_weights))
    sentences = []
    for _ in range(n_sentences):
        length = rng.randint(spec.min_words, spec.max_words)
        stem_idx = rng.choices(range(n_stems), cum_weights=stem_cum, k=length)
        suf_idx = rng.choices(range(n_suffix), cum_weights=suffix_cum, k=length)
        sentences.append([words_of[si][ji] for si, ji in zip(stem_idx, suf_idx)])
    return sentences


def _accumulate(weights: Sequence[float]) -> Iterable[float]:
    total = 0.0
    for w in weights:
        total += w
        yield total


def synthesize(spec: DomainSpec, seed: int, n_sentences: int = 1000) -> ParallelCorpus:
    """Generate an aligned parallel corpus, a pure function of (spec, seed).

    The target side is the word-level translation of the source side under
    the language's lexicon with context-dependent form choice.
    """
    if n_sentences < 1:
        raise ValueError(f"n_sentences must be positive, got {n_sentences}")
    rng = random.Random(f"synth/{spec.name}/{seed}")
    lex = lexicon(spec.language)
    src_sentences = _sample_sentences(spec, rng, n_sentences, _word_table(spec))
    src = tuple(" ".join(words) for words in src_sentences)
    tgt = tuple(" ".join(translate_words(words, lex)) for words in src_sentences)
    return ParallelCorpus(
        Corpus(src, spec.language.source_language, spec.name),
        Corpus(tgt, spec.language.target_language, spec.name),
    )


@lru_cache(maxsize=16)
def _native_suffix_weights(
    lang: Language, suffix_exponent: float, long_bias: float
) -> tuple[tuple[str, ...], tuple[float, ...]]:
    # Native target text uses its own suffix skew over short and long forms,
    # by default biased toward the long forms, so translated text (whose
    # suffix mix is inherited from the source) has a visibly different
    # distribution.
    suffixes = tuple(lang.target_suffixes) + tuple(lang.target_suffixes_long)
    rng = random.Random("native-suffixes/1")
    perm = list(range(len(suffixes)))
    rng.shuffle(perm)
    weights = []
    for i in range(len(suffixes)):
        w = 1.0 / (perm[i] + 1) ** suffix_exponent
        if i >= len(lang.target_suffixes):
            w *= long_bias
        weights.append(w)
    return suffixes, tuple(weights)


def native_target_corpus(
    spec: DomainSpec,
    seed: int,
    n_sentences: int = 1000,
    *,
    suffix_exponent: float = 1.0,
    long_bias: float = 2.2,
) -> Corpus:
    """Sample target-language text directly, not as a translation image.

    Stem frequencies follow the domain skew (mapped through the stem
    cipher); suffixes follow the native distribution, whose shape can be
    adjusted (``long_bias`` > 1 favours the long inflected forms).  This is
    authentic target text: richer and differently skewed than translated
    output.
    """
    if n_sentences < 1:
        raise ValueError(f"n_sentences must be positive, got {n_sentences}")
    if suffix_exponent <= 0 or long_bias <= 0:
        raise ValueError("suffix_exponent and long_bias must be positive")
    lang = spec.language
    rng = random.Random(f"native/{spec.name}/{seed}")
    suffixes, weights = _native_suffix_weights(lang, suffix_exponent, long_bias)
    stem_cum = list(_accumulate(spec.stem_weights))
    suffix_cum = list(_accumulate(weights))
    tstems = [lang.target_stems[i] for i in spec.stem_ids]
    sentences = []
    for _ in range(n_sentences):
        length = rng.randint(spec.min_words, spec.max_words)
        stem_idx = rng.choices(range(len(tstems)), cum_weights=stem_cum, k=length)
        suf_idx = rng.choices(range(len(suffixes)), cum_weights=suffix_cum, k=length)
        sentences.append(
            " ".join(tstems[si] + suffixes[ji] for si, ji in zip(stem_idx, suf_idx))
        )
    return Corpus(tuple(sentences), lang.target_language, spec.name)
