"""Metered translation oracle used as the extraction target.

The oracle hides a trained tokenizer and a word-level lexicon.  Queries are
translated word by word (context-dependent form choice, copy-through for
unknown words), the output is segmented with the hidden tokenizer, and the
caller is charged one budget unit per output subword.  Gray-box access
returns the subword segmentation; black-box access returns only the
detokenized sentence.  Both modes charge identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .bpe import (
    BpeTokenizer,
    SubwordSequence,
    load_merges,
    load_vocabulary,
    parse_symbol,
    pretokenize,
    save_merges,
    save_vocabulary,
)
from .corpus import Corpus, translate_words

__all__ = [
    "BLACK_BOX",
    "GRAY_BOX",
    "AccessModeError",
    "BudgetExhaustedError",
    "QueryResult",
    "VictimOracle",
    "make_victim",
    "reveal_vocabulary",
    "save_victim",
    "load_victim",
    "graybox_output_corpus",
]

BLACK_BOX = "black-box"
GRAY_BOX = "gray-box"
_MODES = (BLACK_BOX, GRAY_BOX)


class AccessModeError(ValueError):
    """An operation requires an access mode the oracle does not grant."""


class BudgetExhaustedError(RuntimeError):
    """Raised when a query would cost more than the remaining budget.

    Carries the results of the sentences translated before the failing one;
    the failing sentence itself is not charged.
    """

    def __init__(self, message: str, results: list["QueryResult"]):
        super().__init__(message)
        self.results = results


@dataclass(frozen=True)
class QueryResult:
    """One translated sentence.

    ``subwords`` is None under black-box access.  ``charged`` counts output
    subwords (the budget unit); ``input_words`` is the input-side word count,
    kept so the two accounting bases can be compared.
    """

    text: str
    subwords: SubwordSequence | None
    charged: int
    input_words: int


@dataclass
class VictimOracle:
    """Query interface over a hidden tokenizer and lexicon."""

    hidden_model: BpeTokenizer
    lexicon: dict[str, tuple[str, ...]]
    access_mode: str = GRAY_BOX
    budget: int = 10**9
    spent: int = field(default=0, init=False)
    query_log: list[str] = field(default_factory=list, init=False)

    def __post_init__(self):
        if self.access_mode not in _MODES:
            raise ValueError(f"access_mode must be one of {_MODES}, got {self.access_mode!r}")
        if not isinstance(self.budget, int) or self.budget < 0:
            raise ValueError(f"budget must be a non-negative int, got {self.budget!r}")

    @property
    def remaining_budget(self) -> int:
        return self.budget - self.spent

    def fresh(self) -> "VictimOracle":
        """A new oracle over the same hidden state with an untouched budget."""
        return VictimOracle(self.hidden_model, self.lexicon, self.access_mode, self.budget)

    def translate(self, sentences: list[str]) -> list[QueryResult]:
        """Translate a batch, charging per output subword.

        Raises ``BudgetExhaustedError`` when a sentence would overrun the
        remaining budget; the exception carries the results of the batch up
        to (not including) that sentence, and the failing sentence is not
        charged.  An empty batch is a validation error.
        """
        if isinstance(sentences, str):
            raise TypeError("translate expects a list of sentences, not a single string")
        sentences = list(sentences)
        if not sentences:
            raise ValueError("empty query batch")
        results: list[QueryResult] = []
        for sent in sentences:
            if not isinstance(sent, str):
                raise TypeError(f"expected sentence as str, got {type(sent).__name__}")
            words = pretokenize(sent)
            out_text = " ".join(translate_words(words, self.lexicon))
            seq = self.hidden_model.encode_sentence(out_text)
            cost = len(seq)
            if cost > self.remaining_budget:
                raise BudgetExhaustedError(
                    f"query costs {cost} subwords but only {self.remaining_budget} remain",
                    results,
                )
            self.spent += cost
            self.query_log.append(sent)
            results.append(
                QueryResult(
                    text=out_text,
                    subwords=seq if self.access_mode == GRAY_BOX else None,
                    charged=cost,
                    input_words=len(words),
                )
            )
        return results


def make_victim(
    hidden_corpus,
    lexicon: dict[str, tuple[str, ...]],
    vocab_size: int,
    access_mode: str = GRAY_BOX,
    budget: int = 10**9,
    min_pair_frequency: int = 2,
) -> VictimOracle:
    """Train the hidden tokenizer on the hidden corpus and wrap it."""
    model = BpeTokenizer(
        target_size=vocab_size, min_pair_frequency=min_pair_frequency
    ).fit(hidden_corpus)
    return VictimOracle(model, dict(lexicon), access_mode, budget)


def reveal_vocabulary(oracle: VictimOracle) -> frozenset[str]:
    """Ground truth for evaluation only.

    This bypasses the query interface and must never be used by an attack
    strategy to build its recovered vocabulary; it exists so experiments can
    score recovered vocabularies against the truth.
    """
    return oracle.hidden_model.vocab_


# -- on-disk bundle --------------------------------------------------------------

_MERGES_FILE = "merges.txt"
_VOCAB_FILE = "vocab.txt"
_LEXICON_FILE = "lexicon.tsv"
_MANIFEST_FILE = "manifest.txt"


def save_victim(oracle: VictimOracle, path: str | Path) -> Path:
    """Write the bundle: merge table, vocabulary, lexicon, manifest."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    (out / _MERGES_FILE).write_text(save_merges(oracle.hidden_model), encoding="utf-8")
    (out / _VOCAB_FILE).write_text(
        save_vocabulary(oracle.hidden_model.vocab_), encoding="utf-8"
    )
    lex_lines = [
        "\t".join((word, *oracle.lexicon[word])) for word in sorted(oracle.lexicon)
    ]
    (out / _LEXICON_FILE).write_text("\n".join(lex_lines) + "\n", encoding="utf-8")
    manifest = f"access_mode={oracle.access_mode}\nbudget={oracle.budget}\n"
    (out / _MANIFEST_FILE).write_text(manifest, encoding="utf-8")
    return out


def _parse_manifest(text: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed manifest line {lineno}: {line!r}")
        key, value = line.split("=", 1)
        entries[key.strip()] = value.strip()
    return entries


def load_victim(path: str | Path) -> VictimOracle:
    """Rebuild an oracle from a bundle directory with a fresh budget."""
    root = Path(path)
    model = load_merges((root / _MERGES_FILE).read_text(encoding="utf-8"))
    vocab = load_vocabulary((root / _VOCAB_FILE).read_text(encoding="utf-8"))
    # The vocabulary file restores alphabet symbols that no merge mentions.
    products = {
        (lt + rt, rf) for (lt, _), (rt, rf) in model.merges_
    }
    alphabet = {parse_symbol(entry) for entry in vocab} - products
    model = BpeTokenizer.from_merges(model.merges_, alphabet=alphabet)

    lexicon: dict[str, tuple[str, ...]] = {}
    for lineno, line in enumerate(
        (root / _LEXICON_FILE).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) < 2 or not all(fields):
            raise ValueError(f"malformed lexicon line {lineno}: {line!r}")
        lexicon[fields[0]] = tuple(fields[1:])

    manifest = _parse_manifest((root / _MANIFEST_FILE).read_text(encoding="utf-8"))
    for key in ("access_mode", "budget"):
        if key not in manifest:
            raise ValueError(f"manifest missing required key {key!r}")
    return VictimOracle(
        model,
        lexicon,
        access_mode=manifest["access_mode"],
        budget=int(manifest["budget"]),
    )


def graybox_output_corpus(results) -> Corpus:
    """Collect gray-box outputs as a corpus of rendered subword lines."""
    lines = []
    for res in results:
        if res.subwords is None:
            raise AccessModeError("black-box results carry no subword sequences")
        lines.append(res.subwords.render())
    return Corpus(tuple(lines), language="subwords")
