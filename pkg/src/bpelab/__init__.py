"""bpelab: a laboratory for studying subword-vocabulary extraction attacks.

The package contains a byte-pair-encoding tokenizer with word-final symbol
variants, a synthetic parallel-corpus generator, a budgeted translation
oracle that hides its tokenizer, a family of vocabulary-extraction
strategies, and analysis helpers (overlap, cross-domain efficiency,
missing-subword diagnostics, rank correlations).
"""

from __future__ import annotations

__version__ = "0.1.0"

from .analysis import (
    CorrelationResult,
    EfficiencyMatrix,
    MissingReport,
    SubwordDiagnostic,
    correlation,
    efficiency_matrix,
    efficiency_ratio,
    missing_subwords,
    subword_count,
)
from .bpe import (
    CONTINUATION_MARKER,
    BpeTokenizer,
    DanglingSequenceWarning,
    SubwordSequence,
    Token,
    decode,
    encode,
    load_merges,
    load_vocabulary,
    normalize,
    parse_symbol,
    pretokenize,
    render_symbol,
    save_merges,
    save_vocabulary,
    train_bpe,
)
from .corpus import (
    Corpus,
    CorpusStats,
    DomainSpec,
    Language,
    ParallelCorpus,
    build_language,
    builtin_domains,
    builtin_language,
    choose_form,
    ingest,
    inverse_lexicon,
    lexicon,
    native_target_corpus,
    split,
    stats,
    synthesize,
    translate_words,
)
from .experiment import (
    ExperimentConfig,
    canonical_config,
    config_hash,
    parse_config,
    run,
    validate_config,
)
from .extraction import (
    STRATEGY_NAMES,
    CyclicResult,
    ExtractionTrace,
    TraceSample,
    overlap,
    steal_cyclic,
    steal_dedup_sentences,
    steal_graybox_sentences,
    steal_local_bpe,
    steal_local_bpe_on_outputs,
    steal_unique_words,
    steal_unique_words_minimized,
    traces_to_csv,
)
from .victim import (
    BLACK_BOX,
    GRAY_BOX,
    AccessModeError,
    BudgetExhaustedError,
    QueryResult,
    VictimOracle,
    graybox_output_corpus,
    load_victim,
    make_victim,
    reveal_vocabulary,
    save_victim,
)

__all__ = [
    "__version__",
    # bpe
    "BpeTokenizer",
    "Token",
    "SubwordSequence",
    "DanglingSequenceWarning",
    "CONTINUATION_MARKER",
    "train_bpe",
    "encode",
    "decode",
    "normalize",
    "pretokenize",
    "render_symbol",
    "parse_symbol",
    "save_merges",
    "load_merges",
    "save_vocabulary",
    "load_vocabulary",
    # corpus
    "Corpus",
    "ParallelCorpus",
    "CorpusStats",
    "Language",
    "DomainSpec",
    "ingest",
    "stats",
    "split",
    "build_language",
    "builtin_language",
    "builtin_domains",
    "lexicon",
    "inverse_lexicon",
    "choose_form",
    "translate_words",
    "synthesize",
    "native_target_corpus",
    # victim
    "VictimOracle",
    "QueryResult",
    "AccessModeError",
    "BudgetExhaustedError",
    "BLACK_BOX",
    "GRAY_BOX",
    "make_victim",
    "reveal_vocabulary",
    "save_victim",
    "load_victim",
    "graybox_output_corpus",
    # extraction
    "overlap",
    "ExtractionTrace",
    "TraceSample",
    "CyclicResult",
    "STRATEGY_NAMES",
    "steal_local_bpe",
    "steal_local_bpe_on_outputs",
    "steal_graybox_sentences",
    "steal_dedup_sentences",
    "steal_unique_words",
    "steal_unique_words_minimized",
    "steal_cyclic",
    "traces_to_csv",
    # analysis
    "subword_count",
    "efficiency_ratio",
    "efficiency_matrix",
    "EfficiencyMatrix",
    "missing_subwords",
    "MissingReport",
    "SubwordDiagnostic",
    "correlation",
    "CorrelationResult",
    # experiment
    "ExperimentConfig",
    "parse_config",
    "validate_config",
    "canonical_config",
    "config_hash",
    "run",
]
