"""Command-line front end.

Exit codes: 0 success, 1 validation error (bad arguments, malformed input),
2 runtime failure.  Failures print a single machine-readable line
``error: <message>`` to stderr.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .analysis import correlation, efficiency_matrix, missing_subwords
from .bpe import (
    BpeTokenizer,
    SubwordSequence,
    decode,
    load_merges,
    load_vocabulary,
    save_merges,
    save_vocabulary,
    train_bpe,
)
from .corpus import (
    ParallelCorpus,
    builtin_domains,
    ingest,
    lexicon,
    native_target_corpus,
    stats,
    synthesize,
)
from .experiment import OUTPUT_ROOT_ENV, parse_config, run
from .extraction import (
    STRATEGY_NAMES,
    steal_cyclic,
    steal_dedup_sentences,
    steal_graybox_sentences,
    steal_local_bpe,
    steal_local_bpe_on_outputs,
    steal_unique_words,
    steal_unique_words_minimized,
    traces_to_csv,
)
from .victim import load_victim, make_victim, reveal_vocabulary, save_victim


def _out_root(path: str | None) -> Path:
    return Path(path or os.environ.get(OUTPUT_ROOT_ENV) or ".")


def _read_corpus(path: str, language: str):
    return ingest(path, language)


# -- subcommand handlers -----------------------------------------------------------


def _cmd_train_bpe(args) -> int:
    sentences: list[str] = []
    for path in args.corpus:
        sentences.extend(_read_corpus(path, "any").sentences)
    model = train_bpe(sentences, args.vocab_size, args.min_pair_frequency)
    Path(args.out).write_text(save_merges(model), encoding="utf-8")
    if args.vocab_out:
        Path(args.vocab_out).write_text(save_vocabulary(model.vocab_), encoding="utf-8")
    if model.exhausted_early_:
        print(
            f"note: merges exhausted at vocabulary size {len(model.vocab_)} "
            f"(requested {args.vocab_size})",
            file=sys.stderr,
        )
    print(f"wrote {len(model.merges_)} merges to {args.out}")
    return 0


def _load_model(args) -> BpeTokenizer:
    model = load_merges(Path(args.merges).read_text(encoding="utf-8"))
    if getattr(args, "vocab", None):
        from .bpe import parse_symbol

        vocab = load_vocabulary(Path(args.vocab).read_text(encoding="utf-8"))
        products = {(lt + rt, rf) for (lt, _), (rt, rf) in model.merges_}
        alphabet = {parse_symbol(e) for e in vocab} - products
        model = BpeTokenizer.from_merges(model.merges_, alphabet=alphabet)
    return model


def _cmd_encode(args) -> int:
    model = _load_model(args)
    for line in sys.stdin:
        print(model.encode_sentence(line.rstrip("\n")).render())
    return 0


def _cmd_decode(args) -> int:
    for line in sys.stdin:
        print(decode(SubwordSequence.from_rendered(line.rstrip("\n"))))
    return 0


def _cmd_corpus_stats(args) -> int:
    first = _read_corpus(args.corpus, args.language)
    if args.corpus2:
        data = ParallelCorpus(first, _read_corpus(args.corpus2, args.language2))
    else:
        data = first
    sys.stdout.write(stats(data).to_csv())
    return 0


def _cmd_synth_corpus(args) -> int:
    spec = _domain(args.domain)
    pair = synthesize(spec, args.seed, args.sentences)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    src_path = prefix.with_name(prefix.name + f".{pair.source.language}")
    tgt_path = prefix.with_name(prefix.name + f".{pair.target.language}")
    src_path.write_text("\n".join(pair.source.sentences) + "\n", encoding="utf-8")
    tgt_path.write_text("\n".join(pair.target.sentences) + "\n", encoding="utf-8")
    print(f"wrote {len(pair)} sentence pairs to {src_path} / {tgt_path}")
    return 0


def _domain(name: str):
    domains = builtin_domains()
    if name not in domains:
        raise ValueError(f"unknown domain {name!r}; available: {sorted(domains)}")
    return domains[name]


def _cmd_make_victim(args) -> int:
    spec = _domain(args.domain)
    lex = lexicon(spec.language)
    if args.direction == "reverse":
        from .corpus import inverse_lexicon

        hidden = synthesize(spec, args.seed, args.sentences).source
        lex = inverse_lexicon(lex)
    elif args.hidden == "joint":
        pair = synthesize(spec, args.seed, args.sentences)
        hidden = list(pair.source.sentences) + list(pair.target.sentences)
    else:
        hidden = native_target_corpus(spec, args.seed, args.sentences)
    oracle = make_victim(hidden, lex, args.vocab_size, args.access, args.budget)
    save_victim(oracle, args.out)
    print(
        f"victim bundle at {args.out}: vocabulary {len(oracle.hidden_model.vocab_)}, "
        f"access {oracle.access_mode}, budget {oracle.budget}"
    )
    return 0


def _cmd_steal(args) -> int:
    oracle = load_victim(args.victim)
    corpus = _read_corpus(args.corpus, args.language)
    out = _out_root(args.output_root) / args.out
    out.mkdir(parents=True, exist_ok=True)
    budget = args.budget if args.budget else None
    trace = None
    spent = 0
    if args.strategy == "local-bpe":
        recovered = steal_local_bpe(corpus, args.target_size)
    elif args.strategy == "local-bpe-outputs":
        recovered, spent = steal_local_bpe_on_outputs(corpus, oracle, args.target_size)
    elif args.strategy == "cyclic":
        if not args.victim_reverse:
            raise ValueError("cyclic needs --victim-reverse (the opposite direction bundle)")
        backward = load_victim(args.victim_reverse)
        result = steal_cyclic(
            [corpus.sentences[0]],
            oracle,
            backward,
            k=args.cyclic_k,
            patience=args.cyclic_patience,
            iteration_cap=args.cyclic_cap,
            seed=args.seed,
            budget=budget,
        )
        recovered, trace = result.target_vocab, result.trace
    else:
        steal = {
            "graybox-sentences": steal_graybox_sentences,
            "dedup-sentences": steal_dedup_sentences,
            "unique-words": steal_unique_words,
            "unique-words-minimized": steal_unique_words_minimized,
        }[args.strategy]
        recovered, trace = steal(corpus, oracle, budget, seed=args.seed)
    (out / "recovered.txt").write_text(save_vocabulary(recovered), encoding="utf-8")
    if trace is not None:
        (out / "trace.csv").write_text(traces_to_csv([trace]), encoding="utf-8")
        spent = trace.final.budget_spent if trace.samples else 0
    truth = reveal_vocabulary(oracle)
    from .extraction import overlap

    print(
        f"{args.strategy}: recovered {len(recovered)} subwords, spent {spent}, "
        f"overlap {overlap(recovered, truth):.4f}"
    )
    return 0


def _cmd_efficiency_matrix(args) -> int:
    datasets = []
    for name in args.domains.split(","):
        spec = _domain(name.strip())
        pair = synthesize(spec, args.seed, args.sentences)
        datasets.append((spec.name, list(pair.source.sentences) + list(pair.target.sentences)))
    models = [
        (name, BpeTokenizer(target_size=args.vocab_size).fit(data))
        for name, data in datasets
    ]
    if args.include_all:
        union = [s for _, data in datasets for s in data]
        models.append(("all", BpeTokenizer(target_size=args.vocab_size).fit(union)))
    matrix = efficiency_matrix(models, datasets)
    sys.stdout.write(matrix.to_text())
    if args.csv:
        Path(args.csv).write_text(matrix.to_csv(), encoding="utf-8")
    return 0


def _cmd_analyze_missing(args) -> int:
    oracle = load_victim(args.victim)
    recovered = load_vocabulary(Path(args.recovered).read_text(encoding="utf-8"))
    outputs = _read_corpus(args.outputs, "subwords")
    report = missing_subwords(reveal_vocabulary(oracle), recovered, outputs)
    sys.stdout.write(report.to_text())
    if args.csv:
        Path(args.csv).write_text(report.to_csv(), encoding="utf-8")
    return 0


def _parse_floats(raw: str) -> list[float]:
    try:
        return [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"expected comma-separated numbers, got {raw!r}") from None


def _cmd_correlate(args) -> int:
    x = _parse_floats(args.x)
    y = _parse_floats(args.y)
    result = correlation(x, y, exact=args.exact)
    if result.degenerate:
        print("degenerate input (constant vector); coefficients undefined")
        return 0
    print(f"pearson {result.pearson:+.4f} (p={result.pearson_p:.4f})")
    print(f"spearman {result.spearman:+.4f} (p={result.spearman_p:.4f})")
    return 0


def _cmd_run(args) -> int:
    cfg = parse_config(Path(args.config).read_text(encoding="utf-8"))
    out = run(cfg, output_root=args.output_root)
    print(f"artifacts in {out}")
    return 0


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bpelab",
        description="Laboratory for subword-vocabulary extraction experiments.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-bpe", help="train a tokenizer and write its merge table")
    p.add_argument("--corpus", action="append", required=True, help="input text file (repeatable)")
    p.add_argument("--vocab-size", type=int, required=True)
    p.add_argument("--min-pair-frequency", type=int, default=2)
    p.add_argument("--out", required=True, help="merge table output path")
    p.add_argument("--vocab-out", help="also write the vocabulary file")
    p.set_defaults(func=_cmd_train_bpe)

    p = sub.add_parser("encode", help="segment stdin lines into marked subwords")
    p.add_argument("--merges", required=True)
    p.add_argument("--vocab", help="vocabulary file restoring unmerged alphabet symbols")
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("decode", help="reassemble marked subword lines from stdin")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("corpus-stats", help="measure a corpus, CSV to stdout")
    p.add_argument("--corpus", required=True)
    p.add_argument("--language", default="l1")
    p.add_argument("--corpus2", help="aligned second side")
    p.add_argument("--language2", default="l2")
    p.set_defaults(func=_cmd_corpus_stats)

    p = sub.add_parser("synth-corpus", help="generate a synthetic parallel corpus")
    p.add_argument("--domain", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--sentences", type=int, default=1000)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_synth_corpus)

    p = sub.add_parser("make-victim", help="train and save a victim oracle bundle")
    p.add_argument("--domain", required=True)
    p.add_argument("--seed", type=int, default=101)
    p.add_argument("--sentences", type=int, default=20000)
    p.add_argument("--vocab-size", type=int, default=4000)
    p.add_argument("--access", choices=("gray-box", "black-box"), default="gray-box")
    p.add_argument("--budget", type=int, default=10**9)
    p.add_argument("--hidden", choices=("native", "joint"), default="native",
                   help="hidden corpus: native target text or joint parallel text")
    p.add_argument("--direction", choices=("forward", "reverse"), default="forward",
                   help="reverse builds the opposite-direction victim for cyclic attacks")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_make_victim)

    p = sub.add_parser("steal", help="run one extraction strategy against a victim bundle")
    p.add_argument("--victim", required=True, help="victim bundle directory")
    p.add_argument("--victim-reverse", help="opposite-direction bundle (cyclic only)")
    p.add_argument("--corpus", required=True, help="attacker corpus file")
    p.add_argument("--language", default="l1")
    p.add_argument("--strategy", choices=STRATEGY_NAMES, required=True)
    p.add_argument("--budget", type=int, default=0, help="0 = uncapped")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target-size", type=int, default=4000, help="local strategies")
    p.add_argument("--cyclic-k", type=int, default=20)
    p.add_argument("--cyclic-patience", type=int, default=5)
    p.add_argument("--cyclic-cap", type=int, default=10000)
    p.add_argument("--out", required=True, help="output directory for trace and vocabulary")
    p.add_argument("--output-root", help=f"overrides cwd (or ${OUTPUT_ROOT_ENV})")
    p.set_defaults(func=_cmd_steal)

    p = sub.add_parser("efficiency-matrix", help="cross-domain vocabulary efficiency table")
    p.add_argument("--domains", required=True, help="comma-separated domain names")
    p.add_argument("--sentences", type=int, default=4000)
    p.add_argument("--vocab-size", type=int, default=2000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--include-all", action="store_true", help="add a union-trained row")
    p.add_argument("--csv", help="also write CSV here")
    p.set_defaults(func=_cmd_efficiency_matrix)

    p = sub.add_parser("analyze-missing", help="diagnose unrecovered vocabulary entries")
    p.add_argument("--victim", required=True)
    p.add_argument("--recovered", required=True, help="recovered vocabulary file")
    p.add_argument("--outputs", required=True, help="rendered gray-box output lines")
    p.add_argument("--csv", help="also write CSV here")
    p.set_defaults(func=_cmd_analyze_missing)

    p = sub.add_parser("correlate", help="Pearson and Spearman with p-values")
    p.add_argument("--x", required=True, help="comma-separated numbers")
    p.add_argument("--y", required=True, help="comma-separated numbers")
    p.add_argument("--exact", action="store_true", help="permutation p-values (n <= 10)")
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("run", help="execute a full experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--output-root", help=f"overrides cwd (or ${OUTPUT_ROOT_ENV})")
    p.set_defaults(func=_cmd_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage; that is a validation failure here
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ValueError, TypeError, FileNotFoundError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - unexpected runtime failures
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
