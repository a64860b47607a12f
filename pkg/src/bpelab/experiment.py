"""Experiment configuration and the end-to-end runner.

The runner turns one flat key=value config into a deterministic artifact
tree: extraction traces, an efficiency matrix, a missing-subword report, and
a manifest embedding the config hash.  Runs are pure functions of the config:
re-running writes byte-identical artifacts.

Cell execution: the (strategy x seed) cells are independent; each gets its
own oracle instance over the shared read-only hidden model, so they could be
fanned out to parallel workers with a single writer merging completed traces.
At this scale the runner executes them sequentially in a fixed order, which
realizes the same merge order deterministically.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Callable

from . import extraction
from .analysis import EfficiencyMatrix, efficiency_matrix, missing_subwords
from .bpe import BpeTokenizer, save_vocabulary
from .corpus import Corpus, builtin_domains, inverse_lexicon, lexicon, native_target_corpus, synthesize
from .extraction import ExtractionTrace, TraceSample, traces_to_csv
from .victim import (
    GRAY_BOX,
    BudgetExhaustedError,
    graybox_output_corpus,
    make_victim,
    reveal_vocabulary,
)

__all__ = [
    "ExperimentConfig",
    "parse_config",
    "validate_config",
    "canonical_config",
    "config_hash",
    "run",
]

OUTPUT_ROOT_ENV = "BPELAB_OUTPUT_ROOT"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; field names double as config keys.

    Keys use dotted section prefixes in the file form, e.g.
    ``victim.domain=web-a`` sets ``victim_domain``.
    """

    victim_domain: str = "web-a"
    victim_seed: int = 101
    victim_sentences: int = 20000
    victim_vocab: int = 4000
    victim_access: str = GRAY_BOX
    victim_budget: int = 10**9
    attacker_domain: str = "web-a"
    attacker_sentences: int = 5000
    attacker_vocab: int = 4000
    strategies: tuple[str, ...] = (
        "local-bpe",
        "local-bpe-outputs",
        "graybox-sentences",
        "dedup-sentences",
        "unique-words",
    )
    seeds: tuple[int, ...] = (1, 2, 3)
    budget: int = 0  # 0 = no per-strategy cap
    grid_start: int = extraction.DEFAULT_GRID_START
    cyclic_k: int = 20
    cyclic_patience: int = 5
    cyclic_cap: int = 10000
    matrix_domains: tuple[str, ...] = ("web-a", "web-b", "patentese")
    matrix_sentences: int = 4000
    matrix_vocab: int = 2000
    output: str = "run"


_KEY_MAP = {f.name.replace("_", ".", 1) if "_" in f.name else f.name: f.name for f in fields(ExperimentConfig)}
# Top-level keys without a section keep their plain name.
for _plain in ("strategies", "seeds", "budget", "output"):
    _KEY_MAP[_plain] = _plain


def _parse_value(field_name: str, raw: str):
    current = getattr(ExperimentConfig, field_name)
    raw = raw.strip()
    if isinstance(current, tuple):
        items = [part.strip() for part in raw.split(",") if part.strip()]
        if not items:
            raise ValueError(f"{field_name}: empty list")
        if all(isinstance(v, int) for v in current) and current:
            return tuple(int(i) for i in items)
        if field_name == "seeds":
            return tuple(int(i) for i in items)
        return tuple(items)
    if isinstance(current, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(current, int):
        return int(raw)
    return raw


def parse_config(text: str) -> ExperimentConfig:
    """Parse flat key=value text with dotted section prefixes.

    Unknown keys, malformed lines, unknown strategies or domains, and
    non-increasing seeds-free values all fail validation up front, before
    any oracle is built or queried.
    """
    cfg = ExperimentConfig()
    overrides = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"malformed config line {lineno}: {line!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        field_name = _KEY_MAP.get(key)
        if field_name is None:
            raise ValueError(f"unknown config key {key!r} (line {lineno})")
        try:
            overrides[field_name] = _parse_value(field_name, raw)
        except ValueError as exc:
            raise ValueError(f"bad value for {key!r} (line {lineno}): {exc}") from None
    cfg = replace(cfg, **overrides)
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    domains = builtin_domains()
    for name in (cfg.victim_domain, cfg.attacker_domain, *cfg.matrix_domains):
        if name not in domains:
            raise ValueError(f"unknown domain {name!r}; available: {sorted(domains)}")
    for strategy in cfg.strategies:
        if strategy not in extraction.STRATEGY_NAMES:
            raise ValueError(
                f"unknown strategy {strategy!r}; available: {extraction.STRATEGY_NAMES}"
            )
    if cfg.victim_access != GRAY_BOX and any(
        s not in ("local-bpe", "local-bpe-outputs") for s in cfg.strategies
    ):
        raise ValueError("collection strategies require victim.access=gray-box")
    if not cfg.seeds:
        raise ValueError("seeds must not be empty")
    if len(set(cfg.seeds)) != len(cfg.seeds):
        raise ValueError("seeds must be distinct")
    for name in (
        "victim_sentences",
        "victim_vocab",
        "attacker_sentences",
        "attacker_vocab",
        "matrix_sentences",
        "matrix_vocab",
        "grid_start",
        "cyclic_k",
        "cyclic_patience",
        "cyclic_cap",
    ):
        if getattr(cfg, name) < 1:
            raise ValueError(f"{name} must be positive")
    if cfg.budget < 0 or cfg.victim_budget < 1:
        raise ValueError("budgets must be positive (strategy budget 0 means uncapped)")


def canonical_config(cfg: ExperimentConfig) -> str:
    """Stable textual form of the config; hashing input."""
    lines = []
    inverse = {v: k for k, v in _KEY_MAP.items()}
    for f in fields(ExperimentConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            rendered = ",".join(str(v) for v in value)
        else:
            rendered = str(value)
        lines.append(f"{inverse[f.name]}={rendered}")
    return "\n".join(sorted(lines)) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(canonical_config(cfg).encode("utf-8")).hexdigest()[:16]


# -- runner ---------------------------------------------------------------------


def _strategy_budget(cfg: ExperimentConfig) -> int | None:
    return cfg.budget if cfg.budget > 0 else None


def _flat_trace(strategy: str, seed: int, spent: int, recovered: frozenset[str], truth: frozenset[str]) -> ExtractionTrace:
    score = extraction.overlap(recovered, truth)
    return ExtractionTrace(strategy, seed, [TraceSample(spent, len(recovered), score)])


def run(cfg: ExperimentConfig, output_root: str | Path | None = None) -> Path:
    """Execute the configured experiment and write its artifact tree.

    Artifacts under ``<root>/<output>``: ``traces.csv``, per-cell recovered
    vocabularies, ``efficiency.csv`` and ``efficiency.txt``, ``missing.csv``
    (only when ``graybox-sentences`` is among the strategies, since its replay
    supplies the rendered outputs the report needs), and ``manifest.txt`` with
    the config hash and resolved settings.  The output root comes from, in
    order: the argument, $BPELAB_OUTPUT_ROOT, the working directory.
    """
    validate_config(cfg)
    root = Path(output_root or os.environ.get(OUTPUT_ROOT_ENV) or ".")
    out = root / cfg.output
    out.mkdir(parents=True, exist_ok=True)
    vocab_dir = out / "recovered"
    vocab_dir.mkdir(exist_ok=True)

    domains = builtin_domains()
    victim_spec = domains[cfg.victim_domain]
    attacker_spec = domains[cfg.attacker_domain]
    lang = victim_spec.language
    lex = lexicon(lang)

    hidden = native_target_corpus(victim_spec, cfg.victim_seed, cfg.victim_sentences)
    oracle_proto = make_victim(hidden, lex, cfg.victim_vocab, cfg.victim_access, cfg.victim_budget)
    truth = reveal_vocabulary(oracle_proto)

    needs_backward = "cyclic" in cfg.strategies
    if needs_backward:
        hidden_back = synthesize(
            victim_spec, cfg.victim_seed + 1, cfg.victim_sentences
        ).source
        oracle_back_proto = make_victim(
            hidden_back, inverse_lexicon(lex), cfg.victim_vocab, cfg.victim_access, cfg.victim_budget
        )

    budget = _strategy_budget(cfg)
    traces: list[ExtractionTrace] = []
    graybox_outputs: Corpus | None = None

    for seed in cfg.seeds:
        attacker = synthesize(attacker_spec, seed, cfg.attacker_sentences)
        for strategy in cfg.strategies:
            oracle = oracle_proto.fresh()
            if strategy == "local-bpe":
                recovered = extraction.steal_local_bpe(attacker.source, cfg.attacker_vocab)
                trace = _flat_trace(strategy, seed, 0, recovered, truth)
            elif strategy == "local-bpe-outputs":
                recovered, spent = extraction.steal_local_bpe_on_outputs(
                    attacker.source, oracle, cfg.attacker_vocab
                )
                trace = _flat_trace(strategy, seed, spent, recovered, truth)
            elif strategy == "cyclic":
                seed_sentence = attacker.source.sentences[0]
                result = extraction.steal_cyclic(
                    [seed_sentence],
                    oracle,
                    oracle_back_proto.fresh(),
                    k=cfg.cyclic_k,
                    patience=cfg.cyclic_patience,
                    iteration_cap=cfg.cyclic_cap,
                    seed=seed,
                    budget=budget,
                    truth=truth,
                )
                recovered, trace = result.target_vocab, result.trace
            else:
                steal: Callable = {
                    "graybox-sentences": extraction.steal_graybox_sentences,
                    "dedup-sentences": extraction.steal_dedup_sentences,
                    "unique-words": extraction.steal_unique_words,
                    "unique-words-minimized": extraction.steal_unique_words_minimized,
                }[strategy]
                recovered, trace = steal(
                    attacker.source, oracle, budget, seed=seed, truth=truth
                )
                if strategy == "graybox-sentences" and graybox_outputs is None:
                    results = []  # replay to collect rendered outputs for the report
                    replay = oracle_proto.fresh()
                    for sent in attacker.source.sentences:
                        if budget is not None and replay.spent >= budget:
                            break
                        try:
                            results.extend(replay.translate([sent]))
                        except BudgetExhaustedError:
                            break
                    graybox_outputs = graybox_output_corpus(results)
                    first_graybox_recovered = recovered
            traces.append(trace)
            (vocab_dir / f"{strategy}-{seed}.txt").write_text(
                save_vocabulary(recovered), encoding="utf-8"
            )

    (out / "traces.csv").write_text(traces_to_csv(traces), encoding="utf-8")

    matrix = _run_matrix(cfg, oracle_proto.hidden_model)
    (out / "efficiency.csv").write_text(matrix.to_csv(), encoding="utf-8")
    (out / "efficiency.txt").write_text(matrix.to_text(), encoding="utf-8")

    if graybox_outputs is not None:
        report = missing_subwords(truth, first_graybox_recovered, graybox_outputs)
        (out / "missing.csv").write_text(report.to_csv(), encoding="utf-8")

    manifest = [
        f"config_hash={config_hash(cfg)}",
        *sorted(canonical_config(cfg).splitlines()),
        f"victim_vocab_actual={len(truth)}",
    ]
    (out / "manifest.txt").write_text("\n".join(manifest) + "\n", encoding="utf-8")
    return out


def _run_matrix(cfg: ExperimentConfig, victim_model: BpeTokenizer) -> EfficiencyMatrix:
    """Self-trained models per domain plus union and victim rows."""
    domains = builtin_domains()
    datasets: list[tuple[str, list[str]]] = []
    for name in cfg.matrix_domains:
        pair = synthesize(domains[name], cfg.victim_seed + 7, cfg.matrix_sentences)
        datasets.append((name, list(pair.source.sentences) + list(pair.target.sentences)))
    models = [
        (name, BpeTokenizer(target_size=cfg.matrix_vocab).fit(data))
        for name, data in datasets
    ]
    union: list[str] = []
    for _, data in datasets:
        union.extend(data)
    models.append(("all", BpeTokenizer(target_size=cfg.matrix_vocab).fit(union)))
    models.append(("victim", victim_model))
    return efficiency_matrix(models, datasets)
