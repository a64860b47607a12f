"""Vocabulary efficiency, missing-subword diagnosis, and correlation utilities."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import islice, permutations
from typing import Sequence

import numpy as np
from scipy import stats as _scipy_stats

from .bpe import BpeTokenizer, SubwordSequence, parse_symbol

__all__ = [
    "subword_count",
    "efficiency_ratio",
    "EfficiencyMatrix",
    "efficiency_matrix",
    "SubwordDiagnostic",
    "MissingReport",
    "missing_subwords",
    "CorrelationResult",
    "correlation",
]


def subword_count(model: BpeTokenizer, corpus) -> int:
    """Total subwords the model needs to encode the corpus."""
    sentences = list(getattr(corpus, "sentences", corpus))
    return sum(len(model.encode_sentence(s)) for s in sentences)


def efficiency_ratio(model: BpeTokenizer, dataset, reference: BpeTokenizer) -> float:
    """Subword count of ``model`` on the dataset relative to its reference.

    The reference is the model trained on the dataset itself, so the ratio
    is 1.0 on the diagonal and usually above 1.0 off it; greedy training is
    not optimal, so slightly-below-1.0 values are possible and reported
    as-is.
    """
    ref_count = subword_count(reference, dataset)
    if ref_count == 0:
        raise ValueError("reference subword count is zero (empty dataset)")
    return subword_count(model, dataset) / ref_count


@dataclass(frozen=True)
class EfficiencyMatrix:
    """Ratios of every model on every dataset, starred at column minima."""

    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]

    def column_minimum_rows(self) -> tuple[int, ...]:
        """Row index of the minimum in each column (first on ties)."""
        out = []
        for j in range(len(self.col_labels)):
            col = [self.values[i][j] for i in range(len(self.row_labels))]
            out.append(col.index(min(col)))
        return tuple(out)

    def value(self, row_label: str, col_label: str) -> float:
        return self.values[self.row_labels.index(row_label)][self.col_labels.index(col_label)]

    def to_csv(self) -> str:
        lines = ["training," + ",".join(self.col_labels)]
        for label, row in zip(self.row_labels, self.values):
            lines.append(label + "," + ",".join(f"{v:.6f}" for v in row))
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        """Aligned table; the best (lowest) entry per column is starred."""
        mins = self.column_minimum_rows()
        width = max(len(label) for label in self.row_labels + ("training",)) + 2
        cell = max(max(len(c) for c in self.col_labels) + 2, 8)
        header = "training".ljust(width) + "".join(c.rjust(cell) for c in self.col_labels)
        lines = [header]
        for i, (label, row) in enumerate(zip(self.row_labels, self.values)):
            cells = []
            for j, v in enumerate(row):
                mark = "*" if mins[j] == i else " "
                cells.append(f"{v:.2f}{mark}".rjust(cell))
            lines.append(label.ljust(width) + "".join(cells))
        return "\n".join(lines) + "\n"


def efficiency_matrix(
    models: Sequence[tuple[str, BpeTokenizer]],
    datasets: Sequence[tuple[str, object]],
) -> EfficiencyMatrix:
    """Cross-tabulate models against datasets.

    The reference for each column is the model whose label equals the
    dataset label; every dataset must have one (self-trained model), and
    labels must be unique.
    """
    model_labels = [label for label, _ in models]
    if len(set(model_labels)) != len(model_labels):
        raise ValueError("duplicate model labels")
    dataset_labels = [label for label, _ in datasets]
    if len(set(dataset_labels)) != len(dataset_labels):
        raise ValueError("duplicate dataset labels")
    by_label = dict(models)
    for label in dataset_labels:
        if label not in by_label:
            raise ValueError(f"no self-trained model for dataset {label!r}")

    ref_counts = {label: subword_count(by_label[label], data) for label, data in datasets}
    for label, count in ref_counts.items():
        if count == 0:
            raise ValueError(f"dataset {label!r} is empty")
    values = tuple(
        tuple(
            subword_count(model, data) / ref_counts[dlabel]
            for dlabel, data in datasets
        )
        for _, model in models
    )
    return EfficiencyMatrix(tuple(model_labels), tuple(dataset_labels), values)


# -- missing-subword diagnosis -----------------------------------------------------


@dataclass(frozen=True)
class SubwordDiagnostic:
    """Why one vocabulary entry was never observed."""

    entry: str
    length: int
    output_occurrences: int
    near_misses: tuple[str, ...]


@dataclass(frozen=True)
class MissingReport:
    victim_size: int
    recovered_size: int
    intersection_size: int
    missing: frozenset[str]
    diagnostics: tuple[SubwordDiagnostic, ...]

    def to_csv(self) -> str:
        lines = ["entry,length,output_occurrences,near_misses"]
        for d in self.diagnostics:
            lines.append(
                f"{d.entry},{d.length},{d.output_occurrences},{'|'.join(d.near_misses)}"
            )
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        head = (
            f"victim entries: {self.victim_size}\n"
            f"recovered entries: {self.recovered_size}\n"
            f"recovered from victim: {self.intersection_size}\n"
            f"missing: {len(self.missing)}\n"
        )
        if not self.diagnostics:
            return head
        width = max(len(d.entry) for d in self.diagnostics) + 2
        lines = [head, "entry".ljust(width) + "len".rjust(5) + "seen".rjust(6) + "  near misses"]
        for d in self.diagnostics:
            lines.append(
                d.entry.ljust(width)
                + str(d.length).rjust(5)
                + str(d.output_occurrences).rjust(6)
                + "  "
                + ", ".join(d.near_misses)
            )
        return "\n".join(lines) + "\n"


def _output_words(victim_outputs) -> list[str]:
    """Reassemble the words of rendered gray-box output lines."""
    words: list[str] = []
    for line in getattr(victim_outputs, "sentences", victim_outputs):
        seq = SubwordSequence.from_rendered(line)
        run: list[str] = []
        for tok in seq:
            run.append(tok.text)
            if tok.final:
                words.append("".join(run))
                run = []
        if run:
            words.append("".join(run))
    return words


def missing_subwords(
    victim_vocab: frozenset[str],
    recovered: frozenset[str],
    victim_outputs,
    near_miss_prefix: int = 4,
    max_near_misses: int = 5,
) -> MissingReport:
    """Diagnose victim entries the extraction never observed.

    For each missing entry: its character length, how often its text occurs
    as a substring of the victim's output words (evidence it was always
    emitted inside something larger), and victim entries sharing a prefix of
    at least ``near_miss_prefix`` characters (near misses).
    """
    if not victim_vocab:
        raise ValueError("victim vocabulary is empty")
    missing = frozenset(victim_vocab - recovered)
    intersection = len(victim_vocab) - len(missing)

    words = _output_words(victim_outputs)
    joined = "\x1f".join(words)

    prefix_groups: dict[str, list[str]] = {}
    for entry in sorted(victim_vocab):
        base, _ = parse_symbol(entry)
        if len(base) >= near_miss_prefix:
            prefix_groups.setdefault(base[:near_miss_prefix], []).append(entry)

    diagnostics = []
    for entry in sorted(missing):
        base, _ = parse_symbol(entry)
        occurrences = joined.count(base) if base else 0
        near = tuple(
            e
            for e in prefix_groups.get(base[:near_miss_prefix], [])
            if e != entry
        )[:max_near_misses]
        diagnostics.append(SubwordDiagnostic(entry, len(base), occurrences, near))
    return MissingReport(
        victim_size=len(victim_vocab),
        recovered_size=len(recovered),
        intersection_size=intersection,
        missing=missing,
        diagnostics=tuple(diagnostics),
    )


# -- correlation -------------------------------------------------------------------


@dataclass(frozen=True)
class CorrelationResult:
    """Pearson and Spearman coefficients with two-sided p-values.

    ``degenerate`` marks constant input, where the coefficients are
    undefined and reported as NaN.
    """

    pearson: float
    pearson_p: float
    spearman: float
    spearman_p: float
    n: int
    degenerate: bool = False


_EXACT_LIMIT = 10


def _pearson_statistic(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson r with a single-sqrt normalizer.

    ``sqrt(sx2 * sy2)`` instead of ``sqrt(sx2) * sqrt(sy2)``: mathematically
    identical, but perfectly collinear data (and perfectly anti-ranked data
    after ranking) lands on exactly +/-1.0 or -0.5 rather than one ulp off.
    """
    xm = x - x.mean()
    ym = y - y.mean()
    den = float(np.sqrt((xm @ xm) * (ym @ ym)))
    r = float(xm @ ym) / den
    return max(-1.0, min(1.0, r))


def _exact_p(x: np.ndarray, y: np.ndarray, stat) -> float:
    """Two-sided exact permutation p-value for a correlation statistic."""
    observed = abs(stat(x, y))
    n = len(y)
    hits = 0
    total = 0
    perms = permutations(range(n))
    while True:
        chunk = list(islice(perms, 100_000))
        if not chunk:
            break
        idx = np.array(chunk)
        total += len(idx)
        permuted = y[idx]
        centered = permuted - permuted.mean(axis=1, keepdims=True)
        xc = x - x.mean()
        num = centered @ xc
        den = np.sqrt((centered**2).sum(axis=1) * (xc**2).sum())
        hits += int((np.abs(num / den) >= observed - 1e-12).sum())
    return hits / total


def correlation(
    x: Sequence[float], y: Sequence[float], *, exact: bool = False
) -> CorrelationResult:
    """Correlate two equal-length vectors of at least 3 points.

    P-values come from scipy's two-sided tests; with ``exact=True`` and at
    most 10 points they are replaced by full permutation tests.  Constant
    input yields a degenerate result instead of an error.
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.ndim != 1 or ya.ndim != 1:
        raise ValueError("inputs must be one-dimensional")
    if len(xa) != len(ya):
        raise ValueError(f"length mismatch: {len(xa)} vs {len(ya)}")
    if len(xa) < 3:
        raise ValueError("need at least 3 points")
    if not (np.isfinite(xa).all() and np.isfinite(ya).all()):
        raise ValueError("inputs must be finite")

    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        nan = float("nan")
        return CorrelationResult(nan, nan, nan, nan, len(xa), degenerate=True)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pr = _scipy_stats.pearsonr(xa, ya)
        sr = _scipy_stats.spearmanr(xa, ya)
    rx = _scipy_stats.rankdata(xa)
    ry = _scipy_stats.rankdata(ya)
    result = CorrelationResult(
        pearson=_pearson_statistic(xa, ya),
        pearson_p=float(pr.pvalue),
        spearman=_pearson_statistic(rx, ry),
        spearman_p=float(sr.pvalue),
        n=len(xa),
    )
    if exact:
        if len(xa) > _EXACT_LIMIT:
            raise ValueError(f"exact permutation test limited to n <= {_EXACT_LIMIT}")
        result = CorrelationResult(
            pearson=result.pearson,
            pearson_p=_exact_p(xa, ya, _pearson_statistic),
            spearman=result.spearman,
            spearman_p=_exact_p(rx, ry, _pearson_statistic),
            n=len(xa),
        )
    return result
