"""Classification metrics and chance-corrected agreement coefficients.

All functions are pure. Aggregate ("all") rows are always computed from
pooled confusion counts or concatenated rating vectors, never by averaging
per-language rows.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import NamedTuple, Sequence

from .corpus import Corpus
from .errors import MetricsError
from .schema import LabelSchema


class _UndefinedKappa:
    """Explicit degenerate-agreement marker, distinct from any float.

    Returned when expected agreement is 1 and observed agreement is not
    perfect; rendered distinctly in tables instead of propagating NaN.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Undefined"


UNDEFINED = _UndefinedKappa()

KappaValue = "float | _UndefinedKappa"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise MetricsError(f"confusion count {name} must be >= 0")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def swapped(self) -> "ConfusionCounts":
        """Counts with the positive and negative roles exchanged."""
        return ConfusionCounts(tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp)

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )


class PRF1(NamedTuple):
    precision: float
    recall: float
    f1: float
    degenerate: bool


def counts_from_pairs(pred: Sequence[int], gold: Sequence[int]) -> ConfusionCounts:
    if len(pred) != len(gold):
        raise MetricsError(f"length mismatch: {len(pred)} vs {len(gold)}")
    tp = fp = fn = tn = 0
    for p, g in zip(pred, gold):
        if p == 1 and g == 1:
            tp += 1
        elif p == 1 and g == 0:
            fp += 1
        elif p == 0 and g == 1:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, fn, tn)


def prf1(counts: ConfusionCounts) -> PRF1:
    """Positive-class precision, recall, and F1.

    precision = tp / (tp + fp)
    recall    = tp / (tp + fn)
    f1        = 2 * precision * recall / (precision + recall)

    A zero denominator yields 0.0 for that component and sets ``degenerate``.
    """
    degenerate = False
    if counts.tp + counts.fp == 0:
        precision, degenerate = 0.0, True
    else:
        precision = counts.tp / (counts.tp + counts.fp)
    if counts.tp + counts.fn == 0:
        recall, degenerate = 0.0, True
    else:
        recall = counts.tp / (counts.tp + counts.fn)
    if precision + recall == 0.0:
        return PRF1(precision, recall, 0.0, True)
    f1 = 2.0 * precision * recall / (precision + recall)
    return PRF1(precision, recall, f1, degenerate)


def macro_f1(counts: ConfusionCounts) -> float:
    """Mean of the positive-class F1 and the negative-class F1."""
    return (prf1(counts).f1 + prf1(counts.swapped()).f1) / 2.0


def accuracy(counts: ConfusionCounts) -> float:
    if counts.total == 0:
        raise MetricsError("accuracy undefined on empty counts")
    return (counts.tp + counts.tn) / counts.total


def cohen_kappa(a: Sequence[int], b: Sequence[int]):
    """Cohen's kappa between two binary raters.

              p_o - p_e
    kappa = -------------
               1 - p_e

    p_o is the observed agreement rate and p_e the chance agreement from
    the two raters' own marginals. When p_e = 1 the statistic degenerates:
    returns 1.0 on perfect agreement and ``UNDEFINED`` otherwise.
    """
    if len(a) != len(b):
        raise MetricsError(f"length mismatch: {len(a)} vs {len(b)}")
    n = len(a)
    if n == 0:
        raise MetricsError("kappa undefined on empty vectors")
    _check_binary(a)
    _check_binary(b)
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    pa1 = sum(a) / n
    pb1 = sum(b) / n
    p_e = pa1 * pb1 + (1.0 - pa1) * (1.0 - pb1)
    if p_e == 1.0:
        return 1.0 if all(x == y for x, y in zip(a, b)) else UNDEFINED
    return (p_o - p_e) / (1.0 - p_e)


def fleiss_kappa(ratings: Sequence[Sequence[int]]):
    """Fleiss' kappa for n items rated by the same number of binary raters.

               P_bar - Pe_bar
    kappa = -------------------
                1 - Pe_bar

    P_bar averages per-item pairwise agreement; Pe_bar is the chance
    agreement from the pooled category proportions. Degenerate Pe_bar = 1
    is handled as in :func:`cohen_kappa`.
    """
    if not ratings:
        raise MetricsError("kappa undefined on an empty rating matrix")
    m = len(ratings[0])
    if m < 2:
        raise MetricsError("fleiss_kappa needs at least two raters")
    total_ones = 0
    p_sum = 0.0
    for row in ratings:
        if len(row) != m:
            raise MetricsError("ragged rating matrix: all items need the same rater count")
        _check_binary(row)
        n1 = sum(row)
        n0 = m - n1
        total_ones += n1
        p_sum += (n1 * n1 + n0 * n0 - m) / (m * (m - 1))
    n = len(ratings)
    p_bar = p_sum / n
    p1 = total_ones / (n * m)
    p0 = 1.0 - p1
    pe_bar = p1 * p1 + p0 * p0
    if pe_bar == 1.0:
        return 1.0 if p_bar == 1.0 else UNDEFINED
    return (p_bar - pe_bar) / (1.0 - pe_bar)


def _check_binary(values: Sequence[int]) -> None:
    for v in values:
        if v not in (0, 1):
            raise MetricsError(f"ratings must be 0 or 1, got {v!r}")


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

POOLED = "all"


@dataclass(frozen=True)
class MetricRow:
    language: str  # a language code or POOLED
    label_id: str
    metric: str
    value: object  # float or UNDEFINED


@dataclass
class MetricReport:
    rows: list[MetricRow] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def value(self, language: str, label_id: str, metric: str):
        for row in self.rows:
            if (row.language, row.label_id, row.metric) == (language, label_id, metric):
                return row.value
        raise MetricsError(f"no row for ({language}, {label_id}, {metric})")

    def languages(self) -> list[str]:
        seen: list[str] = []
        for row in self.rows:
            if row.language != POOLED and row.language not in seen:
                seen.append(row.language)
        return seen

    def labels(self) -> list[str]:
        seen: list[str] = []
        for row in self.rows:
            if row.label_id not in seen:
                seen.append(row.label_id)
        return seen

    def to_json(self) -> str:
        payload = {
            "metadata": self.metadata,
            "rows": [
                {
                    "language": r.language,
                    "label": r.label_id,
                    "metric": r.metric,
                    "value": None if r.value is UNDEFINED else r.value,
                    "defined": r.value is not UNDEFINED,
                }
                for r in self.rows
            ],
        }
        return json.dumps(payload, ensure_ascii=False, indent=2)


def render_percent(value: float) -> str:
    """Percent with one decimal, rounded half-up (table style)."""
    return str(Decimal(repr(value * 100.0)).quantize(Decimal("0.1"), ROUND_HALF_UP))


def render_kappa(value) -> str:
    if value is UNDEFINED:
        return "n/a"
    return str(Decimal(repr(value)).quantize(Decimal("0.01"), ROUND_HALF_UP))


def agreement_report(
    layer_a: str,
    layer_b: str,
    corpus: Corpus,
    schema: LabelSchema | None = None,
    instance_ids: Sequence[str] | None = None,
) -> MetricReport:
    """Cohen's kappa per (language, label) plus pooled per-label totals.

    Only instances carrying a value in both layers for a label contribute
    to that label's cell; empty cells are reported as ``UNDEFINED``.
    """
    schema = schema or corpus.schema
    ids = list(instance_ids) if instance_ids is not None else corpus.ids()
    report = MetricReport(metadata={"layer_a": layer_a, "layer_b": layer_b})
    per_lang: dict[str, dict[str, tuple[list[int], list[int]]]] = {}
    pooled: dict[str, tuple[list[int], list[int]]] = {
        label: ([], []) for label in schema.label_ids
    }
    for iid in ids:
        inst = corpus.instance(iid)
        for label in schema.label_ids:
            va = corpus.value(iid, label, layer_a)
            vb = corpus.value(iid, label, layer_b)
            if va is None or vb is None:
                continue
            cell = per_lang.setdefault(inst.language, {}).setdefault(label, ([], []))
            cell[0].append(va)
            cell[1].append(vb)
            pooled[label][0].append(va)
            pooled[label][1].append(vb)

    languages = [l for l in corpus.languages_present() if l in per_lang]
    for language in languages:
        for label in schema.label_ids:
            a, b = per_lang[language].get(label, ([], []))
            value = cohen_kappa(a, b) if a else UNDEFINED
            report.rows.append(MetricRow(language, label, "kappa", value))
    for label in schema.label_ids:
        a, b = pooled[label]
        value = cohen_kappa(a, b) if a else UNDEFINED
        report.rows.append(MetricRow(POOLED, label, "kappa", value))
    return report


def classification_report(
    pred_layer: str,
    gold_layer: str,
    corpus: Corpus,
    schema: LabelSchema | None = None,
    instance_ids: Sequence[str] | None = None,
) -> MetricReport:
    """Positive-class precision/recall/F1 plus accuracy and macro-F1 per
    (language, label), with pooled rows computed from summed counts."""
    schema = schema or corpus.schema
    ids = list(instance_ids) if instance_ids is not None else corpus.ids()
    per_lang: dict[str, dict[str, ConfusionCounts]] = {}
    pooled: dict[str, ConfusionCounts] = {
        label: ConfusionCounts() for label in schema.label_ids
    }
    for iid in ids:
        inst = corpus.instance(iid)
        for label in schema.label_ids:
            pred = corpus.value(iid, label, pred_layer)
            gold = corpus.value(iid, label, gold_layer)
            if pred is None or gold is None:
                continue
            counts = counts_from_pairs([pred], [gold])
            lang_cells = per_lang.setdefault(inst.language, {})
            lang_cells[label] = lang_cells.get(label, ConfusionCounts()) + counts
            pooled[label] = pooled[label] + counts

    report = MetricReport(
        metadata={"pred_layer": pred_layer, "gold_layer": gold_layer}
    )
    languages = [l for l in corpus.languages_present() if l in per_lang]
    for language in languages:
        for label in schema.label_ids:
            counts = per_lang[language].get(label, ConfusionCounts())
            _append_classification_rows(report, language, label, counts)
    for label in schema.label_ids:
        _append_classification_rows(report, POOLED, label, pooled[label])
    return report


def _append_classification_rows(
    report: MetricReport, language: str, label: str, counts: ConfusionCounts
) -> None:
    if counts.total == 0:
        for metric in ("precision", "recall", "f1", "accuracy", "macro_f1"):
            report.rows.append(MetricRow(language, label, metric, UNDEFINED))
        report.rows.append(MetricRow(language, label, "support", 0.0))
        return
    scores = prf1(counts)
    report.rows.append(MetricRow(language, label, "precision", scores.precision))
    report.rows.append(MetricRow(language, label, "recall", scores.recall))
    report.rows.append(MetricRow(language, label, "f1", scores.f1))
    report.rows.append(MetricRow(language, label, "accuracy", accuracy(counts)))
    report.rows.append(MetricRow(language, label, "macro_f1", macro_f1(counts)))
    report.rows.append(MetricRow(language, label, "support", float(counts.total)))


def kappa_csv(report: MetricReport) -> str:
    """Matrix layout: one row per language, one column per label, plus a
    final pooled Total row."""
    labels = report.labels()
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["language", *labels])
    for language in report.languages():
        writer.writerow(
            [language, *(render_kappa(report.value(language, label, "kappa")) for label in labels)]
        )
    writer.writerow(
        ["Total", *(render_kappa(report.value(POOLED, label, "kappa")) for label in labels)]
    )
    return buffer.getvalue()


def classification_csv(report: MetricReport, language: str = POOLED) -> str:
    """Per-label metric table for one language slice (percent-rendered)."""
    labels = report.labels()
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["label", "precision", "recall", "f1", "accuracy", "macro_f1"])
    for label in labels:
        cells = [label]
        for metric in ("precision", "recall", "f1", "accuracy", "macro_f1"):
            value = report.value(language, label, metric)
            cells.append("n/a" if value is UNDEFINED else render_percent(value))
        writer.writerow(cells)
    return buffer.getvalue()
