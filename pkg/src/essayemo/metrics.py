"""Shared-task scoring over base-emotion sets.

Composite labels are decomposed into their base emotions and scored as
multi-label predictions. Micro metrics pool TP/FP/FN over the eight base
emotions; macro metrics average per-class values over classes that occur in
gold or prediction.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import BasicEmotion, EmotionLabel, parse_label
from .errors import EmptyInput, EmptyLeaderboard, LengthMismatch, MissingIds

CLASSES = tuple(BasicEmotion)

# row order of the results grid
METRIC_ROWS = (
    ("micro_f1", "Micro F1-Score"),
    ("macro_f1", "Macro F1-Score"),
    ("micro_jaccard", "Micro Jaccard"),
    ("micro_precision", "Micro Precision"),
    ("macro_precision", "Macro Precision"),
    ("micro_recall", "Micro Recall"),
    ("macro_recall", "Macro Recall"),
)


@dataclass(frozen=True)
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def support(self):
        return self.tp + self.fp + self.fn


ClassCounts = dict  # BasicEmotion -> Counts, always holding all eight classes


def decompose(labels: Iterable[EmotionLabel]) -> list:
    return [frozenset(label.bases) for label in labels]


def confusion_counts(gold: Sequence[frozenset], pred: Sequence[frozenset]) -> ClassCounts:
    if len(gold) != len(pred):
        raise LengthMismatch(len(gold), len(pred))
    tp = dict.fromkeys(CLASSES, 0)
    fp = dict.fromkeys(CLASSES, 0)
    fn = dict.fromkeys(CLASSES, 0)
    for g, p in zip(gold, pred):
        g, p = set(g), set(p)
        for c in g & p:
            tp[c] += 1
        for c in p - g:
            fp[c] += 1
        for c in g - p:
            fn[c] += 1
    return {c: Counts(tp[c], fp[c], fn[c]) for c in CLASSES}


def _ratio(num, den):
    return num / den if den else 0.0


def _f1(p, r):
    return _ratio(2 * p * r, p + r)


@dataclass(frozen=True)
class MetricsReport:
    macro_f1: float
    micro_f1: float
    micro_jaccard: float
    micro_precision: float
    micro_recall: float
    macro_precision: float
    macro_recall: float
    counts: dict
    n_samples: int

    def as_dict(self):
        return {key: getattr(self, key) for key, _ in METRIC_ROWS}


def macro_population(counts: ClassCounts) -> list:
    """Classes that enter macro averages: those with any TP, FP or FN."""
    return [c for c in CLASSES if counts[c].support > 0]


def report_from_counts(counts: ClassCounts, n_samples: int = 0) -> MetricsReport:
    counts = {c: counts.get(c, Counts()) for c in CLASSES}
    tp = sum(k.tp for k in counts.values())
    fp = sum(k.fp for k in counts.values())
    fn = sum(k.fn for k in counts.values())
    micro_p = _ratio(tp, tp + fp)
    micro_r = _ratio(tp, tp + fn)
    per_p, per_r, per_f = [], [], []
    for c in macro_population(counts):
        k = counts[c]
        p, r = _ratio(k.tp, k.tp + k.fp), _ratio(k.tp, k.tp + k.fn)
        per_p.append(p)
        per_r.append(r)
        per_f.append(_f1(p, r))
    mean = lambda xs: sum(xs) / len(xs) if xs else 0.0  # noqa: E731
    return MetricsReport(
        macro_f1=mean(per_f),
        micro_f1=_ratio(2 * tp, 2 * tp + fp + fn),
        micro_jaccard=_ratio(tp, tp + fp + fn),
        micro_precision=micro_p,
        micro_recall=micro_r,
        macro_precision=mean(per_p),
        macro_recall=mean(per_r),
        counts=counts,
        n_samples=n_samples,
    )


def report_from_sets(gold: Sequence[frozenset], pred: Sequence[frozenset]) -> MetricsReport:
    if len(gold) != len(pred):
        raise LengthMismatch(len(gold), len(pred))
    if not gold:
        raise EmptyInput("no samples to score")
    return report_from_counts(confusion_counts(gold, pred), len(gold))


def compute_report(gold: Sequence[EmotionLabel], pred: Sequence[EmotionLabel]) -> MetricsReport:
    gold, pred = list(gold), list(pred)
    if len(gold) != len(pred):
        raise LengthMismatch(len(gold), len(pred))
    return report_from_sets(decompose(gold), decompose(pred))


def validate_report(report, tol: float = 1e-9) -> list:
    """List violated identities; empty when the report is self-consistent.

    ``report`` may be a MetricsReport or any object/mapping exposing the
    micro precision, recall, F1 and Jaccard values.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    get = report.get if isinstance(report, Mapping) else lambda k: getattr(report, k, None)
    problems = []
    for key, _ in METRIC_ROWS:
        value = get(key)
        if value is not None and not (-tol <= value <= 1 + tol):
            problems.append(f"{key}={value} outside [0, 1]")
    p, r, f1, j = (get(k) for k in ("micro_precision", "micro_recall", "micro_f1", "micro_jaccard"))
    if p is not None and r is not None and f1 is not None and p + r > 0:
        expected = 2 * p * r / (p + r)
        if abs(f1 - expected) > tol:
            problems.append(f"micro_f1={f1} but 2PR/(P+R)={expected:.6g}")
    if f1 is not None and j is not None:
        expected = f1 / (2 - f1)
        if abs(j - expected) > tol:
            problems.append(f"micro_jaccard={j} but F1/(2-F1)={expected:.6g}")
    return problems


def render_results_table(reports: Sequence, fmt: str = "text") -> str:
    """Metrics as rows, configurations as columns, 3 decimals.

    ``reports`` is a sequence of ``(name, MetricsReport or None)``; ``None``
    marks a failed configuration.
    """
    reports = list(reports.items()) if isinstance(reports, Mapping) else list(reports)
    if not reports:
        raise ValueError("need at least one report")
    names = [name for name, _ in reports]

    def cell(report, key):
        return "failed" if report is None else f"{getattr(report, key):.3f}"

    rows = [[title] + [cell(r, key) for _, r in reports] for key, title in METRIC_ROWS]
    header = ["Metrics"] + names
    if fmt == "tsv":
        return "".join("\t".join(row) + "\n" for row in [header] + rows)
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    widths = [max(len(row[i]) for row in [header] + rows) for i in range(len(header))]
    fmt_row = lambda row: "  ".join(  # noqa: E731
        c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths)))
    rule = "-" * len(fmt_row(header))
    return "\n".join([fmt_row(header), rule] + [fmt_row(r) for r in rows]) + "\n"


def parse_results_tsv(text: str) -> dict:
    """Inverse of the TSV table: {config name: {metric key: value}}."""
    rows = list(csv.reader(io.StringIO(text), delimiter="\t"))
    names = rows[0][1:]
    by_title = {title: key for key, title in METRIC_ROWS}
    out = {name: {} for name in names}
    for row in rows[1:]:
        key = by_title[row[0]]
        for name, value in zip(names, row[1:]):
            out[name][key] = None if value == "failed" else float(value)
    return out


# -- leaderboard ----------------------------------------------------------

def rank_against_leaderboard(macro_f1: float, leaderboard: Sequence) -> int:
    """1-based rank after inserting the score; ties take the best rank."""
    scores = [score for _, score in leaderboard]
    if not scores:
        raise EmptyLeaderboard("leaderboard has no entries")
    return 1 + sum(1 for s in scores if s > macro_f1)


LEADERBOARD_COLUMNS = ("rank", "team", "macro_f1", "micro_recall", "micro_precision",
                       "micro_f1", "macro_recall", "macro_precision", "micro_jaccard")


def load_leaderboard(path) -> list:
    """Rows of the leaderboard TSV as dicts with float metric values."""
    with Path(path).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh, delimiter="\t"))
    out = []
    for row in rows:
        entry = {"rank": int(row["rank"]), "team": row["team"]}
        for key in LEADERBOARD_COLUMNS[2:]:
            entry[key] = float(row[key])
        out.append(entry)
    return out


# -- id-keyed label files -------------------------------------------------

def read_label_tsv(path) -> dict:
    """Two-column ``id<TAB>label`` file; a header row starting with ``id`` is skipped."""
    labels = {}
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for n, row in enumerate(csv.reader(fh, delimiter="\t"), start=1):
            if not row or (n == 1 and row[0].strip().lower() in ("id", "essay_id")):
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{n}: expected 2 columns, found {len(row)}")
            labels[row[0].strip()] = parse_label(row[1])
    return labels


def evaluate_files(gold_path, pred_path) -> MetricsReport:
    gold = read_label_tsv(gold_path)
    pred = read_label_tsv(pred_path)
    missing = [i for i in gold if i not in pred]
    extra = [i for i in pred if i not in gold]
    if missing or extra:
        raise MissingIds(f"{len(missing)} gold ids lack predictions, "
                         f"{len(extra)} predictions have no gold (e.g. {(missing or extra)[0]!r})")
    ids = list(gold)
    return compute_report([gold[i] for i in ids], [pred[i] for i in ids])
