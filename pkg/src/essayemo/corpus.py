"""Essay corpora and the composite emotion label model."""

from __future__ import annotations

import csv
import enum
import hashlib
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

import numpy as np

from .errors import (
    DuplicateId,
    EmptyLabel,
    InvalidWeights,
    LabelError,
    LabelParseError,
    MalformedRow,
    MissingColumn,
    UnknownEmotion,
    UnlabeledEssay,
)

SPLITS = ("train", "dev", "test")


class BasicEmotion(str, enum.Enum):
    ANGER = "Anger"
    DISGUST = "Disgust"
    FEAR = "Fear"
    HOPE = "Hope"
    JOY = "Joy"
    NEUTRAL = "Neutral"
    SADNESS = "Sadness"
    SURPRISE = "Surprise"

    def __str__(self):
        return self.value


_BY_LOWER = {e.value.lower(): e for e in BasicEmotion}


@dataclass(frozen=True, order=True)
class EmotionLabel:
    """A composite label: a nonempty set of base emotions.

    Ordering and equality follow ``canonical_text``, which joins the base
    emotions alphabetically with ``/``.
    """

    canonical_text: str
    bases: frozenset = field(compare=False)

    @classmethod
    def from_bases(cls, bases: Iterable[BasicEmotion]) -> "EmotionLabel":
        bases = frozenset(BasicEmotion(b) for b in bases)
        if not bases:
            raise EmptyLabel()
        return cls("/".join(sorted(b.value for b in bases)), bases)

    def __str__(self):
        return self.canonical_text


def parse_label(raw: str) -> EmotionLabel:
    """Parse ``"sadness/HOPE"``-style text into a canonical label."""
    parts = [p.strip() for p in raw.strip().split("/")]
    parts = [p for p in parts if p]
    if not parts:
        raise EmptyLabel(raw)
    bases = set()
    for part in parts:
        try:
            bases.add(_BY_LOWER[part.lower()])
        except KeyError:
            raise UnknownEmotion(part) from None
    return EmotionLabel.from_bases(bases)


def format_label(label: EmotionLabel) -> str:
    return label.canonical_text


# The 31 task categories, in the order the task description lists them.
TASK_CATEGORY_TEXTS = (
    "Hope/Sadness", "Anger", "Sadness", "Neutral", "Disgust/Sadness",
    "Anger/Disgust", "Fear/Sadness", "Joy", "Hope", "Joy/Neutral", "Disgust",
    "Neutral/Sadness", "Neutral/Surprise", "Anger/Neutral", "Hope/Neutral",
    "Surprise", "Anger/Sadness", "Fear", "Anger/Joy", "Disgust/Fear",
    "Fear/Neutral", "Fear/Hope", "Joy/Sadness", "Anger/Disgust/Sadness",
    "Anger/Surprise", "Disgust/Neutral", "Anger/Fear", "Sadness/Surprise",
    "Disgust/Surprise", "Anger/Hope", "Disgust/Hope",
)
TASK_CATEGORIES = tuple(sorted(parse_label(t) for t in TASK_CATEGORY_TEXTS))


@dataclass(frozen=True)
class Essay:
    id: str
    text: str
    label: Optional[EmotionLabel] = None
    split: str = "train"

    def __post_init__(self):
        if not self.id:
            raise ValueError("essay id must be nonempty")
        if self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")


@dataclass(frozen=True)
class ColumnMap:
    id: str = "essay_id"
    text: str = "essay"
    label: Optional[str] = "emotion"


@dataclass(frozen=True)
class Corpus:
    essays: tuple = ()
    column_map: ColumnMap = ColumnMap()

    def __post_init__(self):
        object.__setattr__(self, "essays", tuple(self.essays))
        seen = set()
        for essay in self.essays:
            if essay.id in seen:
                raise ValueError(f"duplicate essay id {essay.id!r}")
            seen.add(essay.id)

    def __len__(self):
        return len(self.essays)

    def __iter__(self):
        return iter(self.essays)

    @property
    def labels(self):
        return [e.label for e in self.essays]

    def with_texts(self, texts):
        """Copy with each essay's text replaced, e.g. by its normalized form.

        Replacement texts may be empty; raw ingest is where emptiness is rejected.
        """
        texts = list(texts)
        if len(texts) != len(self.essays):
            raise ValueError("text count differs from essay count")
        return Corpus(
            tuple(Essay(e.id, t, e.label, e.split) for e, t in zip(self.essays, texts)),
            self.column_map,
        )


def load_corpus(path, column_map: ColumnMap = ColumnMap(), split: str = "train") -> Corpus:
    """Read a header-bearing UTF-8 TSV into a corpus.

    Row numbers in errors count the header as row 1. Columns not named by
    ``column_map`` are ignored.
    """
    path = Path(path)
    essays = []
    first_seen = {}
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        try:
            header = next(reader)
        except StopIteration:
            header = []
        wanted = [column_map.id, column_map.text]
        if column_map.label:
            wanted.append(column_map.label)
        for col in wanted:
            if col not in header:
                raise MissingColumn(col, path)
        i_id = header.index(column_map.id)
        i_text = header.index(column_map.text)
        i_label = header.index(column_map.label) if column_map.label else None
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedRow(row_no, len(header), len(row))
            essay_id = row[i_id].strip()
            if essay_id in first_seen:
                raise DuplicateId(essay_id, first_seen[essay_id], row_no)
            first_seen[essay_id] = row_no
            if not essay_id or not row[i_text].strip():
                raise MalformedRow(row_no, len(header), len(row), "empty id or text")
            label = None
            if i_label is not None and row[i_label].strip():
                try:
                    label = parse_label(row[i_label])
                except LabelError as exc:
                    raise LabelParseError(row_no, exc) from exc
            essays.append(Essay(essay_id, row[i_text], label, split))
    return Corpus(tuple(essays), column_map)


def split_summary(corpora: Iterable[Corpus]) -> dict:
    counts = dict.fromkeys(SPLITS, 0)
    for corpus in corpora:
        for essay in corpus:
            counts[essay.split] += 1
    counts["total"] = sum(counts[s] for s in SPLITS)
    return counts


def class_distribution(corpus: Corpus) -> dict:
    """Label histogram sorted by count descending, then label text."""
    counter = Counter()
    for essay in corpus:
        if essay.label is None:
            raise UnlabeledEssay(essay.id)
        counter[essay.label.canonical_text] += 1
    return dict(sorted(counter.items(), key=lambda kv: (-kv[1], kv[0])))


def distribution_tsv(distribution: Mapping[str, int]) -> str:
    lines = ["label\tcount"]
    lines += [f"{label}\t{count}" for label, count in distribution.items()]
    return "\n".join(lines) + "\n"


def render_histogram(distribution: Mapping[str, int], width: int = 40) -> str:
    if not distribution:
        return ""
    peak = max(distribution.values())
    name_w = max(len(k) for k in distribution)
    rows = []
    for label, count in distribution.items():
        bar = "#" * max(1, round(width * count / peak)) if count else ""
        rows.append(f"{label:<{name_w}} {count:>5} {bar}")
    return "\n".join(rows) + "\n"


# -- synthetic corpora ----------------------------------------------------

_SYLLABLES = (
    "ka", "lo", "mi", "ru", "te", "zan", "bor", "vel", "quo", "shi", "dar",
    "fen", "gul", "hix", "jat", "nep", "pim", "sor", "tuv", "wex", "yol",
)
_FILLER = ("news", "article", "story", "people", "today", "report", "world", "week")


def _class_words(label: EmotionLabel, taken: set, k: int = 6) -> list:
    digest = hashlib.sha256(label.canonical_text.encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    words = []
    while len(words) < k:
        word = "".join(rng.choice(_SYLLABLES, size=3))
        if word not in taken:
            taken.add(word)
            words.append(word)
    return words


def _apportion(n: int, weights: np.ndarray) -> np.ndarray:
    quotas = n * weights / weights.sum()
    counts = np.floor(quotas).astype(int)
    remainder = n - counts.sum()
    order = np.lexsort((np.arange(len(quotas)), -(quotas - counts)))
    counts[order[:remainder]] += 1
    return counts


def synth_corpus(seed: int, n: int, class_weights: Mapping, split: str = "train",
                 words_per_essay: int = 24) -> Corpus:
    """Deterministic corpus whose classes use disjoint keyword vocabularies.

    Class counts are apportioned to the weights by largest remainder, so every
    class with a positive weight and enough essays is present.
    """
    labels = []
    for lab in class_weights:
        labels.append(lab if isinstance(lab, EmotionLabel) else parse_label(lab))
    weights = np.array([float(w) for w in class_weights.values()], dtype=float)
    if len(weights) == 0 or np.any(~np.isfinite(weights)) or np.any(weights < 0) \
            or weights.sum() <= 0:
        raise InvalidWeights("class weights must be nonnegative with at least one positive")
    if len(set(labels)) != len(labels):
        raise InvalidWeights("duplicate labels in class weights")

    order = sorted(range(len(labels)), key=lambda i: labels[i])
    labels = [labels[i] for i in order]
    weights = weights[order]
    taken = set(_FILLER)
    vocab = [_class_words(lab, taken) for lab in labels]

    rng = np.random.default_rng(seed)
    assignment = np.repeat(np.arange(len(labels)), _apportion(n, weights))
    rng.shuffle(assignment)
    essays = []
    for i, cls in enumerate(assignment):
        n_key = words_per_essay * 2 // 3
        words = list(rng.choice(vocab[cls], size=n_key))
        words += list(rng.choice(_FILLER, size=words_per_essay - n_key))
        rng.shuffle(words)
        text = "The " + " ".join(words[:len(words) // 2]) + ", and " + \
            " ".join(words[len(words) // 2:]) + "."
        essays.append(Essay(f"synth-{i:05d}", text, labels[cls], split))
    return Corpus(tuple(essays))


def write_corpus(corpus: Corpus, path, column_map: ColumnMap = ColumnMap()) -> None:
    """Write a corpus as TSV readable by :func:`load_corpus`."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        header = [column_map.id, column_map.text]
        if column_map.label:
            header.append(column_map.label)
        writer.writerow(header)
        for e in corpus:
            row = [e.id, e.text]
            if column_map.label:
                row.append(e.label.canonical_text if e.label else "")
            writer.writerow(row)
