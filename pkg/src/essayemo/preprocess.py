"""Text normalization chain applied to raw essays before tokenization.

Stages run in a fixed order: lowercase, contraction expansion, nonstandard
character removal, punctuation removal, stopword removal, whitespace
collapse. Contractions must be expanded while their apostrophes still exist.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

NEGATIONS = frozenset({"no", "not", "nor", "never"})
MORPHOLOGY_MODES = ("none", "stem", "lemma")

_APOSTROPHES = "'’"
_STANDARD = frozenset(string.ascii_letters + string.digits + string.punctuation + " \t\n\r\x0b\x0c")
_PUNCT_RE = re.compile("[" + re.escape(string.punctuation) + "]")


def _data_path(name):
    return resources.files("essayemo").joinpath("data", name)


def load_stopwords(path=None) -> frozenset:
    """One token per line; ``#`` starts a comment. Negations are always dropped."""
    text = (Path(path).read_text(encoding="utf-8") if path
            else _data_path("stopwords.txt").read_text(encoding="utf-8"))
    words = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            words.add(line)
    return frozenset(words - NEGATIONS)


def load_contractions(path=None) -> "ContractionTable":
    text = (Path(path).read_text(encoding="utf-8") if path
            else _data_path("contractions.tsv").read_text(encoding="utf-8"))
    entries = {}
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            key, value = line.split("\t")
        except ValueError:
            raise ValueError(f"contraction table line {n}: expected 2 tab-separated fields") from None
        entries[key.strip()] = value.strip()
    return ContractionTable(entries)


class ContractionTable:
    """Lowercase contraction -> expansion map with longest-match lookup.

    Straight and curly apostrophes are interchangeable in the input.
    """

    def __init__(self, entries: Mapping[str, str]):
        table = {}
        for key, value in entries.items():
            key = key.lower().replace("’", "'")
            if "'" not in key:
                raise ValueError(f"contraction key {key!r} has no apostrophe")
            if any(a in value for a in _APOSTROPHES):
                raise ValueError(f"expansion {value!r} contains an apostrophe")
            table[key] = value
        self.entries = table
        alternation = "|".join(
            re.escape(k).replace("'", "['’]")
            for k in sorted(table, key=lambda k: (-len(k), k))
        )
        # ASCII-only letter boundaries and case folding keep the match set
        # stable under the later character-stripping stages.
        self._pattern = re.compile(
            rf"(?<![A-Za-z])(?:{alternation})(?![A-Za-z])",
            re.IGNORECASE | re.ASCII,
        ) if table else None

    def __len__(self):
        return len(self.entries)

    def __contains__(self, key):
        return key.lower() in self.entries

    def expand(self, text: str) -> str:
        if self._pattern is None:
            return text

        def sub(m):
            return self.entries[m.group(0).lower().replace("’", "'")]

        # expansions carry no apostrophes, so this terminates
        while True:
            new = self._pattern.sub(sub, text)
            if new == text:
                return new
            text = new


@lru_cache(maxsize=None)
def default_contractions() -> ContractionTable:
    return load_contractions()


@lru_cache(maxsize=None)
def default_stopwords() -> frozenset:
    return load_stopwords()


@dataclass(frozen=True)
class PreprocessConfig:
    lowercase: bool = True
    expand_contractions: bool = True
    strip_nonstandard: bool = True
    strip_punctuation: bool = True
    remove_stopwords: bool = True
    collapse_whitespace: bool = True
    morphology: str = "none"
    stopword_list: frozenset = field(default_factory=default_stopwords, repr=False)

    def __post_init__(self):
        if self.morphology not in MORPHOLOGY_MODES:
            raise ValueError(f"morphology must be one of {MORPHOLOGY_MODES}")
        object.__setattr__(self, "stopword_list",
                           frozenset(w.lower() for w in self.stopword_list) - NEGATIONS)

    @classmethod
    def disabled(cls) -> "PreprocessConfig":
        return cls(False, False, False, False, False, False)

    def only(self, **flags) -> "PreprocessConfig":
        """All stages off except the named ones."""
        return replace(PreprocessConfig.disabled(), stopword_list=self.stopword_list, **flags)


def expand_contractions(text: str, table: ContractionTable = None) -> str:
    return (table or default_contractions()).expand(text)


def _strip_nonstandard(text):
    return "".join(c if c in _STANDARD else " " for c in text)


def _remove_stopwords(text, stopwords, collapse):
    if collapse:
        return " ".join(t for t in text.split() if t.lower() not in stopwords)
    # keep the surrounding whitespace untouched
    parts = re.split(r"(\s+)", text)
    return "".join(p for p in parts if p.isspace() or p.lower() not in stopwords)


def normalize(text: str, config: PreprocessConfig = PreprocessConfig(),
              contractions: ContractionTable = None) -> str:
    if config.lowercase:
        text = text.lower()
    if config.expand_contractions:
        text = expand_contractions(text, contractions)
    if config.strip_nonstandard:
        text = _strip_nonstandard(text)
    if config.strip_punctuation:
        text = _PUNCT_RE.sub(" ", text)
    if config.remove_stopwords:
        text = _remove_stopwords(text, config.stopword_list, config.collapse_whitespace)
    if config.collapse_whitespace:
        text = " ".join(text.split())
    return text


def tokenize(text: str) -> list:
    return text.split(" ") if text else []


class _Lemmatizer:
    def __init__(self, path=None):
        src = (Path(path).read_text(encoding="utf-8") if path
               else _data_path("lemmas.tsv").read_text(encoding="utf-8"))
        self.table = dict(line.split("\t") for line in src.splitlines() if line.strip())

    def __call__(self, token):
        return self.table.get(token, token)


@lru_cache(maxsize=None)
def _lemmatizer():
    return _Lemmatizer()


@lru_cache(maxsize=None)
def _stemmer():
    from nltk.stem.porter import PorterStemmer
    return PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


def apply_morphology(tokens: Iterable[str], mode: str = "none") -> list:
    tokens = list(tokens)
    if mode == "none":
        return tokens
    if mode == "stem":
        stem = _stemmer().stem
        return [stem(t) for t in tokens]
    if mode == "lemma":
        lemma = _lemmatizer()
        return [lemma(t) for t in tokens]
    raise ValueError(f"unknown morphology mode {mode!r}")


def preprocess(text: str, config: PreprocessConfig = PreprocessConfig()) -> list:
    """Normalize, tokenize and apply the configured morphology."""
    return apply_morphology(tokenize(normalize(text, config)), config.morphology)
