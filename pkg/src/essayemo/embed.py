"""Token vector providers, vocabularies and embedding matrices."""

from __future__ import annotations

import hashlib
import threading
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BackendUnavailable,
    DimensionMismatch,
    EmptyFile,
    EmptyProviderList,
    EmptyToken,
    MalformedFloat,
    SequenceTooLong,
)

PAD = "<pad>"
OOV = "<oov>"
PAD_INDEX = 0
OOV_INDEX = 1


class Vocabulary:
    """Token to index map with PAD at 0 and OOV at 1."""

    def __init__(self, tokens: Sequence[str]):
        self.itos = [PAD, OOV] + [t for t in tokens if t not in (PAD, OOV)]
        self.stoi = {t: i for i, t in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self):
        return len(self.itos)

    def __contains__(self, token):
        return token in self.stoi

    def __getitem__(self, token):
        return self.stoi.get(token, OOV_INDEX)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.itos == other.itos

    def __repr__(self):
        return f"Vocabulary(size={len(self)})"

    def to_list(self):
        return list(self.itos[2:])

    @classmethod
    def from_list(cls, tokens):
        return cls(tokens)


def build_vocabulary(token_sequences: Iterable[Sequence[str]], min_count: int = 1) -> Vocabulary:
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = Counter(t for seq in token_sequences for t in seq)
    kept = [t for t, c in counts.items() if c >= min_count]
    kept.sort(key=lambda t: (-counts[t], t))
    return Vocabulary(kept)


def encode_sequence(tokens: Sequence[str], vocab: Vocabulary, seq_len: int) -> list:
    """Map tokens to indices, truncating and padding at the tail."""
    if seq_len < 1:
        raise ValueError("seq_len must be >= 1")
    ids = [vocab[t] for t in tokens[:seq_len]]
    return ids + [PAD_INDEX] * (seq_len - len(ids))


# -- providers ------------------------------------------------------------

class EmbeddingProvider:
    """Anything that maps a token to a fixed-length vector."""

    kind = "abstract"
    dim: int

    def vector(self, token: str) -> np.ndarray:
        raise NotImplementedError

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        """One row per token. Context-free providers ignore neighbours."""
        if not tokens:
            return np.zeros((0, self.dim), dtype=np.float32)
        return np.stack([self.vector(t) for t in tokens])

    def isolated(self, token: str) -> np.ndarray:
        """Vector used when a token must be embedded without context."""
        return self.vector(token)

    @property
    def contextual(self) -> bool:
        return False


@dataclass
class StaticTable(EmbeddingProvider):
    dim: int
    vectors: dict
    kind = "static"

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError("dimension must be positive")
        self._zero = np.zeros(self.dim, dtype=np.float32)
        self._zero.setflags(write=False)

    def __len__(self):
        return len(self.vectors)

    def __contains__(self, token):
        return token in self.vectors

    def vector(self, token):
        return self.vectors.get(token, self._zero)


def lookup_static(table: StaticTable, token: str) -> np.ndarray:
    return table.vector(token)


def load_static_vectors(path) -> StaticTable:
    """Parse GloVe/word2vec text vectors; a leading ``V D`` header is skipped."""
    path = Path(path)
    vectors = {}
    dim = None
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").rstrip("\r").split(" ")
            if parts and parts[-1] == "":
                parts = parts[:-1]
            if not parts or parts == [""]:
                continue
            if line_no == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue
            token, values = parts[0], parts[1:]
            if dim is None:
                if not values:
                    raise DimensionMismatch(line_no, ">0", 0)
                dim = len(values)
            elif len(values) != dim:
                raise DimensionMismatch(line_no, dim, len(values))
            try:
                vec = np.array([float(v) for v in values], dtype=np.float32)
            except ValueError:
                bad = next(v for v in values if not _is_float(v))
                raise MalformedFloat(line_no, bad) from None
            vectors[token] = vec
    if dim is None:
        raise EmptyFile(f"no vectors in {path}")
    return StaticTable(dim, vectors)


def _is_float(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def _stable_seed(*parts) -> int:
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(str(p).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def _fnv1a(s: str) -> int:
    h = 2166136261
    for b in s.encode("utf-8"):
        h = ((h ^ b) * 16777619) & 0xFFFFFFFF
    return h


def char_ngrams(token: str, n_min: int, n_max: int) -> list:
    """Character n-grams of ``<token>`` plus the whole wrapped token."""
    wrapped = f"<{token}>"
    grams = []
    for n in range(n_min, n_max + 1):
        grams += [wrapped[i:i + n] for i in range(len(wrapped) - n + 1)]
    grams = [g for g in grams if g != wrapped]
    grams.append(wrapped)
    return grams


class SubwordProvider(EmbeddingProvider):
    """Hashed character n-gram vectors; every string gets a vector.

    Bucket vectors are generated lazily from the seed, so large bucket counts
    cost nothing until used.
    """

    kind = "subword"

    def __init__(self, dim=300, n_min=3, n_max=6, buckets=2_000_000, seed=0):
        if dim <= 0 or n_min < 1 or n_max < n_min or buckets < 1:
            raise ValueError("invalid subword provider settings")
        self.dim, self.n_min, self.n_max = dim, n_min, n_max
        self.buckets, self.seed = buckets, seed
        self._bucket = lru_cache(maxsize=200_000)(self._bucket_vector)
        self._word = lru_cache(maxsize=100_000)(self._compute)

    def __repr__(self):
        return (f"SubwordProvider(dim={self.dim}, n=[{self.n_min},{self.n_max}], "
                f"buckets={self.buckets}, seed={self.seed})")

    def _bucket_vector(self, bucket):
        rng = np.random.default_rng([self.seed, bucket])
        return rng.uniform(-1.0, 1.0, self.dim).astype(np.float32) / np.sqrt(self.dim)

    def bucket_of(self, gram):
        return _fnv1a(gram) % self.buckets

    def _compute(self, token):
        grams = char_ngrams(token, self.n_min, self.n_max)
        vec = np.mean([self._bucket(self.bucket_of(g)) for g in grams], axis=0)
        vec = vec.astype(np.float32)
        vec.setflags(write=False)
        return vec

    def vector(self, token):
        if not token:
            raise EmptyToken("subword vectors need a nonempty token")
        return self._word(token)


def subword_vector(provider: SubwordProvider, token: str) -> np.ndarray:
    return provider.vector(token)


class ContextualProvider(EmbeddingProvider):
    """Per-occurrence token vectors.

    ``backend="stub"`` hashes (token, left neighbour, right neighbour,
    position parity) into seeded vectors. ``backend="pretrained"`` runs a
    transformer encoder and mean-pools subtoken states back to one row per
    token; calls into that encoder are serialized by a lock.
    """

    kind = "contextual"

    def __init__(self, dim=768, backend="stub", seed=0, max_tokens=512,
                 model_name=None, cache_dir=None):
        if backend not in ("stub", "pretrained"):
            raise ValueError(f"unknown contextual backend {backend!r}")
        self.backend, self.seed, self.max_tokens = backend, seed, max_tokens
        self.model_name = model_name
        self._lock = threading.Lock()
        if backend == "pretrained":
            self._tokenizer, self._encoder = _load_transformer(model_name, cache_dir)
            self.dim = int(self._encoder.config.hidden_size)
            if dim is not None and dim != self.dim:
                raise ValueError(f"pretrained encoder has dimension {self.dim}, not {dim}")
            self.max_tokens = min(max_tokens, int(self._encoder.config.max_position_embeddings) - 2)
        else:
            self.dim = dim
        self._cache = lru_cache(maxsize=200_000)(self._stub_vector)

    def __repr__(self):
        return f"ContextualProvider(dim={self.dim}, backend={self.backend!r})"

    @property
    def contextual(self):
        return True

    def _stub_vector(self, token, left, right, parity):
        rng = np.random.default_rng(_stable_seed(self.seed, token, left, right, parity))
        vec = rng.standard_normal(self.dim).astype(np.float32) / np.sqrt(self.dim)
        vec.setflags(write=False)
        return vec

    def encode(self, tokens):
        tokens = list(tokens)
        if not tokens:
            raise ValueError("contextual encoding needs at least one token")
        if len(tokens) > self.max_tokens:
            raise SequenceTooLong(f"{len(tokens)} tokens exceeds maximum {self.max_tokens}")
        if self.backend == "stub":
            padded = [None] + tokens + [None]
            return np.stack([
                self._cache(tokens[i], padded[i], padded[i + 2], i % 2)
                for i in range(len(tokens))
            ])
        return self._encode_pretrained(tokens)

    def _encode_pretrained(self, tokens):
        import torch

        with self._lock:
            batch = self._tokenizer([tokens], is_split_into_words=True,
                                    return_tensors="pt", truncation=False)
            if batch["input_ids"].shape[1] > self._encoder.config.max_position_embeddings:
                raise SequenceTooLong("subtoken sequence exceeds encoder maximum")
            with torch.no_grad():
                hidden = self._encoder(**batch).last_hidden_state[0].float().numpy()
            word_ids = batch.word_ids(0)
        out = np.zeros((len(tokens), self.dim), dtype=np.float32)
        counts = np.zeros(len(tokens))
        for pos, w in enumerate(word_ids):
            if w is not None:
                out[w] += hidden[pos]
                counts[w] += 1
        nonzero = counts > 0
        out[nonzero] /= counts[nonzero, None]
        return out

    def vector(self, token):
        return self.encode([token])[0]


def contextual_encode(provider: ContextualProvider, tokens: Sequence[str]) -> np.ndarray:
    return provider.encode(tokens)


def _load_transformer(model_name, cache_dir=None):
    if not model_name:
        raise BackendUnavailable("pretrained backend needs a model name or path")
    try:
        from transformers import AutoModel, AutoTokenizer
        from transformers.utils import logging as hf_logging

        hf_logging.set_verbosity_error()
        tokenizer = AutoTokenizer.from_pretrained(model_name, cache_dir=cache_dir)
        encoder = AutoModel.from_pretrained(model_name, cache_dir=cache_dir)
    except Exception as exc:  # network, missing files, bad format
        raise BackendUnavailable(f"cannot load transformer {model_name!r}: {exc}") from exc
    encoder.eval()
    return tokenizer, encoder


class StackedProvider(EmbeddingProvider):
    kind = "stacked"

    def __init__(self, components):
        self.components = list(components)
        self.dim = sum(c.dim for c in self.components)

    def __repr__(self):
        return f"StackedProvider({self.components!r})"

    @property
    def contextual(self):
        return any(c.contextual for c in self.components)

    def vector(self, token):
        return np.concatenate([c.vector(token) for c in self.components])

    def isolated(self, token):
        return np.concatenate([c.isolated(token) for c in self.components])

    def encode(self, tokens):
        tokens = list(tokens)
        return np.concatenate([c.encode(tokens) for c in self.components], axis=1)


def stack_providers(providers: Sequence[EmbeddingProvider]) -> StackedProvider:
    providers = list(providers)
    if len(providers) < 2:
        raise EmptyProviderList("stacking needs at least two providers")
    return StackedProvider(providers)


def _matrix_row(provider, token):
    if isinstance(provider, StackedProvider):
        return np.concatenate([_matrix_row(c, token) for c in provider.components])
    if token == OOV and not isinstance(provider, SubwordProvider):
        return np.zeros(provider.dim, dtype=np.float32)
    return provider.isolated(token)


def build_embedding_matrix(vocab: Vocabulary, provider: EmbeddingProvider) -> np.ndarray:
    """V x D matrix aligned to ``vocab``.

    The PAD row is zero. The OOV row is zero except in subword slices, which
    embed the literal OOV marker. Contextual slices embed each token on its own.
    """
    matrix = np.zeros((len(vocab), provider.dim), dtype=np.float32)
    for i, token in enumerate(vocab.itos):
        if i == PAD_INDEX:
            continue
        matrix[i] = _matrix_row(provider, token)
    return matrix
