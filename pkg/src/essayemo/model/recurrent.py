"""Two-layer bidirectional LSTM classifier over a fixed embedding matrix."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence

from ..corpus import Corpus
from ..embed import PAD_INDEX, Vocabulary, encode_sequence
from ..errors import ShapeMismatch
from ..preprocess import tokenize
from .core import NUM_CLASSES, TrainedClassifier, fit, seed_everything


@dataclass
class RecurrentConfig:
    embedding_dim: int
    seq_len: int
    recurrent_units: int = 64
    dense_units: int = 64
    num_classes: int = NUM_CLASSES
    batch_size: int = 32
    epochs: int = 3
    learning_rate: float = 0.001
    trainable_embeddings: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.num_classes != NUM_CLASSES:
            raise ValueError(f"the output layer has {NUM_CLASSES} classes")
        if min(self.embedding_dim, self.seq_len, self.recurrent_units,
               self.dense_units, self.batch_size) < 1 or self.epochs < 0:
            raise ValueError("recurrent config sizes must be positive")


class BiLSTMClassifier(nn.Module):
    """embedding -> BiLSTM (sequences) -> BiLSTM (final states) -> dense ReLU -> logits.

    Padding positions are packed away, so final states come from real tokens.
    """

    def __init__(self, vocab_size, config: RecurrentConfig, matrix=None):
        super().__init__()
        self.embedding = nn.Embedding(vocab_size, config.embedding_dim, padding_idx=PAD_INDEX)
        if matrix is not None:
            with torch.no_grad():
                self.embedding.weight.copy_(torch.as_tensor(matrix, dtype=torch.float32))
        self.embedding.weight.requires_grad_(config.trainable_embeddings)
        units = config.recurrent_units
        self.lstm1 = nn.LSTM(config.embedding_dim, units, batch_first=True, bidirectional=True)
        self.lstm2 = nn.LSTM(2 * units, units, batch_first=True, bidirectional=True)
        self.dense = nn.Linear(2 * units, config.dense_units)
        self.output = nn.Linear(config.dense_units, config.num_classes)

    def features(self, ids, lengths):
        """Dense-layer input: concatenated final forward/backward states."""
        x = self.embedding(ids)
        packed = pack_padded_sequence(x, lengths.clamp(min=1).cpu(), batch_first=True,
                                      enforce_sorted=False)
        seq, _ = self.lstm1(packed)
        _, (h, _) = self.lstm2(seq)
        return torch.cat([h[0], h[1]], dim=1)

    def forward(self, ids, lengths):
        return self.output(torch.relu(self.dense(self.features(ids, lengths))))


def encode_inputs(model: TrainedClassifier, texts):
    seq_len = model.config.seq_len
    ids, lengths = [], []
    for text in texts:
        tokens = tokenize(text)
        ids.append(encode_sequence(tokens, model.vocab, seq_len))
        lengths.append(min(len(tokens), seq_len))
    return (torch.tensor(ids, dtype=torch.long).reshape(len(ids), seq_len),
            torch.tensor(lengths, dtype=torch.long))


def build_recurrent(matrix: np.ndarray, vocab: Vocabulary, config: RecurrentConfig) -> TrainedClassifier:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[1] != config.embedding_dim:
        raise ShapeMismatch(f"matrix width {matrix.shape[-1]} != embedding_dim {config.embedding_dim}")
    if matrix.shape[0] != len(vocab):
        raise ShapeMismatch(f"matrix has {matrix.shape[0]} rows, vocabulary has {len(vocab)}")
    seed_everything(config.seed)
    net = BiLSTMClassifier(len(vocab), config, matrix)
    return TrainedClassifier("recurrent", config, net, vocab=vocab)


def train_recurrent(train: Corpus, dev: Optional[Corpus], matrix, vocab: Vocabulary,
                    config: RecurrentConfig):
    """Fit the recurrent classifier; essays must already be normalized text."""
    model = build_recurrent(matrix, vocab, config)
    history = fit(model, train, dev, config.batch_size, config.epochs,
                  config.learning_rate, config.seed)
    return model, history


def rebuild(config: dict, vocab: Vocabulary) -> TrainedClassifier:
    config = RecurrentConfig(**config)
    net = BiLSTMClassifier(len(vocab), config)
    return TrainedClassifier("recurrent", config, net, vocab=vocab)
