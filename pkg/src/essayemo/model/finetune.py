"""Transformer encoder with a two-layer dense head, fine-tuned end to end.

Two encoder backends share one interface, ``(input_ids, attention_mask) ->
hidden states``: a pretrained Hugging Face model, or a small randomly
initialised transformer built from the training vocabulary for offline use.
The first position's hidden state feeds the dense head.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import torch
from torch import nn

from ..corpus import Corpus
from ..embed import PAD_INDEX, Vocabulary, build_vocabulary, encode_sequence
from ..errors import BackendUnavailable, EmptyCorpus, UnlabeledTraining
from ..preprocess import tokenize
from .core import NUM_CLASSES, TrainedClassifier, fit, seed_everything

CLS = "<cls>"


@dataclass
class FinetuneConfig:
    encoder_dim: int = 768
    seq_len: int = 152
    batch_size: int = 32
    epochs: int = 5
    learning_rate: float = 2e-5
    dense_units: tuple = (768, 768)
    num_classes: int = NUM_CLASSES
    seed: int = 0
    backend: str = "stub"
    model_name: Optional[str] = None
    cache_dir: Optional[str] = None
    stub_layers: int = 1
    stub_heads: int = 8

    def __post_init__(self):
        self.dense_units = tuple(self.dense_units)
        if self.num_classes != NUM_CLASSES:
            raise ValueError(f"the output layer has {NUM_CLASSES} classes")
        if self.backend not in ("stub", "pretrained"):
            raise ValueError(f"unknown encoder backend {self.backend!r}")
        if self.seq_len < 2:
            raise ValueError("seq_len must leave room for the classification position")


class StubEncoder(nn.Module):
    def __init__(self, vocab_size, config: FinetuneConfig):
        super().__init__()
        d = config.encoder_dim
        self.tokens = nn.Embedding(vocab_size, d, padding_idx=PAD_INDEX)
        self.positions = nn.Embedding(config.seq_len, d)
        layer = nn.TransformerEncoderLayer(d, config.stub_heads, dim_feedforward=2 * d,
                                           dropout=0.0, batch_first=True)
        self.layers = nn.TransformerEncoder(layer, config.stub_layers, enable_nested_tensor=False)
        nn.init.normal_(self.tokens.weight, std=1 / math.sqrt(d))
        with torch.no_grad():
            self.tokens.weight[PAD_INDEX].zero_()

    def forward(self, input_ids, attention_mask):
        pos = torch.arange(input_ids.shape[1], device=input_ids.device)
        x = self.tokens(input_ids) + self.positions(pos)[None]
        return self.layers(x, src_key_padding_mask=attention_mask == 0)


class PretrainedEncoder(nn.Module):
    def __init__(self, model):
        super().__init__()
        self.model = model

    @property
    def config(self):
        return self.model.config

    def forward(self, input_ids, attention_mask):
        return self.model(input_ids=input_ids, attention_mask=attention_mask).last_hidden_state


class FinetuneNet(nn.Module):
    def __init__(self, encoder, config: FinetuneConfig):
        super().__init__()
        self.encoder = encoder
        widths = (config.encoder_dim,) + config.dense_units
        self.dense = nn.ModuleList(nn.Linear(a, b) for a, b in zip(widths, widths[1:]))
        self.output = nn.Linear(widths[-1], config.num_classes)

    def pooled(self, input_ids, attention_mask):
        return self.encoder(input_ids, attention_mask)[:, 0]

    def forward(self, input_ids, attention_mask):
        h = self.pooled(input_ids, attention_mask)
        for layer in self.dense:
            h = torch.relu(layer(h))
        return self.output(h)


def _load_pretrained(config: FinetuneConfig):
    from ..embed import _load_transformer

    tokenizer, model = _load_transformer(config.model_name, config.cache_dir)
    if model.config.hidden_size != config.encoder_dim:
        raise BackendUnavailable(
            f"encoder hidden size {model.config.hidden_size} != encoder_dim {config.encoder_dim}")
    return tokenizer, PretrainedEncoder(model)


def encode_inputs(model: TrainedClassifier, texts):
    seq_len = model.config.seq_len
    texts = list(texts)
    if model.tokenizer is not None:
        batch = model.tokenizer(texts, padding="max_length", truncation=True,
                                max_length=seq_len, return_tensors="pt")
        return batch["input_ids"], batch["attention_mask"]
    cls = model.vocab[CLS]
    ids = [[cls] + encode_sequence(tokenize(t), model.vocab, seq_len - 1) for t in texts]
    ids = torch.tensor(ids, dtype=torch.long).reshape(len(texts), seq_len)
    return ids, (ids != PAD_INDEX).long()


def stub_vocabulary(train: Corpus) -> Vocabulary:
    vocab = build_vocabulary([tokenize(e.text) for e in train])
    return Vocabulary([CLS] + vocab.to_list())


def build_finetune(train: Corpus, config: FinetuneConfig) -> TrainedClassifier:
    if train is None or len(train) == 0:
        raise EmptyCorpus("training corpus is empty")
    if any(e.label is None for e in train):
        raise UnlabeledTraining("all training essays need labels")
    if config.backend == "pretrained":
        tokenizer, encoder = _load_pretrained(config)
        seed_everything(config.seed)
        return TrainedClassifier("finetune", config, FinetuneNet(encoder, config),
                                 tokenizer=tokenizer)
    vocab = stub_vocabulary(train)
    seed_everything(config.seed)
    net = FinetuneNet(StubEncoder(len(vocab), config), config)
    return TrainedClassifier("finetune", config, net, vocab=vocab)


def train_finetune(train: Corpus, dev: Optional[Corpus], config: FinetuneConfig):
    """Fine-tune encoder and head together with Adam."""
    model = build_finetune(train, config)
    history = fit(model, train, dev, config.batch_size, config.epochs,
                  config.learning_rate, config.seed)
    return model, history


def rebuild(config: dict, vocab: Optional[Vocabulary], encoder_dir=None) -> TrainedClassifier:
    config = FinetuneConfig(**config)
    if encoder_dir is not None:
        from transformers import AutoConfig, AutoModel, AutoTokenizer

        tokenizer = AutoTokenizer.from_pretrained(encoder_dir)
        encoder = PretrainedEncoder(AutoModel.from_config(AutoConfig.from_pretrained(encoder_dir)))
        return TrainedClassifier("finetune", config, FinetuneNet(encoder, config),
                                 tokenizer=tokenizer)
    if vocab is None:
        raise ValueError("stub encoder artifacts need a vocabulary")
    net = FinetuneNet(StubEncoder(len(vocab), config), config)
    return TrainedClassifier("finetune", config, net, vocab=vocab)
