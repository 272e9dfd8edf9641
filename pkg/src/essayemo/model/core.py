"""Shared classifier machinery: label index, training loop, inference, artifacts."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch
from torch import nn

from ..corpus import TASK_CATEGORIES, Corpus, EmotionLabel, parse_label
from ..errors import (
    CorruptArtifact,
    EmptyCorpus,
    UnknownCategory,
    UnlabeledTraining,
    VersionMismatch,
    VocabularyMismatch,
)

FORMAT_VERSION = 1
DETERMINISTIC_ENV = "ESSAYEMO_DETERMINISTIC"

LABEL_INDEX = tuple(label.canonical_text for label in TASK_CATEGORIES)
NUM_CLASSES = len(LABEL_INDEX)
_POSITION = {text: i for i, text in enumerate(LABEL_INDEX)}


def label_position(label: EmotionLabel) -> int:
    try:
        return _POSITION[label.canonical_text]
    except KeyError:
        raise UnknownCategory(f"{label.canonical_text!r} is not one of the {NUM_CLASSES} task categories") from None


def deterministic_mode() -> bool:
    return os.environ.get(DETERMINISTIC_ENV, "").strip().lower() in ("1", "true", "yes", "on")


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)
    if deterministic_mode():
        torch.use_deterministic_algorithms(True, warn_only=True)


@dataclass
class EpochRecord:
    loss: float
    accuracy: float
    dev_loss: Optional[float] = None
    dev_accuracy: Optional[float] = None


@dataclass
class TrainingHistory:
    epochs: list = field(default_factory=list)

    def __len__(self):
        return len(self.epochs)

    @property
    def losses(self):
        return [e.loss for e in self.epochs]

    @property
    def accuracies(self):
        return [e.accuracy for e in self.epochs]

    def to_rows(self):
        return [dataclasses.asdict(e) for e in self.epochs]


@dataclass
class TrainedClassifier:
    """A fitted network plus everything needed to feed it.

    ``encoder_inputs`` turns essay texts into the network's input tensors;
    it is rebuilt from ``kind``/``config``/``vocab`` when an artifact loads.
    """

    kind: str
    config: object
    network: nn.Module
    vocab: object = None
    tokenizer: object = None
    label_index: tuple = LABEL_INDEX

    def inputs(self, texts: Sequence[str]):
        from . import finetune, recurrent

        if self.kind == "recurrent":
            return recurrent.encode_inputs(self, texts)
        return finetune.encode_inputs(self, texts)


def _check_labeled(corpus: Corpus):
    if corpus is None or len(corpus) == 0:
        raise EmptyCorpus("training corpus is empty")
    missing = [e.id for e in corpus if e.label is None]
    if missing:
        raise UnlabeledTraining(f"{len(missing)} training essays lack labels (first: {missing[0]!r})")
    return torch.tensor([label_position(e.label) for e in corpus], dtype=torch.long)


def _batched_logits(model: TrainedClassifier, inputs, batch_size=64):
    n = inputs[0].shape[0]
    outs = []
    for start in range(0, n, batch_size):
        outs.append(model.network(*(x[start:start + batch_size] for x in inputs)))
    if not outs:
        return torch.zeros((0, NUM_CLASSES))
    return torch.cat(outs)


def fit(model: TrainedClassifier, train: Corpus, dev: Optional[Corpus],
        batch_size: int, epochs: int, learning_rate: float, seed: int) -> TrainingHistory:
    """Mini-batch Adam on categorical cross-entropy with per-epoch records.

    Training loss/accuracy are accumulated over the epoch's batches; dev
    metrics are evaluated after each epoch and never influence training.
    """
    y = _check_labeled(train)
    x = model.inputs([e.text for e in train])
    dev_xy = None
    if dev is not None and len(dev) and all(e.label is not None for e in dev):
        dev_xy = (model.inputs([e.text for e in dev]),
                  torch.tensor([label_position(e.label) for e in dev], dtype=torch.long))

    params = [p for p in model.network.parameters() if p.requires_grad]
    optimizer = torch.optim.Adam(params, lr=learning_rate)
    loss_fn = nn.CrossEntropyLoss()
    gen = torch.Generator().manual_seed(seed)
    history = TrainingHistory()
    n = len(y)
    for _ in range(epochs):
        model.network.train()
        order = torch.randperm(n, generator=gen)
        total_loss, correct = 0.0, 0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            logits = model.network(*(t[idx] for t in x))
            loss = loss_fn(logits, y[idx])
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total_loss += loss.item() * len(idx)
            correct += (logits.argmax(1) == y[idx]).sum().item()
        record = EpochRecord(total_loss / n, correct / n)
        if dev_xy is not None:
            model.network.eval()
            with torch.no_grad():
                logits = _batched_logits(model, dev_xy[0])
                record.dev_loss = loss_fn(logits, dev_xy[1]).item()
                record.dev_accuracy = (logits.argmax(1) == dev_xy[1]).float().mean().item()
        history.epochs.append(record)
    model.network.eval()
    return history


def predict_proba(model: TrainedClassifier, essays, vocab=None) -> np.ndarray:
    """Softmax probabilities, one row of 31 per essay, columns in label_index order."""
    if vocab is not None and model.vocab is not None and vocab != model.vocab:
        raise VocabularyMismatch("supplied vocabulary differs from the model's")
    essays = list(essays)
    if not essays:
        return np.zeros((0, NUM_CLASSES))
    model.network.eval()
    with torch.no_grad():
        logits = _batched_logits(model, model.inputs([e.text for e in essays]))
    logits = logits.double().numpy()
    logits -= logits.max(axis=1, keepdims=True)
    probs = np.exp(logits)
    return probs / probs.sum(axis=1, keepdims=True)


def predict(model: TrainedClassifier, essays, vocab=None) -> list:
    """Most probable label per essay; ties go to the alphabetically first label."""
    probs = predict_proba(model, essays, vocab)
    return [parse_label(model.label_index[i]) for i in probs.argmax(axis=1)]


# -- artifacts ------------------------------------------------------------

def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def save_model(model: TrainedClassifier, path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    weights = path / "weights.pt"
    torch.save(model.network.state_dict(), weights)
    extra = {}
    if model.tokenizer is not None:
        model.tokenizer.save_pretrained(path / "encoder")
        model.network.encoder.config.save_pretrained(path / "encoder")
        extra["encoder_dir"] = "encoder"
    manifest = {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "config": dataclasses.asdict(model.config),
        "label_index": list(model.label_index),
        "vocab": model.vocab.to_list() if model.vocab is not None else None,
        "weights": {"file": weights.name, "sha256": _sha256(weights)},
        **extra,
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n",
                                        encoding="utf-8")


def load_model(path) -> TrainedClassifier:
    from ..embed import Vocabulary
    from . import finetune, recurrent

    path = Path(path)
    try:
        manifest = json.loads((path / "manifest.json").read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptArtifact(f"unreadable manifest in {path}: {exc}") from exc
    if not isinstance(manifest, dict) or "format_version" not in manifest:
        raise CorruptArtifact("manifest lacks a format version")
    if manifest["format_version"] != FORMAT_VERSION:
        raise VersionMismatch(f"artifact format {manifest['format_version']}, expected {FORMAT_VERSION}")
    try:
        kind = manifest["kind"]
        weights = path / manifest["weights"]["file"]
        if _sha256(weights) != manifest["weights"]["sha256"]:
            raise CorruptArtifact(f"checksum mismatch for {weights}")
        vocab = Vocabulary.from_list(manifest["vocab"]) if manifest["vocab"] is not None else None
        label_index = tuple(manifest["label_index"])
        if kind == "recurrent":
            model = recurrent.rebuild(manifest["config"], vocab)
        elif kind == "finetune":
            encoder_dir = path / manifest["encoder_dir"] if manifest.get("encoder_dir") else None
            model = finetune.rebuild(manifest["config"], vocab, encoder_dir)
        else:
            raise CorruptArtifact(f"unknown model kind {kind!r}")
        state = torch.load(weights, map_location="cpu", weights_only=True)
        model.network.load_state_dict(state)
    except CorruptArtifact:
        raise
    except (OSError, KeyError, TypeError, ValueError, RuntimeError, EOFError) as exc:
        raise CorruptArtifact(f"cannot load artifact from {path}: {exc}") from exc
    model.label_index = label_index
    model.network.eval()
    return model
