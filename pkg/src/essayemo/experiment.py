"""End-to-end runs: config files, the seven reference profiles, and run bundles.

Config files are flat ``key = value`` text with dotted section keys::

    data.train = train.tsv
    data.dev = dev.tsv
    provider.stack = glove, fasttext
    provider.glove.kind = static
    provider.glove.path = glove.6B.100d.txt
    provider.fasttext.kind = subword
    provider.fasttext.dim = 300
    model.kind = recurrent
    model.embedding_dim = 400
    model.seq_len = 128
    seed = 13
    output_dir = runs/glove-fasttext

Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import corpus as corpus_mod
from .corpus import ColumnMap, Corpus, load_corpus
from .embed import (
    ContextualProvider,
    EmbeddingProvider,
    StackedProvider,
    SubwordProvider,
    build_embedding_matrix,
    build_vocabulary,
    load_static_vectors,
)
from .errors import ConfigError, EssayEmoError, IoFailure, LengthMismatch, StageError
from .metrics import MetricsReport, evaluate_files, render_results_table
from .model import (
    FinetuneConfig,
    RecurrentConfig,
    TrainingHistory,
    predict,
    save_model,
    train_finetune,
    train_recurrent,
)
from .preprocess import (
    PreprocessConfig,
    apply_morphology,
    load_contractions,
    load_stopwords,
    normalize,
    tokenize,
)

log = logging.getLogger(__name__)

CACHE_ENV = "ESSAYEMO_CACHE"

# name -> (provider stack, model kind, embedding dim, sequence length, epochs, learning rate)
PROFILES = {
    "GloVe": (("glove",), "recurrent", 100, 74, 3, 0.001),
    "fastText": (("fasttext",), "recurrent", 300, 74, 4, 0.001),
    "GloVe+fastText": (("glove", "fasttext"), "recurrent", 400, 128, 3, 0.001),
    "GloVe+BERT": (("glove", "bert"), "recurrent", 868, 128, 3, 0.001),
    "fastText+BERT": (("fasttext", "bert"), "recurrent", 1068, 152, 7, 0.001),
    "GloVe+fastText+BERT": (("glove", "fasttext", "bert"), "recurrent", 1168, 152, 5, 0.001),
    "BERT": ((), "finetune", 768, 152, 5, 2e-5),
}
PROFILE_BATCH_SIZE = 32


def profile_overrides(name: str) -> dict:
    lookup = {k.lower(): k for k in PROFILES}
    try:
        key = lookup[name.strip().lower()]
    except KeyError:
        raise ConfigError(f"unknown profile {name!r}; choose from {', '.join(PROFILES)}") from None
    stack, kind, dim, seq_len, epochs, lr = PROFILES[key]
    out = {
        "name": key,
        "model.kind": kind,
        "model.seq_len": str(seq_len),
        "model.batch_size": str(PROFILE_BATCH_SIZE),
        "model.epochs": str(epochs),
        "model.learning_rate": str(lr),
        "provider.stack": ",".join(stack),
    }
    out["model.embedding_dim" if kind == "recurrent" else "model.encoder_dim"] = str(dim)
    return out


# -- config ---------------------------------------------------------------

def parse_config_text(text: str) -> dict:
    values = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not re.fullmatch(r"[A-Za-z_][\w]*(\.[\w]+)*", key):
            raise ConfigError(f"config line {n}: bad key {key!r}")
        values[key] = value
    return values


def _bool(value, key):
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def _num(value, key, kind=int):
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected {kind.__name__}, got {value!r}") from None


@dataclass
class ExperimentConfig:
    """Parsed view over the flat key/value mapping, which stays authoritative."""

    values: dict
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls(parse_config_text(text), path.resolve().parent)

    @classmethod
    def from_text(cls, text, base_dir=None) -> "ExperimentConfig":
        return cls(parse_config_text(text), Path(base_dir) if base_dir else Path.cwd())

    def with_overrides(self, overrides: dict) -> "ExperimentConfig":
        return ExperimentConfig({**self.values, **overrides}, self.base_dir)

    def with_profile(self, name: str) -> "ExperimentConfig":
        over = profile_overrides(name)
        base_out = self.values.get("output_dir", "runs")
        over["output_dir"] = str(Path(base_out) / _slug(over["name"]))
        return self.with_overrides(over)

    def to_text(self) -> str:
        return "".join(f"{k} = {self.values[k]}\n" for k in sorted(self.values))

    def get(self, key, default=None):
        return self.values.get(key, default)

    def path(self, key) -> Optional[Path]:
        value = self.values.get(key)
        if not value:
            return None
        return self.resolve(value)

    def resolve(self, value) -> Path:
        p = Path(os.path.expanduser(value))
        if p.is_absolute():
            return p
        local = self.base_dir / p
        cache = os.environ.get(CACHE_ENV)
        if not local.exists() and cache and (Path(cache) / p).exists():
            return Path(cache) / p
        return local

    # typed views

    @property
    def name(self):
        return self.values.get("name", "run")

    @property
    def seed(self) -> int:
        return _num(self.values.get("seed", 0), "seed")

    @property
    def output_dir(self) -> Path:
        return self.resolve(self.values.get("output_dir", "runs/run"))

    @property
    def column_map(self) -> ColumnMap:
        label = self.values.get("data.columns.label", "emotion")
        return ColumnMap(self.values.get("data.columns.id", "essay_id"),
                         self.values.get("data.columns.text", "essay"),
                         label or None)

    @property
    def model_kind(self) -> str:
        kind = self.values.get("model.kind", "recurrent")
        if kind not in ("recurrent", "finetune"):
            raise ConfigError(f"model.kind must be recurrent or finetune, got {kind!r}")
        return kind

    @property
    def stack(self) -> tuple:
        raw = self.values.get("provider.stack", "")
        return tuple(s.strip() for s in raw.split(",") if s.strip())

    def preprocess_config(self) -> PreprocessConfig:
        kw = {}
        for f in ("lowercase", "expand_contractions", "strip_nonstandard", "strip_punctuation",
                  "remove_stopwords", "collapse_whitespace"):
            key = f"preprocess.{f}"
            if key in self.values:
                kw[f] = _bool(self.values[key], key)
        if "preprocess.morphology" in self.values:
            kw["morphology"] = self.values["preprocess.morphology"]
        if self.path("preprocess.stopwords"):
            kw["stopword_list"] = load_stopwords(self.path("preprocess.stopwords"))
        try:
            return PreprocessConfig(**kw)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def contraction_table(self):
        p = self.path("preprocess.contractions")
        return load_contractions(p) if p else None

    def provider_spec(self, name) -> dict:
        prefix = f"provider.{name}."
        spec = {k[len(prefix):]: v for k, v in self.values.items() if k.startswith(prefix)}
        if "kind" not in spec:
            raise ConfigError(f"provider {name!r} has no {prefix}kind")
        return spec

    def declared_dim(self, name) -> Optional[int]:
        spec = self.provider_spec(name)
        if "dim" in spec:
            return _num(spec["dim"], f"provider.{name}.dim")
        return 768 if spec["kind"] == "contextual" else None

    def model_params(self) -> dict:
        prefix = "model."
        return {k[len(prefix):]: v for k, v in self.values.items()
                if k.startswith(prefix) and k != "model.kind"}

    def recurrent_config(self) -> RecurrentConfig:
        return _dataclass_from(RecurrentConfig, self.model_params(), self.seed, "model")

    def finetune_config(self) -> FinetuneConfig:
        params = self.model_params()
        if os.environ.get(CACHE_ENV) and "cache_dir" not in params:
            params["cache_dir"] = os.environ[CACHE_ENV]
        return _dataclass_from(FinetuneConfig, params, self.seed, "model")

    def validate(self) -> None:
        """Cheap checks that run before any data is touched."""
        if not self.values.get("data.train"):
            raise ConfigError("data.train is required")
        self.preprocess_config()
        if self.model_kind == "recurrent":
            model = self.recurrent_config()
            if not self.stack:
                raise ConfigError("recurrent models need provider.stack")
            dims = [self.declared_dim(n) for n in self.stack]
            if all(d is not None for d in dims) and sum(dims) != model.embedding_dim:
                raise ConfigError(f"provider dimension {sum(dims)} != model embedding_dim "
                                  f"{model.embedding_dim}")
        else:
            self.finetune_config()


_MODEL_FIELDS = {f.name for c in (RecurrentConfig, FinetuneConfig) for f in dataclasses.fields(c)}


def _dataclass_from(cls, params, seed, section):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    known = fields.keys() | _MODEL_FIELDS
    kw = {"seed": seed}
    for key, value in params.items():
        if key not in known:
            raise ConfigError(f"{section}.{key} is not a recognised model setting")
        if key not in fields:
            # belongs to the other model kind
            continue
        default = fields[key].default
        ftype = type(default) if default is not dataclasses.MISSING and default is not None else None
        if key in ("embedding_dim", "seq_len"):
            ftype = int
        if ftype is bool:
            kw[key] = _bool(value, f"{section}.{key}")
        elif ftype in (int, float):
            kw[key] = _num(value, f"{section}.{key}", ftype)
        elif ftype is tuple:
            kw[key] = tuple(_num(v, f"{section}.{key}") for v in value.split(","))
        else:
            kw[key] = value or None
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {section} settings: {exc}") from exc


def build_provider(config: ExperimentConfig, name: str) -> EmbeddingProvider:
    spec = config.provider_spec(name)
    kind = spec["kind"]
    key = f"provider.{name}"
    seed = _num(spec.get("seed", config.seed), f"{key}.seed")
    if kind == "static":
        if not spec.get("path"):
            raise ConfigError(f"{key}.path is required for static providers")
        provider = load_static_vectors(config.resolve(spec["path"]))
    elif kind == "subword":
        provider = SubwordProvider(
            dim=_num(spec.get("dim", 300), f"{key}.dim"),
            n_min=_num(spec.get("n_min", 3), f"{key}.n_min"),
            n_max=_num(spec.get("n_max", 6), f"{key}.n_max"),
            buckets=_num(spec.get("buckets", 2_000_000), f"{key}.buckets"),
            seed=seed,
        )
    elif kind == "contextual":
        provider = ContextualProvider(
            dim=_num(spec.get("dim", 768), f"{key}.dim"),
            backend=spec.get("backend", "stub"),
            seed=seed,
            model_name=spec.get("model_name"),
            cache_dir=os.environ.get(CACHE_ENV),
        )
    elif kind == "flair":
        raise ConfigError("flair providers are not implemented; use static, subword or contextual")
    else:
        raise ConfigError(f"{key}.kind {kind!r} is not one of static, subword, contextual")
    declared = config.declared_dim(name)
    if declared is not None and declared != provider.dim:
        raise ConfigError(f"{key}: declared dim {declared}, loaded vectors have {provider.dim}")
    return provider


def build_stack(config: ExperimentConfig) -> EmbeddingProvider:
    providers = [build_provider(config, n) for n in config.stack]
    return providers[0] if len(providers) == 1 else StackedProvider(providers)


# -- running ----------------------------------------------------------------

@dataclass
class RunBundle:
    name: str
    config_text: str
    history: TrainingHistory
    output_dir: Path
    predictions_path: Optional[Path]
    test_predictions_path: Optional[Path] = None
    report: Optional[MetricsReport] = None
    duration: float = 0.0


@dataclass
class ProfileFailure:
    name: str
    stage: str
    message: str


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        log.debug("stage %s", self.name)

    def __exit__(self, exc_type, exc, tb):
        if exc is None or isinstance(exc, StageError):
            return False
        if isinstance(exc, (EssayEmoError, OSError, ValueError)):
            raise StageError(self.name, exc) from exc
        return False


def write_predictions(essays, labels, path) -> None:
    """``essay_id<TAB>emotion`` header plus one row per essay, in essay order."""
    essays, labels = list(essays), list(labels)
    if len(essays) != len(labels):
        raise LengthMismatch(len(essays), len(labels))
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
            writer.writerow(["essay_id", "emotion"])
            for essay, label in zip(essays, labels):
                writer.writerow([essay.id, label.canonical_text])
    except OSError as exc:
        raise IoFailure(f"cannot write predictions to {path}: {exc}") from exc


def preprocess_corpus(corpus: Corpus, config: PreprocessConfig, contractions=None) -> Corpus:
    texts = []
    for essay in corpus:
        tokens = apply_morphology(tokenize(normalize(essay.text, config, contractions)),
                                  config.morphology)
        texts.append(" ".join(tokens))
    return corpus.with_texts(texts)


def run_experiment(config: ExperimentConfig) -> RunBundle:
    started = time.perf_counter()
    with _Stage("config"):
        config.validate()
        pre_cfg = config.preprocess_config()
        contractions = config.contraction_table()
        out = config.output_dir
        out.mkdir(parents=True, exist_ok=True)

    with _Stage("corpus"):
        cmap = config.column_map
        train = load_corpus(config.path("data.train"), cmap, "train")
        dev = load_corpus(config.path("data.dev"), cmap, "dev") if config.path("data.dev") else None
        test = None
        if config.path("data.test"):
            test_map = ColumnMap(cmap.id, cmap.text, config.get("data.test_columns.label") or None)
            test = load_corpus(config.path("data.test"), test_map, "test")

    with _Stage("preprocess"):
        train_p = preprocess_corpus(train, pre_cfg, contractions)
        dev_p = preprocess_corpus(dev, pre_cfg, contractions) if dev is not None else None
        test_p = preprocess_corpus(test, pre_cfg, contractions) if test is not None else None

    if config.model_kind == "recurrent":
        model_cfg = config.recurrent_config()
        with _Stage("embed"):
            vocab = build_vocabulary([tokenize(e.text) for e in train_p],
                                     _num(config.get("embed.min_count", 1), "embed.min_count"))
            provider = build_stack(config)
            if provider.dim != model_cfg.embedding_dim:
                raise ConfigError(f"provider dimension {provider.dim} != model embedding_dim "
                                  f"{model_cfg.embedding_dim}")
            matrix = build_embedding_matrix(vocab, provider)
        with _Stage("train"):
            model, history = train_recurrent(train_p, dev_p, matrix, vocab, model_cfg)
    else:
        with _Stage("train"):
            model, history = train_finetune(train_p, dev_p, config.finetune_config())

    pred_path = test_path = None
    with _Stage("predict"):
        if dev_p is not None:
            pred_path = out / "predictions_dev.tsv"
            write_predictions(dev_p, predict(model, dev_p), pred_path)
        if test_p is not None:
            test_path = out / "predictions_test.tsv"
            write_predictions(test_p, predict(model, test_p), test_path)

    report = None
    with _Stage("evaluate"):
        if dev is not None and len(dev) and all(e.label is not None for e in dev):
            gold_path = out / "gold_dev.tsv"
            write_predictions(dev, dev.labels, gold_path)
            report = evaluate_files(gold_path, pred_path)

    with _Stage("persist"):
        (out / "config.txt").write_text(config.to_text(), encoding="utf-8")
        save_model(model, out / "model")
        with (out / "history.tsv").open("w", encoding="utf-8") as fh:
            fh.write("epoch\tloss\taccuracy\tdev_loss\tdev_accuracy\n")
            for i, rec in enumerate(history.epochs, start=1):
                fh.write("\t".join(str(v) for v in (i, rec.loss, rec.accuracy,
                                                    rec.dev_loss, rec.dev_accuracy)) + "\n")
        duration = time.perf_counter() - started
        summary = {
            "name": config.name,
            "seed": config.seed,
            "model_kind": config.model_kind,
            "epochs_run": len(history),
            "duration_s": round(duration, 3),
            "metrics": report.as_dict() if report else None,
        }
        (out / "run.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")

    return RunBundle(config.name, config.to_text(), history, out, pred_path, test_path,
                     report, duration)


def run_matrix(base_config: ExperimentConfig, profiles=None):
    """Run each named profile in its own output subdirectory.

    Returns ``(results, table)`` where ``results`` maps profile name to a
    RunBundle or ProfileFailure and ``table`` is the text results grid.
    """
    profiles = list(profiles) if profiles else list(PROFILES)
    results = {}
    for name in profiles:
        try:
            config = base_config.with_profile(name)
            label = config.name
            results[label] = run_experiment(config)
        except StageError as exc:
            log.warning("profile %s failed: %s", name, exc)
            results[name] = ProfileFailure(name, exc.stage, str(exc.cause))
        except ConfigError as exc:
            results[name] = ProfileFailure(name, "config", str(exc))
    table = render_results_table(
        [(n, r.report if isinstance(r, RunBundle) else None) for n, r in results.items()])
    return results, table


def _slug(name):
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")


def write_synthetic_dataset(directory, seed=13, n_train=64, n_dev=32, n_test=16,
                            static_dim=100, classes=None) -> Path:
    """Write train/dev/test TSVs, a GloVe-format vector file and a base config.

    Returns the config path; the config covers every reference profile.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    classes = classes or ["Anger", "Hope/Sadness", "Joy", "Neutral", "Sadness", "Fear"]
    weights = {c: 1.0 for c in classes}
    train = corpus_mod.synth_corpus(seed, n_train, weights, "train")
    dev = corpus_mod.synth_corpus(seed + 1, n_dev, weights, "dev")
    test = corpus_mod.synth_corpus(seed + 2, n_test, weights, "test")
    corpus_mod.write_corpus(train, directory / "train.tsv")
    corpus_mod.write_corpus(dev, directory / "dev.tsv")
    corpus_mod.write_corpus(test, directory / "test.tsv", ColumnMap(label=None))

    import numpy as np

    words = sorted({t for c in (train, dev) for e in c for t in tokenize(normalize(e.text))})
    rng = np.random.default_rng(seed)
    with (directory / "glove.txt").open("w", encoding="utf-8") as fh:
        for w in words:
            vec = rng.uniform(-0.5, 0.5, static_dim)
            fh.write(w + " " + " ".join(f"{v:.5f}" for v in vec) + "\n")
    config = f"""\
data.train = train.tsv
data.dev = dev.tsv
data.test = test.tsv
provider.glove.kind = static
provider.glove.path = glove.txt
provider.glove.dim = {static_dim}
provider.fasttext.kind = subword
provider.fasttext.dim = 300
provider.bert.kind = contextual
provider.bert.backend = stub
provider.bert.dim = 768
provider.stack = glove
model.kind = recurrent
model.embedding_dim = {static_dim}
model.seq_len = 74
model.epochs = 3
seed = {seed}
output_dir = runs
"""
    path = directory / "experiment.cfg"
    path.write_text(config, encoding="utf-8")
    return path
