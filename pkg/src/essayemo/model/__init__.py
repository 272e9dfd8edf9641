"""Recurrent and fine-tuned transformer emotion classifiers."""

from .core import (
    LABEL_INDEX,
    NUM_CLASSES,
    EpochRecord,
    TrainedClassifier,
    TrainingHistory,
    deterministic_mode,
    label_position,
    load_model,
    predict,
    predict_proba,
    save_model,
)
from .finetune import FinetuneConfig, train_finetune
from .recurrent import RecurrentConfig, build_recurrent, train_recurrent

__all__ = [
    "LABEL_INDEX", "NUM_CLASSES", "EpochRecord", "TrainedClassifier", "TrainingHistory",
    "deterministic_mode", "label_position", "load_model", "predict", "predict_proba",
    "save_model", "FinetuneConfig", "train_finetune", "RecurrentConfig",
    "build_recurrent", "train_recurrent",
]
