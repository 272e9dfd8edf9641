import sys
from pathlib import Path

import pytest

from essayemo.corpus import synth_corpus
from essayemo.embed import SubwordProvider, build_embedding_matrix, build_vocabulary
from essayemo.experiment import preprocess_corpus
from essayemo.preprocess import PreprocessConfig, tokenize

DATA = Path(__file__).parent / "data"

FOUR_CLASSES = {"Anger": 1, "Joy": 1, "Hope/Sadness": 1, "Fear": 1}


@pytest.fixture(scope="session")
def leaderboard_path():
    return DATA / "leaderboard.tsv"


@pytest.fixture(scope="session")
def separable16():
    """16 normalized essays over 4 classes with disjoint keyword vocabularies."""
    return preprocess_corpus(synth_corpus(1, 16, FOUR_CLASSES), PreprocessConfig())


@pytest.fixture(scope="session")
def separable16_inputs(separable16):
    vocab = build_vocabulary([tokenize(e.text) for e in separable16])
    matrix = build_embedding_matrix(vocab, SubwordProvider(dim=32, seed=0))
    return separable16, vocab, matrix


@pytest.fixture(scope="session")
def tiny_bert_dir(tmp_path_factory):
    """A randomly initialised 1-layer BERT saved locally, standing in for downloaded weights."""
    transformers = pytest.importorskip("transformers")
    d = tmp_path_factory.mktemp("tiny-bert")
    words = sorted({t for e in synth_corpus(1, 64, FOUR_CLASSES) for t in tokenize(e.text.lower())})
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "bank", "river", "loan", "##s"] + words
    tok = transformers.BertTokenizerFast(vocab={w: i for i, w in enumerate(dict.fromkeys(vocab))})
    cfg = transformers.BertConfig(vocab_size=len(tok), hidden_size=32, num_hidden_layers=1,
                                  num_attention_heads=2, intermediate_size=64,
                                  max_position_embeddings=160, hidden_dropout_prob=0.0,
                                  attention_probs_dropout_prob=0.0)
    transformers.logging.set_verbosity_error()
    transformers.set_seed(0)
    transformers.BertModel(cfg).save_pretrained(d)
    tok.save_pretrained(d)
    return d


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
