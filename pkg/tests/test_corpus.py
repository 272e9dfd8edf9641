import pytest
from hypothesis import given
from hypothesis import strategies as st

from essayemo.corpus import (
    TASK_CATEGORIES,
    TASK_CATEGORY_TEXTS,
    BasicEmotion,
    ColumnMap,
    Corpus,
    EmotionLabel,
    Essay,
    class_distribution,
    distribution_tsv,
    format_label,
    load_corpus,
    parse_label,
    render_histogram,
    split_summary,
    synth_corpus,
    write_corpus,
)
from essayemo.errors import (
    DuplicateId,
    EmptyLabel,
    InvalidWeights,
    LabelParseError,
    MalformedRow,
    MissingColumn,
    UnknownEmotion,
    UnlabeledEssay,
)

E = BasicEmotion


def test_parse_composite():
    label = parse_label("Anger/Disgust/Sadness")
    assert label.bases == {E.ANGER, E.DISGUST, E.SADNESS}
    assert label.canonical_text == "Anger/Disgust/Sadness"


def test_parse_singleton():
    label = parse_label("Joy")
    assert label.bases == {E.JOY}
    assert label.canonical_text == "Joy"


def test_parse_normalizes_case_and_order():
    assert parse_label("sadness/HOPE").canonical_text == "Hope/Sadness"
    assert parse_label("  fear / fear ").canonical_text == "Fear"


@pytest.mark.parametrize("raw", ["Love", "Anger/Trust"])
def test_parse_unknown(raw):
    with pytest.raises(UnknownEmotion):
        parse_label(raw)


@pytest.mark.parametrize("raw", ["", "   ", "/", " / "])
def test_parse_empty(raw):
    with pytest.raises(EmptyLabel):
        parse_label(raw)


def test_format_label():
    assert format_label(EmotionLabel.from_bases({E.SADNESS, E.HOPE})) == "Hope/Sadness"
    assert format_label(EmotionLabel.from_bases({E.NEUTRAL})) == "Neutral"
    assert format_label(EmotionLabel.from_bases({E.ANGER, E.JOY})) == "Anger/Joy"


def test_task_categories():
    assert len(TASK_CATEGORY_TEXTS) == len(set(TASK_CATEGORY_TEXTS)) == 31
    for text in TASK_CATEGORY_TEXTS:
        assert format_label(parse_label(text)) == text
    assert [c.canonical_text for c in TASK_CATEGORIES] == sorted(TASK_CATEGORY_TEXTS)


@given(st.sets(st.sampled_from(list(BasicEmotion)), min_size=1))
def test_format_parse_roundtrip(bases):
    label = EmotionLabel.from_bases(bases)
    again = parse_label(format_label(label))
    assert again == label and again.bases == label.bases


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_corpus(tmp_path):
    p = _write(tmp_path / "train.tsv",
               "essay_id\tage\tessay\temotion\n"
               "1\t30\tFirst essay.\tSadness\n"
               "2\t41\tSecond essay.\tHope/Sadness\n"
               "3\t22\tThird one.\tanger/disgust\n")
    c = load_corpus(p)
    assert [e.id for e in c] == ["1", "2", "3"]
    assert c.essays[2].label.canonical_text == "Anger/Disgust"
    assert all(e.split == "train" for e in c)


def test_load_unlabeled_test_split(tmp_path):
    p = _write(tmp_path / "test.tsv", "essay_id\tessay\n10\tSome text\n11\tMore text\n")
    c = load_corpus(p, ColumnMap(label=None), split="test")
    assert len(c) == 2 and all(e.label is None for e in c)


def test_load_duplicate_id(tmp_path):
    rows = "".join(f"{i}\ttext {i}\tJoy\n" for i in ["7", "8", "9"]) + "7\tagain\tJoy\n"
    p = _write(tmp_path / "dup.tsv", "essay_id\tessay\temotion\n" + rows)
    with pytest.raises(DuplicateId) as exc:
        load_corpus(p)
    assert exc.value.essay_id == "7" and exc.value.rows == (2, 5)


def test_load_errors(tmp_path):
    with pytest.raises(MissingColumn):
        load_corpus(_write(tmp_path / "a.tsv", "id\tessay\temotion\n1\tx\tJoy\n"))
    with pytest.raises(MalformedRow):
        load_corpus(_write(tmp_path / "b.tsv", "essay_id\tessay\temotion\n1\tx\n"))
    with pytest.raises(LabelParseError) as exc:
        load_corpus(_write(tmp_path / "c.tsv", "essay_id\tessay\temotion\n1\tx\tJoy\n2\ty\tLove\n"))
    assert exc.value.row == 3


def test_split_summary():
    assert split_summary([]) == {"train": 0, "dev": 0, "test": 0, "total": 0}
    train = synth_corpus(1, 16, {"Joy": 1})
    assert split_summary([train]) == {"train": 16, "dev": 0, "test": 0, "total": 16}


def test_split_summary_published_shape():
    corpora = [synth_corpus(s, n, {"Joy": 1, "Anger": 1}, split)
               for s, n, split in ((1, 792, "train"), (2, 208, "dev"), (3, 100, "test"))]
    counts = split_summary(corpora)
    assert counts == {"train": 792, "dev": 208, "test": 100, "total": 1100}
    # the published total of 1000 counts only the labeled splits
    assert counts["train"] + counts["dev"] == 1000


def test_class_distribution():
    c = Corpus((Essay("1", "a", parse_label("Joy")), Essay("2", "b", parse_label("Joy")),
                Essay("3", "c", parse_label("Anger"))))
    dist = class_distribution(c)
    assert dist == {"Joy": 2, "Anger": 1} and list(dist) == ["Joy", "Anger"]
    assert distribution_tsv(dist) == "label\tcount\nJoy\t2\nAnger\t1\n"
    assert render_histogram(dist, width=4).splitlines() == ["Joy       2 ####", "Anger     1 ##"]


def test_class_distribution_unlabeled():
    with pytest.raises(UnlabeledEssay):
        class_distribution(Corpus((Essay("1", "a"),)))


def test_synth_skewed_counts():
    weights = {"Joy": 0.7, "Anger": 0.2, "Fear": 0.1}
    dist = class_distribution(synth_corpus(13, 1000, weights))
    assert sum(dist.values()) == 1000
    for label, w in weights.items():
        assert abs(dist[label] - 1000 * w) <= 50


def test_synth_basic_contracts():
    assert len(synth_corpus(1, 0, {"Joy": 1})) == 0
    a = synth_corpus(5, 20, {"Joy": 1, "Fear": 2})
    assert a == synth_corpus(5, 20, {"Joy": 1, "Fear": 2})
    four = synth_corpus(1, 16, {"Anger": 1, "Joy": 1, "Fear": 1, "Hope": 1})
    assert len(four) == 16
    assert all(n >= 1 for n in class_distribution(four).values())
    assert len(class_distribution(four)) == 4


@pytest.mark.parametrize("weights", [{}, {"Joy": 0}, {"Joy": -1, "Fear": 2}, {"Joy": float("nan")}])
def test_synth_invalid_weights(weights):
    with pytest.raises(InvalidWeights):
        synth_corpus(1, 10, weights)


def test_synth_classes_have_disjoint_keywords():
    c = synth_corpus(3, 40, {"Joy": 1, "Fear": 1, "Anger/Joy": 1})
    filler = {"the", "and", "news", "article", "story", "people", "today", "report", "world", "week"}
    words = {}
    for e in c:
        toks = {w.strip(",.").lower() for w in e.text.split()} - filler
        words.setdefault(e.label.canonical_text, set()).update(toks)
    labels = list(words)
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            assert not words[a] & words[b]


def test_write_load_roundtrip(tmp_path):
    c = synth_corpus(2, 12, {"Joy": 1, "Hope/Sadness": 1}, split="dev")
    write_corpus(c, tmp_path / "c.tsv")
    again = load_corpus(tmp_path / "c.tsv", split="dev")
    assert again.essays == c.essays
