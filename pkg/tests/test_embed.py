import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from essayemo.embed import (
    OOV,
    OOV_INDEX,
    PAD_INDEX,
    ContextualProvider,
    StaticTable,
    SubwordProvider,
    Vocabulary,
    build_embedding_matrix,
    build_vocabulary,
    char_ngrams,
    contextual_encode,
    encode_sequence,
    load_static_vectors,
    lookup_static,
    stack_providers,
    subword_vector,
)
from essayemo.errors import (
    BackendUnavailable,
    DimensionMismatch,
    EmptyFile,
    EmptyProviderList,
    EmptyToken,
    MalformedFloat,
    SequenceTooLong,
)

tokens_st = st.lists(st.text(alphabet="abcxyz", min_size=1, max_size=4), max_size=30)


def test_vocabulary_order():
    vocab = build_vocabulary([["a", "b"], ["b", "c"]])
    assert vocab.stoi == {"<pad>": 0, "<oov>": 1, "b": 2, "a": 3, "c": 4}


def test_vocabulary_empty_and_threshold():
    assert build_vocabulary([]).stoi == {"<pad>": 0, "<oov>": 1}
    assert build_vocabulary([["x"]], min_count=2).stoi == {"<pad>": 0, "<oov>": 1}
    with pytest.raises(ValueError):
        build_vocabulary([["x"]], min_count=0)


@given(st.lists(tokens_st, max_size=10), st.integers(1, 3))
def test_vocabulary_dense_and_ordered(seqs, min_count):
    vocab = build_vocabulary(seqs, min_count)
    assert sorted(vocab.stoi.values()) == list(range(len(vocab)))
    counts = {}
    for seq in seqs:
        for t in seq:
            counts[t] = counts.get(t, 0) + 1
    real = vocab.itos[2:]
    assert set(real) == {t for t, c in counts.items() if c >= min_count}
    keys = [(-counts[t], t) for t in real]
    assert keys == sorted(keys)


def test_encode_sequence():
    vocab = build_vocabulary([["a", "b"], ["b", "c"]])
    assert encode_sequence(["b", "x"], vocab, 4) == [2, 1, 0, 0]
    assert encode_sequence([], vocab, 3) == [0, 0, 0]
    toks = [f"t{i}" for i in range(200)]
    vocab = build_vocabulary([toks])
    assert encode_sequence(toks, vocab, 74) == [vocab[t] for t in toks[:74]]
    with pytest.raises(ValueError):
        encode_sequence(["a"], vocab, 0)


@given(tokens_st, st.integers(1, 40))
def test_encode_sequence_length_and_range(tokens, seq_len):
    vocab = build_vocabulary([tokens[: len(tokens) // 2]])
    ids = encode_sequence(tokens, vocab, seq_len)
    assert len(ids) == seq_len
    assert all(0 <= i < len(vocab) for i in ids)


def _write(tmp_path, text, name="vec.txt"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_load_static_vectors(tmp_path):
    table = load_static_vectors(_write(tmp_path, "the 0.1 0.2 0.3\ncat -1 2.5e-1 3E2\n"))
    assert table.dim == 3 and len(table) == 2
    np.testing.assert_array_equal(table.vectors["cat"], np.float32([-1, 0.25, 300]))


def test_load_static_vectors_header(tmp_path):
    rng = np.random.default_rng(0)
    rows = [f"w{i} " + " ".join(f"{v:.4f}" for v in rng.normal(size=100)) for i in range(5)]
    table = load_static_vectors(_write(tmp_path, "400000 100\n" + "\n".join(rows) + "\n"))
    assert table.dim == 100 and len(table) == 5


def test_load_static_vectors_errors(tmp_path):
    with pytest.raises(DimensionMismatch) as exc:
        load_static_vectors(_write(tmp_path, "a 1 2 3\nb 1 2\n"))
    assert exc.value.line == 2
    with pytest.raises(MalformedFloat):
        load_static_vectors(_write(tmp_path, "a 1 2 x\n"))
    with pytest.raises(EmptyFile):
        load_static_vectors(_write(tmp_path, "\n"))


def test_lookup_static():
    table = StaticTable(3, {"cat": np.float32([1, 2, 3])})
    np.testing.assert_array_equal(lookup_static(table, "cat"), [1, 2, 3])
    np.testing.assert_array_equal(lookup_static(table, "dog"), np.zeros(3))
    np.testing.assert_array_equal(lookup_static(table, "cat"), lookup_static(table, "cat"))


def test_char_ngrams_enumeration():
    assert char_ngrams("cat", 3, 3) == ["<ca", "cat", "at>", "<cat>"]
    assert char_ngrams("a", 3, 3) == ["<a>"]
    assert char_ngrams("ab", 3, 4) == ["<ab", "ab>", "<ab>"]


def test_subword_vector_is_mean_of_bucket_vectors():
    provider = SubwordProvider(dim=16, n_min=3, n_max=3, buckets=1000, seed=4)
    expected = np.mean([provider._bucket_vector(provider.bucket_of(g))
                        for g in ("<ca", "cat", "at>", "<cat>")], axis=0)
    np.testing.assert_allclose(subword_vector(provider, "cat"), expected, rtol=1e-6)
    only_word = provider._bucket_vector(provider.bucket_of("<a>"))
    np.testing.assert_allclose(subword_vector(provider, "a"), only_word, rtol=1e-6)


def test_subword_oov_and_errors():
    provider = SubwordProvider(dim=8, seed=1)
    vec = provider.vector("zqxjkvbw-unseen")
    assert vec.shape == (8,) and np.all(np.isfinite(vec)) and np.any(vec != 0)
    with pytest.raises(EmptyToken):
        provider.vector("")


def test_subword_deterministic_across_instances():
    a = SubwordProvider(dim=8, seed=3).vector("emotion")
    b = SubwordProvider(dim=8, seed=3).vector("emotion")
    c = SubwordProvider(dim=8, seed=4).vector("emotion")
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_contextual_stub():
    provider = ContextualProvider(dim=768, seed=0)
    bank_river = contextual_encode(provider, ["bank", "river"])
    bank_loan = contextual_encode(provider, ["bank", "loan"])
    assert not np.allclose(bank_river[0], bank_loan[0])
    np.testing.assert_array_equal(bank_river, contextual_encode(provider, ["bank", "river"]))
    assert contextual_encode(provider, ["a", "b", "c", "d", "e"]).shape == (5, 768)


def test_contextual_stub_parity_and_limits():
    provider = ContextualProvider(dim=8, seed=0, max_tokens=4)
    m = provider.encode(["x", "x", "x", "x"])
    # same neighbours, different parity
    assert not np.allclose(m[1], m[2])
    with pytest.raises(SequenceTooLong):
        provider.encode(["x"] * 5)


@settings(max_examples=50)
@given(st.lists(st.sampled_from(["a", "b", "c"]), min_size=1, max_size=20))
def test_contextual_row_count(tokens):
    provider = ContextualProvider(dim=4, seed=1)
    assert provider.encode(tokens).shape == (len(tokens), 4)


def test_contextual_pretrained_unavailable():
    with pytest.raises(BackendUnavailable):
        ContextualProvider(backend="pretrained", model_name="/nonexistent/model/dir")
    with pytest.raises(BackendUnavailable):
        ContextualProvider(backend="pretrained")


def test_contextual_pretrained_pools_subtokens(tiny_bert_dir):
    provider = ContextualProvider(dim=32, backend="pretrained", model_name=str(tiny_bert_dir))
    tokens = ["bank", "river", "banks"]
    out = provider.encode(tokens)
    assert out.shape == (3, 32)

    import torch

    batch = provider._tokenizer([tokens], is_split_into_words=True, return_tensors="pt")
    with torch.no_grad():
        hidden = provider._encoder(**batch).last_hidden_state[0].numpy()
    ids = batch.word_ids(0)
    for w in range(3):
        rows = [hidden[i] for i, wid in enumerate(ids) if wid == w]
        np.testing.assert_allclose(out[w], np.mean(rows, axis=0), rtol=1e-5, atol=1e-6)
    assert not np.allclose(provider.encode(["bank", "river"])[0], provider.encode(["bank", "loan"])[0])


def _dims(*dims):
    return [ContextualProvider(dim=d) if d == 768 else SubwordProvider(dim=d) for d in dims]


@pytest.mark.parametrize("dims,total", [((100, 300), 400), ((100, 768), 868),
                                        ((300, 768), 1068), ((100, 300, 768), 1168)])
def test_stack_dimension(dims, total):
    stacked = stack_providers(_dims(*dims))
    assert stacked.dim == total
    assert stacked.vector("hope").shape == (total,)
    assert stacked.encode(["a", "b", "c"]).shape == (3, total)


def test_stack_order_and_errors():
    a, b = SubwordProvider(dim=3, seed=1), SubwordProvider(dim=5, seed=2)
    v = stack_providers([a, b]).vector("word")
    np.testing.assert_array_equal(v[:3], a.vector("word"))
    np.testing.assert_array_equal(v[3:], b.vector("word"))
    with pytest.raises(EmptyProviderList):
        stack_providers([a])
    with pytest.raises(EmptyProviderList):
        stack_providers([])


def test_embedding_matrix_static():
    vocab = Vocabulary(["a", "b", "c"])
    rng = np.random.default_rng(0)
    table = StaticTable(100, {t: rng.normal(size=100).astype(np.float32) for t in "abc"})
    m = build_embedding_matrix(vocab, table)
    assert m.shape == (5, 100)
    assert not m[PAD_INDEX].any() and not m[OOV_INDEX].any()
    for i, t in enumerate(vocab.itos[2:], start=2):
        np.testing.assert_array_equal(m[i], table.vector(t))


def test_embedding_matrix_stacked_static_subword():
    vocab = Vocabulary(["a", "b", "ghost"])
    table = StaticTable(100, {"a": np.ones(100, np.float32), "b": np.ones(100, np.float32)})
    sub = SubwordProvider(dim=300, seed=0)
    m = build_embedding_matrix(vocab, stack_providers([table, sub]))
    assert m.shape == (5, 400)
    assert not m[PAD_INDEX].any()
    ghost = vocab["ghost"]
    assert not m[ghost, :100].any() and np.any(m[ghost, 100:] != 0)
    # OOV row: zero static slice, subword vector of the literal marker
    assert not m[OOV_INDEX, :100].any()
    np.testing.assert_array_equal(m[OOV_INDEX, 100:], sub.vector(OOV))


def test_embedding_matrix_contextual_slice_is_isolated_encoding():
    vocab = Vocabulary(["hope", "fear"])
    ctx = ContextualProvider(dim=768, seed=2)
    m = build_embedding_matrix(vocab, stack_providers([SubwordProvider(dim=300), ctx]))
    assert m.shape == (4, 1068)
    np.testing.assert_allclose(m[vocab["fear"], 300:], ctx.encode(["fear"])[0], rtol=1e-6)
    assert not m[OOV_INDEX, 300:].any()


@settings(max_examples=25, deadline=None)
@given(st.lists(st.text(alphabet="abcdef", min_size=1, max_size=6), min_size=1, max_size=15))
def test_matrix_rows_match_provider(tokens):
    vocab = build_vocabulary([tokens])
    provider = SubwordProvider(dim=6, buckets=500, seed=9)
    m = build_embedding_matrix(vocab, provider)
    assert m.shape == (len(vocab), 6)
    for i, t in enumerate(vocab.itos[2:], start=2):
        np.testing.assert_array_equal(m[i], provider.vector(t))
