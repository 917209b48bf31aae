import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from xlner.embeddings import CbowConfig, EmbeddingTable, context_weights, cosine, train_cbow_variant

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 4)), elements=finite))
def test_word2vec_round_trip(vectors):
    words = [f"w{i}" for i in range(len(vectors))]
    table = EmbeddingTable(words, vectors, unk=vectors[0] * 0.5)
    buf = io.StringIO()
    table.write(buf)
    buf.seek(0)
    back = EmbeddingTable.read(buf)
    # the UNK vector is not part of the written table
    assert back.words == words
    assert np.array_equal(back.vectors, vectors)


def test_read_recognises_unk_row():
    text = "3 2\n<unk> 0.5 0.5\nParis 1 0\nberlin 0 1\n"
    table = EmbeddingTable.read(io.StringIO(text))
    assert len(table) == 2
    assert np.array_equal(table.unk, [0.5, 0.5])
    assert np.array_equal(table["BERLIN"], [0.0, 1.0])
    assert np.array_equal(table["Rome"], [0.5, 0.5])
    assert table.get("Rome") is None


@pytest.mark.parametrize("text", ["2 2\na 1 2\n", "1 2\na 1\n", "bad\n"])
def test_malformed_files(text):
    with pytest.raises(ValueError):
        EmbeddingTable.read(io.StringIO(text))


def test_context_weights():
    assert np.allclose(context_weights(3), [1 / 3, 0.5, 1.0, 1.0, 0.5, 1 / 3])
    assert np.allclose(context_weights(2, decay=False), 1.0)


def toy_corpus(seed=0, n=600):
    """Two word classes that appear in disjoint contexts."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        if rng.random() < 0.5:
            out.append(["the", str(rng.choice(["cat", "dog", "cow"])), "eats", "grass"])
        else:
            out.append(["we", "visit", str(rng.choice(["rome", "oslo", "lima"])), "today"])
    return out


def test_training_is_deterministic_and_sized():
    cfg = CbowConfig(dim=17, epochs=1, min_count=1, seed=3)
    a = train_cbow_variant(toy_corpus(), cfg)
    b = train_cbow_variant(toy_corpus(), cfg)
    assert a.dim == 17
    assert a.words == b.words
    assert np.array_equal(a.vectors, b.vectors)


def test_shared_contexts_give_similar_vectors():
    table = train_cbow_variant(toy_corpus(), CbowConfig(dim=20, epochs=10, min_count=1, learning_rate=0.1))
    within = cosine(table["cat"], table["dog"])
    across = cosine(table["cat"], table["rome"])
    assert within > across


def test_min_count_cut():
    corpus = [["a", "b"], ["a", "c"]]
    table = train_cbow_variant(corpus, CbowConfig(dim=3, min_count=2))
    assert table.words == ["a"]
    with pytest.raises(ValueError):
        train_cbow_variant(corpus, CbowConfig(dim=3, min_count=5))


def test_table_validation():
    with pytest.raises(ValueError):
        EmbeddingTable(["a", "a"], np.zeros((2, 2)))
    with pytest.raises(ValueError):
        EmbeddingTable(["a"], np.array([[np.nan]]))
    with pytest.raises(ValueError):
        EmbeddingTable(["a"], np.zeros((1, 2)), unk=np.zeros(3))


def test_transformed_maps_every_row():
    table = EmbeddingTable(["a", "b"], np.array([[1.0, 0.0], [0.0, 2.0]]))
    M = np.array([[0.0, 1.0], [1.0, 0.0]])
    out = table.transformed(M)
    assert np.array_equal(out["b"], [2.0, 0.0])
    assert np.array_equal(out.unk, M @ table.unk)
