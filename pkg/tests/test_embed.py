"""Subword embedding table: n-grams, OOV lookup, persistence, training."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from looptune.clexer import tokenize
from looptune.embed import (EmbeddingFormatError, EmbeddingTable, char_ngrams,
                            train_embeddings)


class TestCharNgrams:
    def test_short_word(self):
        # "<ab>" has length 4; the full bracketed form is excluded
        assert char_ngrams("ab") == ["<ab", "ab>"]

    def test_known_decomposition(self):
        grams = char_ngrams("cnt")
        assert "<cn" in grams and "nt>" in grams and "cnt" in grams
        assert "<cnt>" not in grams

    def test_lengths_bounded(self):
        for g in char_ngrams("counter"):
            assert 3 <= len(g) <= 6

    @given(st.text(alphabet="abcdefg_", min_size=1, max_size=12))
    def test_never_contains_whole_word(self, word):
        assert f"<{word}>" not in char_ngrams(word)


class TestLookup:
    def test_in_vocab(self):
        t = EmbeddingTable(2, vocab={"x": np.array([1.0, 2.0])})
        assert list(t.lookup("x")) == [1.0, 2.0]

    def test_oov_mean_of_known_ngrams(self):
        t = EmbeddingTable(1, ngrams={"<ab": np.array([2.0]),
                                      "ab>": np.array([4.0])})
        assert t.lookup("ab") == pytest.approx([3.0])

    def test_oov_no_known_pieces_is_zero(self):
        t = EmbeddingTable(3)
        assert list(t.lookup("zzz")) == [0.0, 0.0, 0.0]


class TestPersistence:
    def test_round_trip(self, tmp_path):
        t = EmbeddingTable(2,
                           vocab={"a": np.array([1.0, -1.0]),
                                  "b": np.array([0.5, 0.25])},
                           ngrams={"<a>": np.array([3.0, 4.0])})
        path = tmp_path / "emb.bin"
        t.save(path)
        back = EmbeddingTable.load(path)
        assert back.dim == 2
        assert set(back.vocab) == {"a", "b"} and set(back.ngrams) == {"<a>"}
        for k in t.vocab:
            assert np.array_equal(back.vocab[k], t.vocab[k])
        assert np.array_equal(back.ngrams["<a>"], t.ngrams["<a>"])

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOTMAGIC" + b"\0" * 12)
        with pytest.raises(EmbeddingFormatError):
            EmbeddingTable.load(path)

    def test_truncated(self, tmp_path):
        t = EmbeddingTable(2, vocab={"a": np.array([1.0, 2.0])})
        path = tmp_path / "emb.bin"
        t.save(path)
        data = path.read_bytes()
        path.write_bytes(data[:-4])
        with pytest.raises(EmbeddingFormatError):
            EmbeddingTable.load(path)


CORPUS_SRCS = [
    "for (count1 = 0; count1 < 9; count1++) { A[count1] = count1; }",
    "for (count2 = 0; count2 < 9; count2++) { B[count2] = count2; }",
    "for (i = 0; i < 9; i++) { C[i] = A[i] + B[i]; }",
]


@pytest.fixture(scope="module")
def table():
    corpus = [tokenize(s, f"l{k}") for k, s in enumerate(CORPUS_SRCS)]
    return train_embeddings(corpus, dim=16, epochs=30, seed=0)


def cosine(a, b):
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


class TestTraining:
    def test_vocab_covers_corpus(self, table):
        for w in ("count1", "count2", "for", "A", "0"):
            assert w in table.vocab

    def test_deterministic(self):
        corpus = [tokenize(CORPUS_SRCS[0], "l0")]
        t1 = train_embeddings(corpus, dim=8, epochs=5, seed=3)
        t2 = train_embeddings(corpus, dim=8, epochs=5, seed=3)
        for w in t1.vocab:
            assert np.array_equal(t1.vocab[w], t2.vocab[w])

    def test_subword_similarity(self, table):
        """Identifiers sharing almost all characters (count1/count2) sit far
        closer than unrelated vocabulary, because they share n-gram atoms."""
        near = cosine(table.lookup("count1"), table.lookup("count2"))
        far = cosine(table.lookup("count1"), table.lookup("for"))
        assert near > far
        assert near > 0.5

    def test_oov_resembles_subword_relatives(self, table):
        """A never-seen identifier built from the same pieces lands near its
        in-vocabulary relatives."""
        oov = table.lookup("count3")
        assert np.any(oov)
        assert cosine(oov, table.lookup("count1")) > \
            cosine(table.lookup("i"), table.lookup("count1"))

    def test_empty_corpus(self):
        t = train_embeddings([], dim=4)
        assert t.vocab == {} and list(t.lookup("x")) == [0.0] * 4
