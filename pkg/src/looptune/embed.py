"""Subword token embeddings: skip-gram with negative sampling over token
values, with character n-gram (3..6) vectors so out-of-vocabulary words can
be reconstructed from their pieces. Deterministic under a fixed seed.

The table persists to a small binary format: header (magic, dim, vocab
count, n-gram count), then records of length-prefixed UTF-8 text followed by
``dim`` little-endian float64 values.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .clexer import TokenSeq

MAGIC = b"LTEMB001"
MIN_NGRAM = 3
MAX_NGRAM = 6


class EmbeddingFormatError(Exception):
    pass


def char_ngrams(word: str, min_n: int = MIN_NGRAM, max_n: int = MAX_NGRAM) -> list[str]:
    """Character n-grams of '<word>' (with boundary markers), lengths 3..6,
    excluding the fully bracketed word itself."""
    marked = f"<{word}>"
    grams = []
    for n in range(min_n, max_n + 1):
        for i in range(len(marked) - n + 1):
            g = marked[i:i + n]
            if g != marked:
                grams.append(g)
    return grams


@dataclass
class EmbeddingTable:
    dim: int
    vocab: dict[str, np.ndarray] = field(default_factory=dict)
    ngrams: dict[str, np.ndarray] = field(default_factory=dict)

    def lookup(self, word: str) -> np.ndarray:
        """In-vocabulary: the stored vector. Otherwise the mean of the
        word's known n-gram vectors (zero vector if none are known)."""
        vec = self.vocab.get(word)
        if vec is not None:
            return vec
        parts = [self.ngrams[g] for g in char_ngrams(word) if g in self.ngrams]
        if not parts:
            return np.zeros(self.dim)
        return np.mean(parts, axis=0)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(struct.pack("<8sIII", MAGIC, self.dim,
                                 len(self.vocab), len(self.ngrams)))
            for table in (self.vocab, self.ngrams):
                for text in sorted(table):
                    data = text.encode("utf-8")
                    fh.write(struct.pack("<I", len(data)))
                    fh.write(data)
                    fh.write(np.asarray(table[text], dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "EmbeddingTable":
        with open(path, "rb") as fh:
            head = fh.read(struct.calcsize("<8sIII"))
            if len(head) != struct.calcsize("<8sIII"):
                raise EmbeddingFormatError("truncated header")
            magic, dim, n_vocab, n_grams = struct.unpack("<8sIII", head)
            if magic != MAGIC:
                raise EmbeddingFormatError(f"bad magic {magic!r}")
            table = cls(dim)
            for count, target in ((n_vocab, table.vocab), (n_grams, table.ngrams)):
                for _ in range(count):
                    (length,) = struct.unpack("<I", fh.read(4))
                    text = fh.read(length).decode("utf-8")
                    raw = fh.read(8 * dim)
                    if len(raw) != 8 * dim:
                        raise EmbeddingFormatError("truncated record")
                    target[text] = np.frombuffer(raw, dtype="<f8").copy()
        return table


def _sigmoid(x: float) -> float:
    if x > 30:
        return 1.0
    if x < -30:
        return 0.0
    return 1.0 / (1.0 + np.exp(-x))


def train_embeddings(corpus: list[TokenSeq], dim: int = 100, epochs: int = 100,
                     window: int = 5, negatives: int = 5, lr: float = 0.05,
                     seed: int = 0) -> EmbeddingTable:
    """Skip-gram with negative sampling over token-value sequences.

    Each word is represented by the mean of its own atom vector and its
    character n-gram vectors, so related identifiers (count1/count2) share
    most of their representation.
    """
    sentences = [[tok.text for tok in seq] for seq in corpus]
    counts: dict[str, int] = {}
    for sent in sentences:
        for w in sent:
            counts[w] = counts.get(w, 0) + 1
    words = sorted(counts)
    if not words:
        return EmbeddingTable(dim)
    word_idx = {w: i for i, w in enumerate(words)}

    gram_list: list[str] = []
    gram_idx: dict[str, int] = {}
    components: list[np.ndarray] = []
    for w in words:
        comp = [word_idx[w]]
        for g in char_ngrams(w):
            if g not in gram_idx:
                gram_idx[g] = len(words) + len(gram_list)
                gram_list.append(g)
            comp.append(gram_idx[g])
        components.append(np.array(comp, dtype=np.int64))

    rng = np.random.default_rng(seed)
    n_atoms = len(words) + len(gram_list)
    atom_vecs = (rng.random((n_atoms, dim)) - 0.5) / dim
    out_vecs = np.zeros((len(words), dim))

    freq = np.array([counts[w] for w in words], dtype=np.float64) ** 0.75
    neg_prob = freq / freq.sum()

    for _ in range(epochs):
        for sent in sentences:
            idxs = [word_idx[w] for w in sent]
            for pos, center in enumerate(idxs):
                b = int(rng.integers(1, window + 1))
                comp = components[center]
                hidden = atom_vecs[comp].mean(axis=0)
                for off in range(-b, b + 1):
                    ctx_pos = pos + off
                    if off == 0 or not 0 <= ctx_pos < len(idxs):
                        continue
                    targets = [(idxs[ctx_pos], 1.0)]
                    negs = rng.choice(len(words), size=negatives, p=neg_prob)
                    targets += [(int(n), 0.0) for n in negs if n != idxs[ctx_pos]]
                    grad_hidden = np.zeros(dim)
                    for tgt, label in targets:
                        score = _sigmoid(float(hidden @ out_vecs[tgt]))
                        g = lr * (label - score)
                        grad_hidden += g * out_vecs[tgt]
                        out_vecs[tgt] += g * hidden
                    atom_vecs[comp] += grad_hidden / len(comp)
    table = EmbeddingTable(dim)
    for w, comp in zip(words, components):
        table.vocab[w] = atom_vecs[comp].mean(axis=0).copy()
    for g, i in gram_idx.items():
        table.ngrams[g] = atom_vecs[i].copy()
    return table
