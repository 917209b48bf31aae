"""Word embedding tables, word2vec text I/O and the concatenated CBOW trainer."""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

log = logging.getLogger(__name__)


class EmbeddingTable:
    """Word -> vector lookup with an UNK vector.

    Lookup tries the exact form first, then the lowercased form.
    """

    def __init__(self, words: Sequence[str], vectors: np.ndarray, unk: np.ndarray | None = None):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(words):
            raise ValueError(f"{len(words)} words but vectors have shape {vectors.shape}")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("non-finite embedding entries")
        self.words = list(words)
        self.vectors = vectors
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("duplicate words in embedding table")
        if unk is None:
            unk = vectors.mean(axis=0) if len(words) else np.zeros(vectors.shape[1])
        self.unk = np.asarray(unk, dtype=np.float64)
        if self.unk.shape != (self.dim,):
            raise ValueError("UNK vector has the wrong dimension")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return self.find(word) is not None

    def find(self, word: str) -> int | None:
        i = self.index.get(word)
        if i is None:
            i = self.index.get(word.lower())
        return i

    def get(self, word: str) -> np.ndarray | None:
        i = self.find(word)
        return None if i is None else self.vectors[i]

    def __getitem__(self, word: str) -> np.ndarray:
        v = self.get(word)
        return self.unk if v is None else v

    def transformed(self, matrix: np.ndarray, words: Sequence[str] | None = None) -> "EmbeddingTable":
        """Apply a linear map to every vector (rows become ``matrix @ v``)."""
        return EmbeddingTable(words or self.words, self.vectors @ matrix.T, matrix @ self.unk)

    def write(self, stream: TextIO) -> None:
        stream.write(f"{len(self.words)} {self.dim}\n")
        for w, v in zip(self.words, self.vectors):
            stream.write(w + " " + " ".join(repr(float(x)) for x in v) + "\n")

    @classmethod
    def read(cls, stream: TextIO, unk_token: str = "<unk>") -> "EmbeddingTable":
        header = stream.readline().split()
        if len(header) != 2:
            raise ValueError("word2vec header must be 'count dim'")
        count, dim = int(header[0]), int(header[1])
        words, rows = [], []
        unk = None
        for lineno, line in enumerate(stream, 2):
            parts = line.rstrip("\r\n").split(" ")
            if not parts or parts == [""]:
                continue
            if len(parts) != dim + 1:
                raise ValueError(f"line {lineno}: expected {dim} values, found {len(parts) - 1}")
            vec = np.array([float(x) for x in parts[1:]])
            if parts[0] == unk_token:
                unk = vec
            else:
                words.append(parts[0])
                rows.append(vec)
        if len(words) + (unk is not None) != count:
            raise ValueError(f"header announces {count} vectors, found {len(words) + (unk is not None)}")
        return cls(words, np.array(rows).reshape(len(rows), dim), unk)


@dataclass(frozen=True)
class CbowConfig:
    dim: int = 50
    window: int = 2
    epochs: int = 5
    negative: int = 5
    learning_rate: float = 0.05
    min_count: int = 5
    batch_size: int = 64
    distance_decay: bool = True
    concatenate: bool = True
    seed: int = 0

    def __post_init__(self):
        for name in ("dim", "window", "epochs", "negative", "min_count", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")


def context_weights(window: int, decay: bool = True) -> np.ndarray:
    """Weight per context slot, slots ordered -window..-1, 1..window."""
    offsets = [k for k in range(-window, window + 1) if k != 0]
    return np.array([1.0 / abs(k) if decay else 1.0 for k in offsets])


def train_cbow_variant(corpus: Iterable[Sequence[str]], config: CbowConfig = CbowConfig()) -> EmbeddingTable:
    """CBOW with negative sampling whose hidden layer concatenates the
    distance-weighted context vectors instead of averaging them.

    Deterministic for a fixed seed.
    """
    corpus = [list(s) for s in corpus]
    counts = Counter(w for s in corpus for w in s)
    vocab = sorted((w for w, c in counts.items() if c >= config.min_count), key=lambda w: (-counts[w], w))
    if not vocab:
        raise ValueError("empty vocabulary after min-count cut")
    index = {w: i for i, w in enumerate(vocab)}
    V, d, R = len(vocab), config.dim, config.window
    slots = 2 * R
    rng = np.random.default_rng(config.seed)

    ids = [np.array([index.get(w, -1) for w in s], dtype=np.int64) for s in corpus]
    # (target, context slots) for every in-vocabulary position
    targets, contexts = [], []
    for sent in ids:
        padded = np.concatenate([np.full(R, -1), sent, np.full(R, -1)])
        for i, t in enumerate(sent):
            if t < 0:
                continue
            ctx = np.concatenate([padded[i:i + R], padded[i + R + 1:i + 2 * R + 1]])
            targets.append(t)
            contexts.append(ctx)
    if not targets:
        raise ValueError("no training positions")
    targets = np.array(targets)
    contexts = np.array(contexts).reshape(len(targets), slots)

    freq = np.array([counts[w] for w in vocab], dtype=np.float64) ** 0.75
    noise = freq / freq.sum()
    weights = context_weights(R, config.distance_decay)

    W_in = rng.uniform(-0.5 / d, 0.5 / d, size=(V, d))
    hidden_dim = slots * d if config.concatenate else d
    W_out = np.zeros((V, hidden_dim))

    total_steps = config.epochs * int(np.ceil(len(targets) / config.batch_size))
    step = 0
    for epoch in range(config.epochs):
        order = rng.permutation(len(targets))
        for start in range(0, len(order), config.batch_size):
            rate = config.learning_rate * max(1e-4, 1.0 - step / total_steps)
            step += 1
            b = order[start:start + config.batch_size]
            ctx = contexts[b]
            present = ctx >= 0
            scale = weights[None, :] * present  # (B, slots)
            vecs = W_in[np.where(present, ctx, 0)] * scale[:, :, None]  # (B, slots, d)
            if config.concatenate:
                h = vecs.reshape(len(b), hidden_dim)
            else:
                h = vecs.sum(axis=1) / np.maximum(scale.sum(axis=1, keepdims=True), 1e-12)
            outs = np.concatenate([targets[b][:, None], rng.choice(V, size=(len(b), config.negative), p=noise)], axis=1)
            labels = np.zeros(outs.shape)
            labels[:, 0] = 1.0
            out_vecs = W_out[outs]  # (B, 1+k, H)
            scores = np.einsum("bh,bkh->bk", h, out_vecs)
            g = (labels - 1.0 / (1.0 + np.exp(-scores))) * rate
            dh = np.einsum("bk,bkh->bh", g, out_vecs)
            np.add.at(W_out, outs, g[:, :, None] * h[:, None, :])
            if config.concatenate:
                dvec = dh.reshape(len(b), slots, d) * scale[:, :, None]
            else:
                norm = np.maximum(scale.sum(axis=1, keepdims=True), 1e-12)
                dvec = (dh / norm)[:, None, :] * scale[:, :, None]
            np.add.at(W_in, ctx[present], dvec[present])
        log.debug("cbow epoch %d done", epoch + 1)
    return EmbeddingTable(vocab, W_in)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b) + 1e-300))
