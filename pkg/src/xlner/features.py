"""Sparse binary features for the CRF and MEMM taggers."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np
from scipy import sparse

BOS = "<BOS>"
_PAD_LEFT = "<s>"
_PAD_RIGHT = "</s>"


@dataclass(frozen=True)
class FeatureTemplateConfig:
    window: int = 2
    affix_length: int = 4
    shapes: bool = True
    # number of previous tags the features see; 0 for the CRF, which
    # scores label transitions separately
    order: int = 1

    def __post_init__(self):
        if self.window < 0:
            raise ValueError("window radius must be >= 0")
        if self.affix_length < 1:
            raise ValueError("affix length must be >= 1")
        if self.order < 0:
            raise ValueError("order must be >= 0")

    def max_features(self) -> int:
        """Upper bound on the number of features fired at one token."""
        n = 2  # bias, exact focus word
        n += 2 * self.window + 1  # lowercased window unigrams
        n += 2 * self.window  # window bigrams
        n += 3 if self.shapes else 0
        n += 2 * self.affix_length
        n += self.order + (1 if self.order > 1 else 0)
        return n


class FeatureAlphabet:
    """Feature string <-> contiguous integer id."""

    def __init__(self, features: Iterable[str] = ()):
        self._ids: dict[str, int] = {}
        self._names: list[str] = []
        self.frozen = False
        for f in features:
            self.add(f)

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, feature: str) -> bool:
        return feature in self._ids

    def add(self, feature: str) -> int:
        fid = self._ids.get(feature)
        if fid is None:
            if self.frozen:
                return -1
            fid = len(self._names)
            self._ids[feature] = fid
            self._names.append(feature)
        return fid

    def freeze(self) -> "FeatureAlphabet":
        self.frozen = True
        return self

    def lookup(self, features: Iterable[str]) -> np.ndarray:
        """Sorted unique ids; unknown features are added, or dropped once frozen."""
        ids = {self.add(f) for f in features}
        ids.discard(-1)
        return np.array(sorted(ids), dtype=np.int64)

    def name(self, fid: int) -> str:
        return self._names[fid]

    @property
    def names(self) -> list[str]:
        return list(self._names)

    def save(self, stream: TextIO) -> None:
        for i, name in enumerate(self._names):
            stream.write(f"{i}\t{name}\n")

    @classmethod
    def load(cls, stream: TextIO) -> "FeatureAlphabet":
        alphabet = cls()
        for lineno, line in enumerate(stream, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            fid, _, name = line.partition("\t")
            if int(fid) != len(alphabet):
                raise ValueError(f"line {lineno}: non-contiguous feature id {fid}")
            alphabet.add(name)
        return alphabet.freeze()


def word_shape(word: str) -> str:
    out = []
    for ch in word:
        if ch.isupper():
            c = "A"
        elif ch.islower():
            c = "a"
        elif ch.isdigit():
            c = "0"
        else:
            c = "-"
        if not out or out[-1] != c:
            out.append(c)
    return "".join(out)


def _word_at(tokens: Sequence[str], i: int) -> str:
    if i < 0:
        return _PAD_LEFT
    if i >= len(tokens):
        return _PAD_RIGHT
    return tokens[i]


def observation_features(tokens: Sequence[str], position: int, config: FeatureTemplateConfig) -> list[str]:
    """Features that depend only on the words, not on any tag."""
    r = config.window
    word = tokens[position]
    feats = ["bias", "w=" + word]
    lowered = [_word_at(tokens, position + k).lower() for k in range(-r, r + 1)]
    for k, w in zip(range(-r, r + 1), lowered):
        feats.append(f"w[{k}]={w}")
    for k in range(-r, r):
        feats.append(f"b[{k}]={lowered[k + r]}|{lowered[k + r + 1]}")
    if config.shapes:
        for k in (-1, 0, 1):
            w = _word_at(tokens, position + k)
            shape = w if w in (_PAD_LEFT, _PAD_RIGHT) else word_shape(w)
            feats.append(f"sh[{k}]={shape}")
    for j in range(1, min(config.affix_length, len(word)) + 1):
        feats.append(f"p{j}={word[:j]}")
        feats.append(f"s{j}={word[-j:]}")
    return feats


def history_features(prev_tags: Sequence[str]) -> list[str]:
    """prev_tags[0] is the tag immediately to the left."""
    feats = [f"t[-{k + 1}]={t}" for k, t in enumerate(prev_tags)]
    if len(prev_tags) > 1:
        feats.append("tt=" + "|".join(prev_tags))
    return feats


def pad_history(tags: Sequence[str], position: int, order: int) -> tuple[str, ...]:
    """The ``order`` tags left of ``position``, nearest first, BOS-padded."""
    return tuple(tags[position - k] if position - k >= 0 else BOS for k in range(1, order + 1))


def extract_features(
    sentence: Sequence[str],
    position: int,
    prev_tags: Sequence[str],
    config: FeatureTemplateConfig,
    alphabet: FeatureAlphabet,
) -> np.ndarray:
    """Feature ids firing at ``position``; every value is implicitly 1.0."""
    if not 0 <= position < len(sentence):
        raise IndexError(f"position {position} outside sentence of length {len(sentence)}")
    if len(prev_tags) != config.order:
        raise ValueError(f"expected {config.order} previous tags, got {len(prev_tags)}")
    feats = observation_features(sentence, position, config) + history_features(prev_tags)
    return alphabet.lookup(feats)


def observation_matrix(
    tokens: Sequence[str], config: FeatureTemplateConfig, alphabet: FeatureAlphabet, width: int | None = None
) -> sparse.csr_matrix:
    """CSR matrix (tokens x width) of observation features.

    Grows the alphabet unless it is frozen. ``width`` defaults to the
    alphabet size after encoding.
    """
    rows = [alphabet.lookup(observation_features(tokens, i, config)) for i in range(len(tokens))]
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows])
    indices = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    data = np.ones(len(indices))
    return sparse.csr_matrix((data, indices, indptr), shape=(len(rows), width or len(alphabet)))


def with_width(matrix: sparse.csr_matrix, width: int) -> sparse.csr_matrix:
    return sparse.csr_matrix((matrix.data, matrix.indices, matrix.indptr), shape=(matrix.shape[0], width))
