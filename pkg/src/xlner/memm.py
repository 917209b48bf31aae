"""Order-o maximum entropy Markov model.

Each token is a multinomial logistic regression over labels, conditioned
on the words and on the previous ``o`` labels. Training uses gold
histories; decoding is beam search over label sequences.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.special import log_softmax

from . import serialization
from .corpus import ConfidenceTaggedSentence, LabeledSentence, TagSet
from .decoding import BOS_INDEX, beam_search, transition_mask
from .features import (
    BOS,
    FeatureAlphabet,
    FeatureTemplateConfig,
    history_features,
    observation_features,
    observation_matrix,
    pad_history,
)
from .optim import TrainConfig, TrainTrace, maximize

log = logging.getLogger(__name__)


@dataclass
class OrderOMEMMModel:
    tagset: TagSet
    alphabet: FeatureAlphabet
    weights: np.ndarray  # (|alphabet|, L)
    features: FeatureTemplateConfig = FeatureTemplateConfig(order=2)
    l2: float = 1e-3
    beam: int = 5
    trace: TrainTrace | None = field(default=None, compare=False, repr=False)
    _hist_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("MEMM order must be >= 1")
        if self.beam < 1:
            raise ValueError("beam width must be >= 1")
        if self.weights.shape != (len(self.alphabet), len(self.tagset)):
            raise ValueError("weight shape does not match alphabet and tag set")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("non-finite weights")

    @property
    def order(self) -> int:
        return self.features.order

    def history_scores(self, history: tuple[int, ...]) -> np.ndarray:
        """Score contribution of a label-index history (nearest first)."""
        cached = self._hist_cache.get(history)
        if cached is None:
            labels = self.tagset.labels
            names = [labels[h] if h != BOS_INDEX else BOS for h in history]
            ids = self.alphabet.lookup(history_features(names))
            cached = self.weights[ids].sum(axis=0)
            self._hist_cache[history] = cached
        return cached

    def observation_scores(self, tokens: Sequence[str]) -> np.ndarray:
        X = observation_matrix(tokens, self.features, self.alphabet, width=len(self.alphabet))
        return np.asarray(X @ self.weights)

    def distribution(self, tokens: Sequence[str], position: int, history: tuple[int, ...]) -> np.ndarray:
        """p(l_i | previous labels, x) as a probability vector."""
        obs = self.observation_scores(tokens)[position]
        return np.exp(log_softmax(obs + self.history_scores(history)))

    def sequence_logprob(self, tokens: Sequence[str], labels: Sequence[int]) -> float:
        obs = self.observation_scores(tokens)
        total = 0.0
        for i, lab in enumerate(labels):
            hist = tuple(labels[i - k] if i - k >= 0 else BOS_INDEX for k in range(1, self.order + 1))
            total += float(log_softmax(obs[i] + self.history_scores(hist))[lab])
        return total

    def save(self, path: str | Path) -> None:
        meta = {
            "entity_types": list(self.tagset.entity_types),
            "features": self.alphabet.names,
            "template": asdict(self.features),
            "l2": self.l2,
            "beam": self.beam,
        }
        serialization.dump(path, "memm", meta, {"weights": self.weights})

    @classmethod
    def load(cls, path: str | Path) -> "OrderOMEMMModel":
        header, arrays = serialization.load(path, "memm")
        meta = header["meta"]
        return cls(
            TagSet(tuple(meta["entity_types"])),
            FeatureAlphabet(meta["features"]).freeze(),
            arrays["weights"],
            FeatureTemplateConfig(**meta["template"]),
            meta["l2"],
            meta["beam"],
        )


def memm_decode(
    model: OrderOMEMMModel, tokens: Sequence[str], beam: int | None = None, constrain: bool = True
) -> ConfidenceTaggedSentence:
    """Beam search for the most probable label sequence.

    Confidence of a token is p(emitted label | emitted history, x).
    """
    tokens = tuple(tokens)
    if not tokens:
        return ConfidenceTaggedSentence((), (), ())
    obs = model.observation_scores(tokens)

    def step(i, histories):
        hist = np.stack([model.history_scores(h) for h in histories])
        return log_softmax(obs[i][None, :] + hist, axis=1)

    mask = transition_mask(model.tagset) if constrain else None
    path, logps = beam_search(len(tokens), len(model.tagset), model.order, step, model.beam if beam is None else beam, mask)
    labels = model.tagset.labels
    confs = tuple(float(np.clip(np.exp(lp), 0.0, 1.0)) for lp in logps)
    return ConfidenceTaggedSentence(tokens, tuple(labels[l] for l in path), confs)


# -- training --------------------------------------------------------------

class MEMMObjective:
    """Token-level log-likelihood; examples are individual tokens."""

    def __init__(self, X: sparse.csr_matrix, y: np.ndarray, num_labels: int):
        self.X = X
        self.y = y
        self.L = num_labels

    def __call__(self, w: np.ndarray, batch: np.ndarray) -> tuple[float, np.ndarray]:
        W = w.reshape(-1, self.L)
        Xb = self.X[batch]
        y = self.y[batch]
        logp = log_softmax(np.asarray(Xb @ W), axis=1)
        resid = -np.exp(logp)
        resid[np.arange(len(y)), y] += 1.0
        value = float(logp[np.arange(len(y)), y].sum())
        return value, np.asarray(Xb.T @ resid).ravel()


def encode_tokens(data: Sequence[LabeledSentence], tagset: TagSet, features: FeatureTemplateConfig, alphabet: FeatureAlphabet):
    """One sparse row per token with gold-history features."""
    rows, labels = [], []
    for s in data:
        for i in range(len(s)):
            feats = observation_features(s.tokens, i, features)
            feats += history_features(pad_history(s.tags, i, features.order))
            rows.append(alphabet.lookup(feats))
            labels.append(tagset.index(s.tags[i]))
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows])
    indices = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    X = sparse.csr_matrix((np.ones(len(indices)), indices, indptr), shape=(len(rows), len(alphabet)))
    return X, np.array(labels, dtype=np.int64)


def memm_train(
    data: Sequence[LabeledSentence],
    config: TrainConfig = TrainConfig(batch_size=256),
    order: int = 2,
    features: FeatureTemplateConfig | None = None,
    tagset: TagSet | None = None,
    beam: int = 5,
) -> OrderOMEMMModel:
    data = [s for s in data if len(s)]
    if not data:
        raise ValueError("cannot train a MEMM on an empty corpus")
    features = replace(features or FeatureTemplateConfig(), order=order)
    tagset = tagset or TagSet.from_sentences(data)
    alphabet = FeatureAlphabet()
    X, y = encode_tokens(data, tagset, features, alphabet)
    alphabet.freeze()
    L = len(tagset)
    w, trace = maximize(MEMMObjective(X, y, L), np.zeros(len(alphabet) * L), len(y), config)
    log.info("MEMM order %d: %d tokens, %d features", order, len(y), len(alphabet))
    model = OrderOMEMMModel(tagset, alphabet, w.reshape(-1, L), features, config.l2, beam)
    model.trace = trace
    return model
