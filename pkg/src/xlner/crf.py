"""First-order linear-chain CRF.

Weights are an emission matrix (features x labels) and a label-to-label
transition matrix. Training maximizes the L2-regularized conditional
log-likelihood; decoding is Viterbi with posterior-marginal confidences.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse

from . import serialization
from .corpus import ConfidenceTaggedSentence, LabeledSentence, TagSet
from .decoding import forward_backward, transition_mask, viterbi
from .features import FeatureAlphabet, FeatureTemplateConfig, observation_matrix, with_width
from .optim import TrainConfig, TrainTrace, maximize

log = logging.getLogger(__name__)

DEFAULT_FEATURES = FeatureTemplateConfig(order=0)


@dataclass
class LinearChainCRFModel:
    tagset: TagSet
    alphabet: FeatureAlphabet
    emission: np.ndarray  # (|alphabet|, L)
    transition: np.ndarray  # (L, L), transition[prev, cur]
    features: FeatureTemplateConfig = DEFAULT_FEATURES
    l2: float = 1e-3
    trace: TrainTrace | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        L = len(self.tagset)
        if self.emission.shape != (len(self.alphabet), L) or self.transition.shape != (L, L):
            raise ValueError("weight shapes do not match alphabet and tag set")
        if self.features.order != 0:
            raise ValueError("CRF features must not include tag history")
        if not (np.all(np.isfinite(self.emission)) and np.all(np.isfinite(self.transition))):
            raise ValueError("non-finite weights")

    @property
    def weights(self) -> np.ndarray:
        return np.concatenate([self.emission.ravel(), self.transition.ravel()])

    def with_weights(self, w: np.ndarray) -> "LinearChainCRFModel":
        F, L = self.emission.shape
        return replace(self, emission=w[:F * L].reshape(F, L).copy(), transition=w[F * L:].reshape(L, L).copy())

    def emissions(self, tokens: Sequence[str]) -> np.ndarray:
        X = observation_matrix(tokens, self.features, self.alphabet, width=len(self.alphabet))
        return np.asarray(X @ self.emission)

    def sequence_score(self, tokens: Sequence[str], labels: Sequence[int]) -> float:
        E = self.emissions(tokens)
        s = sum(E[i, l] for i, l in enumerate(labels))
        s += sum(self.transition[a, b] for a, b in zip(labels, labels[1:]))
        return float(s)

    def save(self, path: str | Path) -> None:
        meta = {
            "entity_types": list(self.tagset.entity_types),
            "features": self.alphabet.names,
            "template": asdict(self.features),
            "l2": self.l2,
        }
        serialization.dump(path, "crf", meta, {"emission": self.emission, "transition": self.transition})

    @classmethod
    def load(cls, path: str | Path) -> "LinearChainCRFModel":
        header, arrays = serialization.load(path, "crf")
        meta = header["meta"]
        return cls(
            TagSet(tuple(meta["entity_types"])),
            FeatureAlphabet(meta["features"]).freeze(),
            arrays["emission"],
            arrays["transition"],
            FeatureTemplateConfig(**meta["template"]),
            meta["l2"],
        )


@dataclass
class ChainTables:
    log_z: float
    alpha: np.ndarray
    beta: np.ndarray
    emissions: np.ndarray
    transition: np.ndarray

    def marginals(self) -> np.ndarray:
        return np.exp(self.alpha + self.beta - self.log_z)

    def pair_marginals(self) -> np.ndarray:
        """(n-1, L, L) array of p(l_{i-1}=a, l_i=b | x)."""
        a = self.alpha[:-1, :, None]
        b = (self.emissions[1:] + self.beta[1:])[:, None, :]
        return np.exp(a + self.transition[None] + b - self.log_z)


def crf_log_partition(model: LinearChainCRFModel, tokens: Sequence[str]) -> ChainTables:
    E = model.emissions(tokens)
    log_z, alpha, beta = forward_backward(E, model.transition)
    return ChainTables(log_z, alpha, beta, E, model.transition)


def crf_viterbi(model: LinearChainCRFModel, tokens: Sequence[str], constrain: bool = True) -> list[int]:
    mask = transition_mask(model.tagset) if constrain else None
    path, _ = viterbi(model.emissions(tokens), model.transition, mask)
    return path


def crf_decode(model: LinearChainCRFModel, tokens: Sequence[str], constrain: bool = True) -> ConfidenceTaggedSentence:
    """Viterbi labels; each token's confidence is the posterior marginal of its label."""
    tokens = tuple(tokens)
    if not tokens:
        return ConfidenceTaggedSentence((), (), ())
    tables = crf_log_partition(model, tokens)
    mask = transition_mask(model.tagset) if constrain else None
    path, _ = viterbi(tables.emissions, model.transition, mask)
    marg = tables.marginals()
    labels = model.tagset.labels
    confs = [float(np.clip(marg[i, l], 0.0, 1.0)) for i, l in enumerate(path)]
    return ConfidenceTaggedSentence(tokens, tuple(labels[l] for l in path), tuple(confs))


# -- training --------------------------------------------------------------

class CRFObjective:
    """Log-likelihood and gradient over encoded sentences, for ``optim.maximize``."""

    def __init__(self, matrices: list[sparse.csr_matrix], labels: list[np.ndarray], num_features: int, num_labels: int):
        self.matrices = matrices
        self.labels = labels
        self.F = num_features
        self.L = num_labels

    def __call__(self, w: np.ndarray, batch: np.ndarray) -> tuple[float, np.ndarray]:
        F, L = self.F, self.L
        W = w[:F * L].reshape(F, L)
        T = w[F * L:].reshape(L, L)
        X = sparse.vstack([self.matrices[k] for k in batch], format="csr")
        E_all = np.asarray(X @ W)
        resid = np.zeros_like(E_all)  # observed one-hot minus node marginals
        gT = np.zeros((L, L))
        total = 0.0
        offset = 0
        for k in batch:
            y = self.labels[k]
            n = len(y)
            E = E_all[offset:offset + n]
            log_z, alpha, beta = forward_backward(E, T)
            gold = E[np.arange(n), y].sum() + T[y[:-1], y[1:]].sum()
            total += gold - log_z
            r = resid[offset:offset + n]
            r -= np.exp(alpha + beta - log_z)
            r[np.arange(n), y] += 1.0
            if n > 1:
                pair = np.exp(alpha[:-1, :, None] + T[None] + (E[1:] + beta[1:])[:, None, :] - log_z)
                gT -= pair.sum(axis=0)
                np.add.at(gT, (y[:-1], y[1:]), 1.0)
            offset += n
        gW = np.asarray(X.T @ resid)
        return total, np.concatenate([gW.ravel(), gT.ravel()])


def encode_corpus(data: Sequence[LabeledSentence], tagset: TagSet, features: FeatureTemplateConfig, alphabet: FeatureAlphabet):
    matrices = [observation_matrix(s.tokens, features, alphabet) for s in data]
    width = len(alphabet)
    matrices = [with_width(m, width) for m in matrices]
    labels = [np.array([tagset.index(t) for t in s.tags], dtype=np.int64) for s in data]
    return matrices, labels


def crf_train(
    data: Sequence[LabeledSentence],
    config: TrainConfig = TrainConfig(),
    features: FeatureTemplateConfig = DEFAULT_FEATURES,
    tagset: TagSet | None = None,
) -> LinearChainCRFModel:
    data = [s for s in data if len(s)]
    if not data:
        raise ValueError("cannot train a CRF on an empty corpus")
    tagset = tagset or TagSet.from_sentences(data)
    alphabet = FeatureAlphabet()
    matrices, labels = encode_corpus(data, tagset, features, alphabet)
    alphabet.freeze()
    F, L = len(alphabet), len(tagset)
    objective = CRFObjective(matrices, labels, F, L)
    w, trace = maximize(objective, np.zeros(F * L + L * L), len(data), config)
    log.info("CRF: %d sentences, %d features, final objective %.4f", len(data), F, trace.objectives[-1] if trace.objectives else float("nan"))
    model = LinearChainCRFModel(tagset, alphabet, np.zeros((F, L)), np.zeros((L, L)), features, config.l2)
    model = model.with_weights(w)
    model.trace = trace
    return model
