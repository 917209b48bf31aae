"""Window-based feedforward taggers.

NN1 feeds the concatenated window embeddings (plus embeddings of the
previous tags) through one sigmoid hidden layer and a softmax output.
NN2 first replaces each word vector ``v`` by ``sum_k a_k P_k`` with
``a = softmax(cos(v, P_k) / tau)`` over learned prototype rows ``P``.

Word vectors stay frozen; the UNK and padding vectors are trained.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit, log_softmax, softmax

from . import serialization
from .corpus import ConfidenceTaggedSentence, LabeledSentence, TagSet
from .decoding import BOS_INDEX, beam_search, transition_mask
from .embeddings import EmbeddingTable
from .optim import TrainConfig, TrainTrace, maximize

log = logging.getLogger(__name__)

ARCHITECTURES = ("nn1", "nn2")
UNK_ID = -1
PAD_ID = -2


@dataclass(frozen=True)
class NNTrainConfig:
    epochs: int = 10
    learning_rate: float = 0.1
    decay: float = 1e-4
    batch_size: int = 32
    seed: int = 0
    init_scale: float = 1.0
    l2: float = 0.0
    tol: float = 1e-7
    window: int = 2
    hidden: int = 100
    history: int = 1
    tag_dim: int = 20
    prototypes: int = 40
    temperature: float = 0.1

    def __post_init__(self):
        if self.window < 0 or self.history < 0:
            raise ValueError("window and history must be >= 0")
        for name in ("hidden", "tag_dim", "prototypes", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.temperature <= 0 or self.init_scale <= 0:
            raise ValueError("temperature and init scale must be > 0")

    def optimizer(self) -> TrainConfig:
        return TrainConfig(self.epochs, self.learning_rate, self.decay, self.l2, self.batch_size, self.seed, self.tol)


class ParamLayout:
    """Named views into one flat parameter vector."""

    def __init__(self, shapes: dict[str, tuple[int, ...]]):
        self.shapes = dict(shapes)
        self.offsets = {}
        pos = 0
        for name, shape in self.shapes.items():
            size = int(np.prod(shape))
            self.offsets[name] = (pos, pos + size)
            pos += size
        self.size = pos

    def unpack(self, w: np.ndarray) -> dict[str, np.ndarray]:
        return {k: w[a:b].reshape(self.shapes[k]) for k, (a, b) in self.offsets.items()}

    def pack(self, params: dict[str, np.ndarray]) -> np.ndarray:
        return np.concatenate([np.asarray(params[k], dtype=np.float64).ravel() for k in self.shapes])


def param_shapes(arch: str, dim: int, num_labels: int, cfg: NNTrainConfig) -> dict[str, tuple[int, ...]]:
    width = 2 * cfg.window + 1
    in_dim = width * dim + cfg.history * cfg.tag_dim
    shapes = {
        "W1": (cfg.hidden, in_dim),
        "b1": (cfg.hidden,),
        "W2": (num_labels, cfg.hidden),
        "b2": (num_labels,),
        "tags": (num_labels + 1, cfg.tag_dim),  # last row embeds BOS
        "unk": (dim,),
        "pad": (dim,),
    }
    if arch == "nn2":
        shapes["protos"] = (cfg.prototypes, dim)
    return shapes


@dataclass
class NNModel:
    architecture: str
    tagset: TagSet
    params: dict[str, np.ndarray]
    window: int = 2
    history: int = 1
    temperature: float = 0.1
    trace: TrainTrace | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.architecture!r}")
        p = self.params
        d = p["unk"].shape[0]
        in_dim = (2 * self.window + 1) * d + self.history * p["tags"].shape[1]
        h = p["b1"].shape[0]
        L = len(self.tagset)
        ok = (
            p["W1"].shape == (h, in_dim) and p["W2"].shape == (L, h) and p["b2"].shape == (L,)
            and p["tags"].shape[0] == L + 1 and p["pad"].shape == (d,)
        )
        if self.architecture == "nn2":
            ok = ok and p["protos"].ndim == 2 and p["protos"].shape[1] == d and p["protos"].shape[0] >= 1
            ok = ok and self.temperature > 0
        if not ok:
            raise ValueError("inconsistent NN parameter shapes")

    @property
    def dim(self) -> int:
        return self.params["unk"].shape[0]

    @property
    def unk(self) -> np.ndarray:
        return self.params["unk"]

    def checksum(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for k in sorted(self.params):
            h.update(k.encode())
            h.update(np.ascontiguousarray(self.params[k]).tobytes())
        return h.hexdigest()

    def save(self, path: str | Path) -> None:
        meta = {
            "architecture": self.architecture,
            "entity_types": list(self.tagset.entity_types),
            "window": self.window,
            "history": self.history,
            "temperature": self.temperature,
        }
        serialization.dump(path, "nn", meta, self.params)

    @classmethod
    def load(cls, path: str | Path) -> "NNModel":
        header, arrays = serialization.load(path, "nn")
        m = header["meta"]
        return cls(m["architecture"], TagSet(tuple(m["entity_types"])), arrays, m["window"], m["history"], m["temperature"])


# -- forward / backward ------------------------------------------------------

def _smooth(E: np.ndarray, P: np.ndarray, tau: float):
    En = np.maximum(np.linalg.norm(E, axis=-1, keepdims=True), 1e-12)
    Pn = np.maximum(np.linalg.norm(P, axis=-1, keepdims=True), 1e-12)
    Eh, Ph = E / En, P / Pn
    a = softmax((Eh @ Ph.T) / tau, axis=-1)
    return a @ P, (En, Eh, Pn, Ph, a)


def _smooth_backward(dS: np.ndarray, P: np.ndarray, tau: float, cache):
    En, Eh, Pn, Ph, a = cache
    m, d = P.shape
    a2, dS2, Eh2 = a.reshape(-1, m), dS.reshape(-1, d), Eh.reshape(-1, d)
    gP = a2.T @ dS2
    da = dS @ P.T
    dc = a * (da - (a * da).sum(axis=-1, keepdims=True)) / tau
    dEh = dc @ Ph
    dPh = dc.reshape(-1, m).T @ Eh2
    dE = (dEh - Eh * (Eh * dEh).sum(axis=-1, keepdims=True)) / En
    gP += (dPh - Ph * (Ph * dPh).sum(axis=-1, keepdims=True)) / Pn
    return dE, gP


def smooth(model: NNModel, vectors: np.ndarray) -> np.ndarray:
    """Prototype-layer output for NN2; identity for NN1."""
    if model.architecture == "nn1":
        return vectors
    S, _ = _smooth(vectors, model.params["protos"], model.temperature)
    return S


def _hidden_input(p, words: np.ndarray, prev: np.ndarray) -> np.ndarray:
    N = words.shape[0]
    return np.concatenate([words.reshape(N, -1), p["tags"][prev].reshape(N, -1)], axis=1)


def _logits(p, x):
    hdn = expit(x @ p["W1"].T + p["b1"])
    return hdn @ p["W2"].T + p["b2"], hdn


def _prev_rows(prev: np.ndarray, num_labels: int) -> np.ndarray:
    prev = np.asarray(prev, dtype=np.int64)
    return np.where(prev == BOS_INDEX, num_labels, prev)


def nn_forward(model: NNModel, window_vectors: np.ndarray, prev_tags: Sequence[int] | np.ndarray) -> np.ndarray:
    """Label distribution for one window (2c+1, d) or a batch (N, 2c+1, d).

    ``prev_tags`` holds label indices nearest first; BOS_INDEX or L mean
    sentence start.
    """
    E = np.asarray(window_vectors, dtype=np.float64)
    single = E.ndim == 2
    if single:
        E = E[None]
        prev_tags = np.asarray(prev_tags)[None]
    width = 2 * model.window + 1
    if E.shape[1:] != (width, model.dim):
        raise ValueError(f"expected window shape {(width, model.dim)}, got {E.shape[1:]}")
    prev = _prev_rows(np.asarray(prev_tags).reshape(E.shape[0], model.history), len(model.tagset))
    x = _hidden_input(model.params, smooth(model, E), prev)
    out, _ = _logits(model.params, x)
    probs = softmax(out, axis=1)
    return probs[0] if single else probs


class NNObjective:
    """Teacher-forced token log-likelihood over all parameters."""

    def __init__(self, layout: ParamLayout, arch: str, tau: float, frozen: np.ndarray,
                 window_ids: np.ndarray, prev: np.ndarray, labels: np.ndarray):
        self.layout = layout
        self.arch = arch
        self.tau = tau
        # a dummy row keeps indexing valid for an empty table
        self.frozen = np.vstack([frozen, np.zeros((1, frozen.shape[1]))])
        self.window_ids = window_ids
        self.prev = prev
        self.labels = labels

    def words(self, p, ids):
        E = self.frozen[np.where(ids >= 0, ids, 0)]
        E[ids == UNK_ID] = p["unk"]
        E[ids == PAD_ID] = p["pad"]
        return E

    def __call__(self, w: np.ndarray, batch: np.ndarray) -> tuple[float, np.ndarray]:
        p = self.layout.unpack(w)
        ids = self.window_ids[batch]
        prev = self.prev[batch]
        y = self.labels[batch]
        N, width = ids.shape
        E = self.words(p, ids)
        if self.arch == "nn2":
            S, cache = _smooth(E, p["protos"], self.tau)
        else:
            S = E
        x = _hidden_input(p, S, prev)
        out, hdn = _logits(p, x)
        logp = log_softmax(out, axis=1)
        value = float(logp[np.arange(N), y].sum())

        g = {}
        do = -np.exp(logp)
        do[np.arange(N), y] += 1.0
        g["W2"] = do.T @ hdn
        g["b2"] = do.sum(axis=0)
        dz = (do @ p["W2"]) * hdn * (1.0 - hdn)
        g["W1"] = dz.T @ x
        g["b1"] = dz.sum(axis=0)
        dx = dz @ p["W1"]
        d = E.shape[2]
        dS = dx[:, :width * d].reshape(N, width, d)
        g["tags"] = np.zeros_like(p["tags"])
        np.add.at(g["tags"], prev, dx[:, width * d:].reshape(N, prev.shape[1], -1))
        if self.arch == "nn2":
            dE, g["protos"] = _smooth_backward(dS, p["protos"], self.tau, cache)
        else:
            dE = dS
        g["unk"] = dE[ids == UNK_ID].sum(axis=0)
        g["pad"] = dE[ids == PAD_ID].sum(axis=0)
        return value, self.layout.pack(g)


def _window_ids(ids: np.ndarray, i: int, c: int) -> np.ndarray:
    n = len(ids)
    return np.array([ids[j] if 0 <= j < n else PAD_ID for j in range(i - c, i + c + 1)], dtype=np.int64)


def encode_windows(data: Sequence[LabeledSentence], embeddings: EmbeddingTable, tagset: TagSet, window: int, history: int):
    windows, prevs, labels = [], [], []
    L = len(tagset)
    for s in data:
        ids = np.array([UNK_ID if (k := embeddings.find(t)) is None else k for t in s.tokens], dtype=np.int64)
        y = [tagset.index(t) for t in s.tags]
        for i in range(len(s)):
            windows.append(_window_ids(ids, i, window))
            prevs.append([y[i - k] if i - k >= 0 else L for k in range(1, history + 1)])
            labels.append(y[i])
    return (np.array(windows, dtype=np.int64).reshape(len(labels), 2 * window + 1),
            np.array(prevs, dtype=np.int64).reshape(len(labels), history),
            np.array(labels, dtype=np.int64))


def init_params(arch: str, embeddings: EmbeddingTable, num_labels: int, cfg: NNTrainConfig) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(cfg.seed)
    shapes = param_shapes(arch, embeddings.dim, num_labels, cfg)

    def glorot(shape):
        fan_out, fan_in = shape
        x = cfg.init_scale * np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-x, x, size=shape)

    p = {
        "W1": glorot(shapes["W1"]),
        "b1": np.zeros(shapes["b1"]),
        "W2": glorot(shapes["W2"]),
        "b2": np.zeros(shapes["b2"]),
        "tags": glorot(shapes["tags"]),
        "unk": embeddings.unk.copy(),
    }
    scale = float(np.std(embeddings.vectors)) if len(embeddings) else 0.1
    p["pad"] = rng.uniform(-scale, scale, size=shapes["pad"])
    if arch == "nn2":
        m = cfg.prototypes
        if len(embeddings):
            rows = rng.choice(len(embeddings), size=m, replace=len(embeddings) < m)
            p["protos"] = embeddings.vectors[rows] + rng.normal(0, 0.01 * scale + 1e-6, size=(m, embeddings.dim))
        else:
            p["protos"] = rng.normal(0, 0.1, size=(m, embeddings.dim))
    return p


def build_objective(data, embeddings, cfg: NNTrainConfig, architecture: str, tagset: TagSet | None = None):
    tagset = tagset or TagSet.from_sentences(data)
    layout = ParamLayout(param_shapes(architecture, embeddings.dim, len(tagset), cfg))
    windows, prev, labels = encode_windows(data, embeddings, tagset, cfg.window, cfg.history)
    objective = NNObjective(layout, architecture, cfg.temperature, embeddings.vectors, windows, prev, labels)
    return objective, tagset


def nn_train(
    data: Sequence[LabeledSentence],
    embeddings: EmbeddingTable,
    config: NNTrainConfig = NNTrainConfig(),
    architecture: str = "nn1",
    tagset: TagSet | None = None,
) -> NNModel:
    if architecture not in ARCHITECTURES:
        raise ValueError(f"unknown architecture {architecture!r}")
    data = [s for s in data if len(s)]
    if not data:
        raise ValueError("cannot train on an empty corpus")
    objective, tagset = build_objective(data, embeddings, config, architecture, tagset)
    w0 = objective.layout.pack(init_params(architecture, embeddings, len(tagset), config))
    w, trace = maximize(objective, w0, len(objective.labels), config.optimizer())
    log.info("%s: %d tokens, final log-likelihood %.4f", architecture, len(objective.labels),
             trace.objectives[-1] if trace.objectives else float("nan"))
    params = {k: v.copy() for k, v in objective.layout.unpack(w).items()}
    model = NNModel(architecture, tagset, params, config.window, config.history, config.temperature)
    model.trace = trace
    return model


EmbeddingLookup = Callable[[str], "np.ndarray | None"]


def nn_decode(
    model: NNModel,
    tokens: Sequence[str],
    embedding_lookup: EmbeddingLookup,
    beam: int = 1,
    constrain: bool = True,
) -> ConfidenceTaggedSentence:
    """Left-to-right decoding feeding back emitted tags (greedy when beam=1).

    ``embedding_lookup`` returns a vector or None; None means UNK.
    """
    tokens = tuple(tokens)
    if not tokens:
        return ConfidenceTaggedSentence((), (), ())
    return decode_vectors(model, tokens, [embedding_lookup(t) for t in tokens], beam, constrain)


def decode_vectors(model: NNModel, tokens, vectors, beam: int = 1, constrain: bool = True) -> ConfidenceTaggedSentence:
    p = model.params
    n, c, L = len(tokens), model.window, len(model.tagset)
    E = np.stack([p["unk"] if v is None else np.asarray(v, dtype=np.float64) for v in vectors])
    if E.shape[1] != model.dim:
        raise ValueError(f"embedding dimension {E.shape[1]} does not match model dimension {model.dim}")
    S = smooth(model, np.vstack([E, p["pad"][None]]))
    padded = np.vstack([np.repeat(S[-1:], c, axis=0), S[:-1], np.repeat(S[-1:], c, axis=0)])
    word_part = np.stack([padded[i:i + 2 * c + 1].ravel() for i in range(n)])
    word_scores = word_part @ p["W1"][:, :word_part.shape[1]].T + p["b1"]
    tag_W = p["W1"][:, word_part.shape[1]:]

    def step(i, histories):
        prev = _prev_rows(np.array(histories, dtype=np.int64).reshape(len(histories), model.history), L)
        tag_in = p["tags"][prev].reshape(len(histories), -1)
        hdn = expit(word_scores[i][None, :] + tag_in @ tag_W.T)
        return log_softmax(hdn @ p["W2"].T + p["b2"], axis=1)

    mask = transition_mask(model.tagset) if constrain else None
    path, logps = beam_search(n, L, model.history, step, beam, mask)
    labels = model.tagset.labels
    confs = tuple(float(np.clip(np.exp(lp), 0.0, 1.0)) for lp in logps)
    return ConfidenceTaggedSentence(tokens, tuple(labels[l] for l in path), confs)
