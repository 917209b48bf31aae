"""Cross-lingual linear maps between embedding spaces and direct model transfer.

A map M sends target-language vectors into the source space by solving
min_M sum_i w_i ||u_i - M v_i||^2 over a weighted bilingual dictionary.
"""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np

from .corpus import ConfidenceTaggedSentence, FormatError
from .embeddings import EmbeddingTable
from .neural import NNModel, decode_vectors

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DictionaryEntry:
    source: str  # x_i
    target: str  # y_i
    weight: float  # P(x_i | y_i)
    count: int = 0


@dataclass
class BilingualDictionary:
    entries: list[DictionaryEntry]
    min_freq: int = 1
    mode: str = "threshold"

    def __len__(self) -> int:
        return len(self.entries)

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if (e.source, e.target) in seen:
                raise ValueError(f"duplicate dictionary entry {(e.source, e.target)}")
            if not (np.isfinite(e.weight) and e.weight > 0):
                raise ValueError(f"weight of {(e.source, e.target)} must be positive")
            seen.add((e.source, e.target))

    def weight_sums(self) -> dict[str, float]:
        sums: dict[str, float] = defaultdict(float)
        for e in self.entries:
            sums[e.target] += e.weight
        return dict(sums)


def read_pair_counts(stream: TextIO) -> dict[tuple[str, str], int]:
    """Parse ``source<TAB>target<TAB>count`` lines, summing duplicates."""
    counts: dict[tuple[str, str], int] = defaultdict(int)
    for lineno, line in enumerate(stream, 1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3 or not parts[0] or not parts[1]:
            raise FormatError("expected source<TAB>target<TAB>count", lineno)
        try:
            c = int(parts[2])
        except ValueError:
            raise FormatError(f"count {parts[2]!r} is not an integer", lineno) from None
        if c <= 0:
            raise FormatError("count must be positive", lineno)
        counts[(parts[0], parts[1])] += c
    return dict(counts)


def extract_dictionary(stream: TextIO, min_freq: int = 1, mode: str = "threshold") -> BilingualDictionary:
    """Weighted word pairs from a word-pair count table.

    ``threshold`` keeps pairs with count >= min_freq, weighted by
    count / (retained count mass of the same target word). ``top1`` keeps
    only the most frequent source word per target word, with weight 1.
    """
    if mode not in ("threshold", "top1"):
        raise ValueError(f"unknown dictionary mode {mode!r}")
    counts = {k: c for k, c in read_pair_counts(stream).items() if c >= min_freq}
    by_target: dict[str, list[tuple[str, int]]] = defaultdict(list)
    for (x, y), c in counts.items():
        by_target[y].append((x, c))
    entries = []
    for y in sorted(by_target):
        pairs = sorted(by_target[y], key=lambda p: (-p[1], p[0]))
        if mode == "top1":
            x, c = pairs[0]
            entries.append(DictionaryEntry(x, y, 1.0, c))
        else:
            total = sum(c for _, c in pairs)
            entries += [DictionaryEntry(x, y, c / total, c) for x, c in pairs]
    log.info("dictionary: %d unique pairs (min_freq=%d, mode=%s)", len(entries), min_freq, mode)
    return BilingualDictionary(entries, min_freq, mode)


@dataclass
class MappingMatrix:
    matrix: np.ndarray  # (d1, d2): source dim x target dim
    pairs_used: int = 0
    pairs_dropped: int = 0
    residual: float = float("nan")
    ridge: float = 0.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2 or not np.all(np.isfinite(self.matrix)):
            raise ValueError("mapping must be a finite 2-D matrix")

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def write(self, stream: TextIO) -> None:
        d1, d2 = self.matrix.shape
        stream.write(f"{d1} {d2}\n")
        for row in self.matrix:
            stream.write(" ".join(repr(float(x)) for x in row) + "\n")

    @classmethod
    def read(cls, stream: TextIO) -> "MappingMatrix":
        header = stream.readline().split()
        if len(header) != 2:
            raise FormatError("mapping header must be 'd1 d2'", 1)
        d1, d2 = int(header[0]), int(header[1])
        rows = [line.split() for line in stream if line.strip()]
        if len(rows) != d1 or any(len(r) != d2 for r in rows):
            raise FormatError(f"expected {d1} rows of {d2} values")
        return cls(np.array(rows, dtype=np.float64))


def solve_weighted_lstsq(U: np.ndarray, V: np.ndarray, w: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    """argmin_M sum_i w_i ||U_i - M V_i||^2 + ridge ||M||^2 via the normal equations."""
    A = (U * w[:, None]).T @ V  # sum w u v^T, (d1, d2)
    B = (V * w[:, None]).T @ V  # sum w v v^T, (d2, d2)
    B = B + ridge * np.eye(B.shape[0])
    if ridge == 0.0 and np.linalg.matrix_rank(B) < B.shape[0]:
        raise np.linalg.LinAlgError("normal matrix is singular; use a positive ridge")
    # B is symmetric, so M = A B^-1 solves B M^T = A^T
    return np.linalg.solve(B, A.T).T


def weighted_residual(U, V, w, M) -> float:
    r = U - V @ M.T
    return float((w * (r * r).sum(axis=1)).sum() / w.sum())


def learn_mapping(
    dictionary: BilingualDictionary,
    source_embeddings: EmbeddingTable,
    target_embeddings: EmbeddingTable,
    ridge: float | str = "auto",
) -> MappingMatrix:
    """Fit M mapping target vectors onto source vectors.

    ``ridge="auto"`` uses 1e-6 times the mean diagonal of the normal matrix.
    """
    U, V, w = [], [], []
    dropped = 0
    for e in dictionary.entries:
        u = source_embeddings.get(e.source)
        v = target_embeddings.get(e.target)
        if u is None or v is None:
            dropped += 1
            continue
        U.append(u)
        V.append(v)
        w.append(e.weight)
    if not U:
        raise ValueError(f"no dictionary pair found in both embedding tables ({dropped} dropped)")
    U, V, w = np.array(U), np.array(V), np.array(w)
    if len(U) < V.shape[1]:
        log.warning("only %d pairs for a %d-dimensional target space", len(U), V.shape[1])
    if ridge == "auto":
        B = (V * w[:, None]).T @ V
        ridge = 1e-6 * float(np.trace(B)) / B.shape[0]
    M = solve_weighted_lstsq(U, V, w, float(ridge))
    res = weighted_residual(U, V, w, M)
    log.info("mapping %s: %d pairs used, %d dropped, residual %.6g", M.shape, len(U), dropped, res)
    return MappingMatrix(M, len(U), dropped, res, float(ridge))


def project_embedding(M: MappingMatrix | np.ndarray, v: np.ndarray) -> np.ndarray:
    mat = M.matrix if isinstance(M, MappingMatrix) else np.asarray(M)
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != mat.shape[1]:
        raise ValueError(f"vector dimension {v.shape[-1]} does not match mapping input dimension {mat.shape[1]}")
    return v @ mat.T


def transfer_inputs(
    tokens: Sequence[str], M: MappingMatrix, target_embeddings: EmbeddingTable, source_embeddings: EmbeddingTable
) -> tuple[list[np.ndarray | None], list[str]]:
    """Source-space vector per token plus the route taken:
    'mapped', 'source' or 'unk' (None vector)."""
    vectors, routes = [], []
    for tok in tokens:
        v = target_embeddings.get(tok)
        if v is not None:
            vectors.append(project_embedding(M, v))
            routes.append("mapped")
            continue
        u = source_embeddings.get(tok)
        if u is not None:
            vectors.append(np.asarray(u))
            routes.append("source")
        else:
            vectors.append(None)
            routes.append("unk")
    return vectors, routes


def transfer_decode(
    tokens: Sequence[str],
    M: MappingMatrix,
    target_embeddings: EmbeddingTable,
    source_embeddings: EmbeddingTable,
    model: NNModel,
    beam: int = 1,
    constrain: bool = True,
) -> ConfidenceTaggedSentence:
    """Tag a target-language sentence with an unmodified source-language model."""
    tokens = tuple(tokens)
    if M.shape[0] != model.dim:
        raise ValueError(f"mapping output dimension {M.shape[0]} does not match model dimension {model.dim}")
    if M.shape[1] != target_embeddings.dim:
        raise ValueError(f"mapping input dimension {M.shape[1]} does not match target embeddings {target_embeddings.dim}")
    if not tokens:
        return ConfidenceTaggedSentence((), (), ())
    vectors, _ = transfer_inputs(tokens, M, target_embeddings, source_embeddings)
    return decode_vectors(model, tokens, vectors, beam, constrain)
