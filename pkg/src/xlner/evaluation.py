"""Exact-match entity scoring and the stratified shuffling significance test."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import LabeledSentence

MIN_ITERATIONS = 1000


def _prf(correct: int, predicted: int, gold: int) -> tuple[float, float, float]:
    p = correct / predicted if predicted else 0.0
    r = correct / gold if gold else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


@dataclass
class EvalReport:
    gold: int
    predicted: int
    correct: int
    per_type: dict[str, tuple[int, int, int]] = field(default_factory=dict)  # type -> (gold, pred, correct)

    @property
    def precision(self) -> float:
        return _prf(self.correct, self.predicted, self.gold)[0]

    @property
    def recall(self) -> float:
        return _prf(self.correct, self.predicted, self.gold)[1]

    @property
    def f1(self) -> float:
        return _prf(self.correct, self.predicted, self.gold)[2]

    def type_scores(self, etype: str) -> tuple[float, float, float]:
        g, p, c = self.per_type[etype]
        return _prf(c, p, g)

    def to_kv(self) -> str:
        lines = [
            f"precision\t{self.precision!r}",
            f"recall\t{self.recall!r}",
            f"f1\t{self.f1!r}",
            f"gold\t{self.gold}",
            f"predicted\t{self.predicted}",
            f"correct\t{self.correct}",
        ]
        for t in sorted(self.per_type):
            p, r, f = self.type_scores(t)
            g, pr, c = self.per_type[t]
            lines += [f"{t}.precision\t{p!r}", f"{t}.recall\t{r!r}", f"{t}.f1\t{f!r}",
                      f"{t}.gold\t{g}", f"{t}.predicted\t{pr}", f"{t}.correct\t{c}"]
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        rows = [("type", "P", "R", "F1", "gold", "pred", "correct")]
        for t in sorted(self.per_type):
            p, r, f = self.type_scores(t)
            rows.append((t, f"{100 * p:.2f}", f"{100 * r:.2f}", f"{100 * f:.2f}", *map(str, self.per_type[t])))
        rows.append(("overall", f"{100 * self.precision:.2f}", f"{100 * self.recall:.2f}", f"{100 * self.f1:.2f}",
                     str(self.gold), str(self.predicted), str(self.correct)))
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        return "\n".join("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
                         for r in rows) + "\n"


def _check_aligned(gold: Sequence, pred: Sequence) -> None:
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold sentences but {len(pred)} predicted")
    for k, (g, p) in enumerate(zip(gold, pred)):
        if tuple(g.tokens) != tuple(p.tokens):
            raise ValueError(f"sentence {k}: gold and predicted tokens differ")


def sentence_counts(gold: Sequence[LabeledSentence], pred: Sequence[LabeledSentence]) -> np.ndarray:
    """(sentences, 3) array of gold, predicted and correct entity counts."""
    _check_aligned(gold, pred)
    out = np.zeros((len(gold), 3), dtype=np.int64)
    for k, (g, p) in enumerate(zip(gold, pred)):
        ge, pe = set(g.entities()), set(p.entities())
        out[k] = len(ge), len(pe), len(ge & pe)
    return out


def phrasal_f1(gold: Sequence[LabeledSentence], pred: Sequence[LabeledSentence]) -> EvalReport:
    _check_aligned(gold, pred)
    g_t, p_t, c_t = Counter(), Counter(), Counter()
    for g, p in zip(gold, pred):
        ge, pe = set(g.entities()), set(p.entities())
        g_t.update(e.etype for e in ge)
        p_t.update(e.etype for e in pe)
        c_t.update(e.etype for e in ge & pe)
    types = set(g_t) | set(p_t)
    per_type = {t: (g_t[t], p_t[t], c_t[t]) for t in types}
    return EvalReport(sum(g_t.values()), sum(p_t.values()), sum(c_t.values()), per_type)


def _f1_from_sums(correct, predicted, gold):
    predicted = np.asarray(predicted, dtype=np.float64)
    correct = np.asarray(correct, dtype=np.float64)
    denom = predicted + gold
    # F1 = 2c / (pred + gold), which equals 2PR/(P+R) whenever both are defined
    return np.divide(2.0 * correct, denom, out=np.zeros_like(correct), where=denom > 0)


@dataclass(frozen=True)
class SignificanceResult:
    p_value: float
    observed: float
    f1_a: float
    f1_b: float
    iterations: int

    def significant(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha


def stratified_shuffling_test(
    outputs_a: Sequence[LabeledSentence],
    outputs_b: Sequence[LabeledSentence],
    gold: Sequence[LabeledSentence],
    iterations: int = 10000,
    seed: int = 0,
    chunk: int = 1000,
) -> SignificanceResult:
    """Randomization test on |F1(a) - F1(b)| swapping whole sentences.

    p = (1 + #{shuffled >= observed}) / (1 + iterations).
    """
    if iterations < MIN_ITERATIONS:
        raise ValueError(f"iterations must be >= {MIN_ITERATIONS}")
    ca = sentence_counts(gold, outputs_a)
    cb = sentence_counts(gold, outputs_b)
    G = ca[:, 0].sum()
    f_a = float(_f1_from_sums(ca[:, 2].sum(), ca[:, 1].sum(), G))
    f_b = float(_f1_from_sums(cb[:, 2].sum(), cb[:, 1].sum(), G))
    observed = abs(f_a - f_b)
    rng = np.random.default_rng(seed)
    dp = cb[:, 1] - ca[:, 1]
    dc = cb[:, 2] - ca[:, 2]
    hits = 0
    done = 0
    while done < iterations:
        m = min(chunk, iterations - done)
        swap = rng.random((m, len(gold))) < 0.5
        pa = ca[:, 1].sum() + swap @ dp
        pc = ca[:, 2].sum() + swap @ dc
        pb = ca[:, 1].sum() + cb[:, 1].sum() - pa
        pcb = ca[:, 2].sum() + cb[:, 2].sum() - pc
        stat = np.abs(_f1_from_sums(pc, pa, G) - _f1_from_sums(pcb, pb, G))
        hits += int(np.count_nonzero(stat >= observed - 1e-12))
        done += m
    return SignificanceResult((1 + hits) / (1 + iterations), observed, f_a, f_b, iterations)
