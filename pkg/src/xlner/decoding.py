"""Viterbi and beam search over label-index sequences.

Ties go to the lowest label index so decoders are deterministic.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .corpus import TagSet, split_tag

BOS_INDEX = -1


def transition_mask(tagset: TagSet) -> np.ndarray:
    """Boolean (L+1, L) array; row L is the sentence start."""
    labels = tagset.labels
    L = len(labels)
    mask = np.ones((L + 1, L), dtype=bool)
    for cur, lab in enumerate(labels):
        prefix, etype = split_tag(lab)
        if prefix != "I":
            continue
        for prev in range(L + 1):
            prev_type = split_tag(labels[prev])[1] if prev < L else None
            mask[prev, cur] = prev_type == etype
    return mask


def forward_backward(emissions: np.ndarray, transitions: np.ndarray):
    """Log-space forward/backward tables for a linear chain.

    Returns (log_z, alpha, beta); alpha[i, l] includes the emission at i.
    """
    n, L = emissions.shape
    alpha = np.empty((n, L))
    beta = np.zeros((n, L))
    alpha[0] = emissions[0]
    for i in range(1, n):
        alpha[i] = logsumexp(alpha[i - 1][:, None] + transitions, axis=0) + emissions[i]
    for i in range(n - 2, -1, -1):
        beta[i] = logsumexp(transitions + (emissions[i + 1] + beta[i + 1])[None, :], axis=1)
    return float(logsumexp(alpha[-1])), alpha, beta


def viterbi(emissions: np.ndarray, transitions: np.ndarray, mask: np.ndarray | None = None) -> tuple[list[int], float]:
    n, L = emissions.shape
    trans = transitions
    start = emissions[0].copy()
    if mask is not None:
        trans = np.where(mask[:L], transitions, -np.inf)
        start[~mask[L]] = -np.inf
    score = start
    back = np.zeros((n, L), dtype=np.int64)
    for i in range(1, n):
        cand = score[:, None] + trans
        back[i] = np.argmax(cand, axis=0)
        score = cand[back[i], np.arange(L)] + emissions[i]
    best = int(np.argmax(score))
    path = [best]
    for i in range(n - 1, 0, -1):
        path.append(int(back[i, path[-1]]))
    return path[::-1], float(score[best])


StepFn = Callable[[int, Sequence[tuple[int, ...]]], np.ndarray]


def beam_search(
    length: int,
    num_labels: int,
    order: int,
    step: StepFn,
    beam: int,
    mask: np.ndarray | None = None,
) -> tuple[list[int], list[float]]:
    """Left-to-right search for the sequence maximizing a sum of log-probs.

    ``step(i, histories)`` returns an array of shape (len(histories), L)
    holding log p(l_i | history, x); each history lists the previous
    ``order`` labels nearest first, padded with BOS_INDEX. Hypotheses
    sharing a history are recombined, so ``beam >= L**order`` is exact.
    Returns the label path and the per-token log-probabilities along it.
    """
    if beam < 1:
        raise ValueError("beam width must be >= 1")
    # history -> (score, path, per-token log-probs)
    states: dict[tuple[int, ...], tuple[float, tuple[int, ...], tuple[float, ...]]] = {
        (BOS_INDEX,) * order: (0.0, (), ())
    }
    for i in range(length):
        histories = list(states)
        logp = step(i, histories)
        cands: dict[tuple[int, ...], tuple[float, tuple[int, ...], tuple[float, ...]]] = {}
        for h, row in zip(histories, logp):
            score, path, probs = states[h]
            prev = path[-1] if path else BOS_INDEX
            for lab in range(num_labels):
                if mask is not None and not mask[prev, lab]:
                    continue
                s = score + float(row[lab])
                new_h = ((lab,) + h)[:order]
                new_path = path + (lab,)
                old = cands.get(new_h)
                if old is None or s > old[0] or (s == old[0] and new_path < old[1]):
                    cands[new_h] = (s, new_path, probs + (float(row[lab]),))
        ranked = sorted(cands.items(), key=lambda kv: (-kv[1][0], kv[1][1]))
        states = dict(ranked[:beam])
    best = min(states.values(), key=lambda v: (-v[0], v[1]))
    return list(best[1]), list(best[2])
