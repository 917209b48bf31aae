"""Gradient ascent on a regularized log-likelihood.

Objectives are callables ``fn(w, batch) -> (loglik, grad)`` returning the
unregularized sum over the examples indexed by ``batch``. The L2 penalty
``l2/2 * ||w||^2`` is applied here, pro-rated per mini-batch.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

log = logging.getLogger(__name__)

Objective = Callable[[np.ndarray, np.ndarray], tuple[float, np.ndarray]]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    learning_rate: float = 0.5
    decay: float = 1e-3
    l2: float = 1e-3
    batch_size: int = 16
    seed: int = 0
    tol: float = 1e-7
    optimizer: str = "sgd"  # or "lbfgs"

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be > 0")
        if self.l2 < 0 or self.decay < 0:
            raise ValueError("l2 and decay must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if self.optimizer not in ("sgd", "lbfgs"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class TrainTrace:
    objectives: list[float] = field(default_factory=list)
    converged: bool = False


def regularized(fn: Objective, w: np.ndarray, n: int, l2: float) -> float:
    value, _ = fn(w, np.arange(n))
    return value - 0.5 * l2 * float(w @ w)


def _check_finite(value: float, epoch: int) -> None:
    if not np.isfinite(value):
        raise FloatingPointError(f"objective became {value} at epoch {epoch}; lower the learning rate")


def maximize(fn: Objective, w0: np.ndarray, n: int, config: TrainConfig) -> tuple[np.ndarray, TrainTrace]:
    if n == 0:
        raise ValueError("no training examples")
    trace = TrainTrace()
    w = w0.astype(np.float64, copy=True)
    if config.epochs == 0:
        return w, trace
    if config.optimizer == "lbfgs":
        return _lbfgs(fn, w, n, config, trace)

    rng = np.random.default_rng(config.seed)
    prev = regularized(fn, w, n, config.l2)
    _check_finite(prev, 0)
    trace.objectives.append(prev)
    step = 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            _, grad = fn(w, batch)
            grad = grad - config.l2 * (len(batch) / n) * w
            rate = config.learning_rate / (1.0 + config.decay * step)
            w += (rate / len(batch)) * grad
            step += 1
        obj = regularized(fn, w, n, config.l2)
        _check_finite(obj, epoch)
        trace.objectives.append(obj)
        log.debug("epoch %d objective %.6f", epoch, obj)
        if abs(obj - prev) <= config.tol * max(1.0, abs(prev)):
            trace.converged = True
            break
        prev = obj
    return w, trace


def _lbfgs(fn: Objective, w: np.ndarray, n: int, config: TrainConfig, trace: TrainTrace):
    everything = np.arange(n)

    def neg(x):
        value, grad = fn(x, everything)
        value -= 0.5 * config.l2 * float(x @ x)
        _check_finite(value, len(trace.objectives))
        return -value, -(grad - config.l2 * x)

    def record(x):
        trace.objectives.append(regularized(fn, x, n, config.l2))

    trace.objectives.append(regularized(fn, w, n, config.l2))
    res = optimize.minimize(neg, w, jac=True, method="L-BFGS-B", callback=record,
                            options={"maxiter": config.epochs, "ftol": config.tol, "gtol": 1e-8})
    trace.converged = bool(res.success)
    return res.x, trace
