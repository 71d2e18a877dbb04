"""Graph t-SNE: KL optimization of a graph affinity matrix in 2D."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .affinity import SparseAffinity
from .init import Embedding

log = logging.getLogger(__name__)


@dataclass
class TsneParams:
    total_iters: int = 750
    exaggeration_iters: int = 250
    exaggeration_factor: float = 12.0
    learning_rate: float | None = None  # None -> n
    momentum_early: float = 0.5
    momentum_late: float = 0.8
    bh_theta: float = 0.5
    exact_threshold: int = 5000
    seed: int = 0
    # per-coordinate delta-bar-delta gains; False gives plain momentum descent
    adaptive_gains: bool = True
    min_gain: float = 0.01
    # step is learning_rate / exaggeration applied to the force grad / 4
    force_units: bool = True

    def __post_init__(self):
        if not 0 <= self.exaggeration_iters <= self.total_iters:
            raise ValueError("need 0 <= exaggeration_iters <= total_iters")
        if not 0.0 <= self.bh_theta <= 1.0:
            raise ValueError("bh_theta must lie in [0, 1]")
        if self.learning_rate is not None and self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


def _check(P: SparseAffinity, Y) -> np.ndarray:
    y = np.ascontiguousarray(Y.coords if isinstance(Y, Embedding) else Y, dtype=np.float64)
    if y.ndim != 2 or y.shape[1] != 2:
        raise ValueError("t-SNE works on 2D embeddings")
    if y.shape[0] != P.n:
        raise ValueError(f"affinity has {P.n} nodes, embedding has {y.shape[0]}")
    return y


def kl_loss(P: SparseAffinity, Y) -> float:
    """Exact KL(P || Q) with Cauchy-kernel Q.  O(n^2)."""
    y = _check(P, Y)
    _, z = _kernels.repulsion_exact(y)
    log_w = _kernels.log_kernel_on_edges(y, P.rows, P.cols)
    p = P.values
    return float(2.0 * np.sum(p * (np.log(p) - log_w + np.log(z))))


def _gradient(P: SparseAffinity, y: np.ndarray, theta: float | None) -> np.ndarray:
    attr = _kernels.attraction(y, P.rows, P.cols, P.values)
    if theta is None:
        rep, z = _kernels.repulsion_exact(y)
    else:
        rep, z = _kernels.repulsion_bh(y, theta)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        # a diverged layout is reported by the caller's finiteness check
        return 4.0 * (attr - rep / z)


def exact_gradient(P: SparseAffinity, Y) -> np.ndarray:
    """Gradient of :func:`kl_loss`: ``4 sum_j (p_ij - q_ij) w_ij (y_i - y_j)``."""
    return _finite(_gradient(P, _check(P, Y), None))


def bh_gradient(P: SparseAffinity, Y, theta: float = 0.5) -> np.ndarray:
    """Same as :func:`exact_gradient` with Barnes-Hut repulsion."""
    return _finite(_gradient(P, _check(P, Y), float(theta)))


def _finite(grad: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite t-SNE gradient")
    return grad


def run_tsne(P: SparseAffinity, init: Embedding, params: TsneParams | None = None,
             loss_log: list | None = None, log_every: int = 50) -> Embedding:
    """Momentum gradient descent with an early-exaggeration phase.

    With the defaults the step on coordinate ``y`` is
    ``gain * learning_rate / exaggeration * grad / 4``, which makes
    ``learning_rate = n`` stable during exaggeration.  With
    ``force_units=False`` and ``adaptive_gains=False`` the update is the plain
    ``y <- y - learning_rate * grad + momentum * previous_update``.

    If ``loss_log`` is a list, ``(iteration, kl_loss)`` tuples are appended
    every ``log_every`` iterations and after the last one.
    """
    params = params or TsneParams()
    y = _check(P, init).copy()
    n = P.n
    lr = float(n) if params.learning_rate is None else params.learning_rate
    theta = None if n <= params.exact_threshold else params.bh_theta
    P_ex = P.scaled(params.exaggeration_factor)
    update = np.zeros_like(y)
    gains = np.ones_like(y)
    for it in range(params.total_iters):
        early = it < params.exaggeration_iters
        grad = _gradient(P_ex if early else P, y, theta)
        momentum = params.momentum_early if early else params.momentum_late
        step = lr
        if params.force_units:
            step = lr / (4.0 * (params.exaggeration_factor if early else 1.0))
        if params.adaptive_gains:
            flip = np.sign(grad) != np.sign(update)
            gains = np.maximum(np.where(flip, gains + 0.2, gains * 0.8), params.min_gain)
        update = momentum * update - step * gains * grad
        y += update
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(grad))):
            raise FloatingPointError(f"non-finite coordinates at iteration {it}")
        done = it + 1
        if loss_log is not None and (done % log_every == 0 or done == params.total_iters):
            loss_log.append((done, kl_loss(P, y)))
            log.debug("iter %d  KL %.5f", done, loss_log[-1][1])
    return Embedding(y, "euclidean")
