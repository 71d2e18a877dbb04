"""Graph CNE: node embeddings trained with InfoNCE over graph edges."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph
from .init import Embedding

log = logging.getLogger(__name__)

KERNELS = ("cosine_temperature", "cauchy")


@dataclass
class CneParams:
    d: int = 128
    kernel: str = "cosine_temperature"
    tau: float = 0.05
    learnable_tau: bool = False
    tau_init: float = 0.5  # starting value when tau is learned
    epochs: int = 100
    batch_size: int | None = None  # None -> min(8192, n // 10), at least 2
    negatives: int | None = None  # None -> 2b - 2 (full-batch repulsion)
    adam_lr: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.tau <= 0 or self.tau_init <= 0:
            raise ValueError("temperature must be positive")
        if self.batch_size is not None and self.batch_size < 2:
            raise ValueError("batch size must be at least 2")
        if self.negatives is not None:
            if self.negatives < 1:
                raise ValueError("need at least one negative")
            if self.batch_size is not None and self.negatives > 2 * self.batch_size - 2:
                raise ValueError("negatives cannot exceed 2b - 2")

    def resolved_batch_size(self, n: int) -> int:
        if self.batch_size is not None:
            return self.batch_size
        return max(2, min(8192, n // 10))


@dataclass
class EdgeBatch:
    """``b`` positive pairs ``heads[a] -- tails[a]``.

    The batch's ``2b`` points are ``heads`` followed by ``tails``.  Anchor
    ``a`` is ``heads[a]``; its positive sits at position ``b + a``.
    ``neg_mask`` (b x 2b, optional) selects each anchor's negatives among
    the batch positions; by default every position except the anchor and
    its partner is a negative.
    """

    heads: np.ndarray
    tails: np.ndarray
    neg_mask: np.ndarray | None = None

    @property
    def size(self) -> int:
        return len(self.heads)

    @property
    def points(self) -> np.ndarray:
        return np.concatenate([self.heads, self.tails])


def pair_similarity(y_i, y_j, kernel: str = "cosine_temperature", tau: float = 0.5) -> float:
    """Unnormalized affinity ``w_ij`` of two embedding vectors."""
    y_i = np.asarray(y_i, dtype=np.float64)
    y_j = np.asarray(y_j, dtype=np.float64)
    if kernel == "cauchy":
        return 1.0 / (1.0 + float(np.sum((y_i - y_j) ** 2)))
    if kernel != "cosine_temperature":
        raise ValueError(f"unknown kernel {kernel!r}")
    ni, nj = np.linalg.norm(y_i), np.linalg.norm(y_j)
    if ni == 0 or nj == 0:
        raise ValueError("cosine similarity is undefined for zero vectors")
    return math.exp(float(y_i @ y_j) / (ni * nj) / tau)


def _candidate_mask(batch: EdgeBatch) -> np.ndarray:
    b = batch.size
    pos = np.arange(b)
    if batch.neg_mask is None:
        mask = np.ones((b, 2 * b), dtype=bool)
    else:
        mask = np.array(batch.neg_mask, dtype=bool, copy=True)
        if mask.shape != (b, 2 * b):
            raise ValueError("neg_mask must have shape (b, 2b)")
    mask[pos, pos] = False
    mask[pos, pos + b] = True
    return mask


def infonce_batch_loss(Y, batch: EdgeBatch, params: CneParams, tau: float | None = None):
    """InfoNCE loss of one batch and its gradients.

    ``loss = mean_a -log(w_pos / (w_pos + sum_negatives w))``.  Returns
    ``(loss, grad, grad_log_tau)`` where ``grad`` has the shape of ``Y`` and
    is zero outside the batch rows.  ``grad_log_tau`` is the derivative with
    respect to ``log tau`` (0 for the Cauchy kernel).
    """
    Y = np.asarray(Y.coords if isinstance(Y, Embedding) else Y)
    tau = params.tau if tau is None else tau
    pts = batch.points
    if pts.min() < 0 or pts.max() >= len(Y):
        raise IndexError("batch references nodes outside the embedding")
    b = batch.size
    x = Y[pts]
    mask = _candidate_mask(batch)
    pos = np.arange(b)

    if params.kernel == "cosine_temperature":
        r = np.linalg.norm(x, axis=1)
        if np.any(r == 0):
            raise ValueError("cosine kernel is undefined for zero vectors")
        u = x / r[:, None]
        logits = (u[:b] @ u.T) / tau
    else:
        sq = np.sum(x * x, axis=1)
        d2 = np.maximum(sq[:b, None] + sq[None, :] - 2.0 * x[:b] @ x.T, 0.0)
        w = 1.0 / (1.0 + d2)
        logits = np.log(w)

    masked = np.where(mask, logits, -np.inf)
    top = masked.max(axis=1, keepdims=True)
    ex = np.where(mask, np.exp(masked - top), 0.0)
    z = ex.sum(axis=1)
    lse = np.log(z) + top[:, 0]
    loss = float(np.mean(lse - logits[pos, pos + b]))

    g = ex / z[:, None]
    g[pos, pos + b] -= 1.0
    g /= b  # dloss/dlogits

    if params.kernel == "cosine_temperature":
        du = np.zeros_like(u)
        du[:b] = g @ u / tau
        du += g.T @ u[:b] / tau
        dx = (du - u * np.sum(u * du, axis=1, keepdims=True)) / r[:, None]
        grad_log_tau = float(-np.sum(g * np.where(mask, logits, 0.0)))
    else:
        h = -2.0 * g * w  # dloss/d(anchor - other) per pair
        dx = np.zeros_like(x)
        dx[:b] = h.sum(axis=1)[:, None] * x[:b] - h @ x
        dx += h.sum(axis=0)[:, None] * x - h.T @ x[:b]
        grad_log_tau = 0.0

    grad = np.zeros_like(Y, dtype=dx.dtype)
    np.add.at(grad, pts, dx)
    return loss, grad, grad_log_tau


def sample_epoch(g: Graph, b: int, seed: int = 0, epoch: int = 0) -> list[EdgeBatch]:
    """Shuffle the edge list with stream ``SeedSequence([seed, epoch])`` and cut it into batches.

    Each edge's orientation is a fair coin.  A final batch shorter than
    ``b`` is kept when it holds at least two pairs.
    """
    if b < 2:
        raise ValueError("batch size must be at least 2")
    rng = np.random.default_rng(np.random.SeedSequence([seed, epoch]))
    e = g.edges()[rng.permutation(g.n_edges)]
    flip = rng.random(len(e)) < 0.5
    e[flip] = e[flip][:, ::-1]
    batches = []
    for start in range(0, len(e), b):
        chunk = e[start:start + b]
        if len(chunk) < 2:
            break
        batches.append(EdgeBatch(chunk[:, 0].copy(), chunk[:, 1].copy()))
    return batches


def _sample_negatives(batch: EdgeBatch, m: int, rng) -> EdgeBatch:
    b = batch.size
    m = min(m, 2 * b - 2)
    if m == 2 * b - 2:
        return batch
    mask = np.zeros((b, 2 * b), dtype=bool)
    for a in range(b):
        pool = np.delete(np.arange(2 * b), [a, a + b])
        mask[a, rng.choice(pool, size=m, replace=False)] = True
    return EdgeBatch(batch.heads, batch.tails, mask)


@dataclass
class CneHistory:
    mean_loss: list = field(default_factory=list)
    tau: list = field(default_factory=list)

    def csv(self) -> str:
        rows = ["epoch,mean_loss,tau"]
        rows += [f"{i + 1},{l:.10g},{t:.10g}" for i, (l, t) in enumerate(zip(self.mean_loss, self.tau))]
        return "\n".join(rows) + "\n"


class _Adam:
    def __init__(self, shape, params: CneParams):
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0
        self.p = params

    def step(self, grad):
        p = self.p
        self.t += 1
        self.m *= p.adam_beta1
        self.m += (1 - p.adam_beta1) * grad
        self.v *= p.adam_beta2
        self.v += (1 - p.adam_beta2) * grad * grad
        mhat = self.m / (1 - p.adam_beta1 ** self.t)
        vhat = self.v / (1 - p.adam_beta2 ** self.t)
        return p.adam_lr * mhat / (np.sqrt(vhat) + p.adam_eps)


def run_cne(g: Graph, params: CneParams, init: Embedding, callback=None, callback_every: int | None = None):
    """Train an embedding with Adam on batched InfoNCE.

    ``callback(epoch, step, coords)`` fires at the end of every epoch and, if
    ``callback_every`` is set, every that many optimizer steps; ``epoch`` is
    fractional for the latter.  Returns the
    final embedding and a :class:`CneHistory`.
    """
    if init.n != g.n:
        raise ValueError("init and graph differ in node count")
    if init.d != params.d:
        raise ValueError(f"init has d={init.d}, params ask for d={params.d}")
    y = np.array(init.coords, dtype=np.float64)
    b = params.resolved_batch_size(g.n)
    m = 2 * b - 2 if params.negatives is None else params.negatives
    rng_neg = np.random.default_rng(np.random.SeedSequence([params.seed, 2**31]))
    opt_y = _Adam(y.shape, params)
    opt_tau = _Adam((), params)
    log_tau = math.log(params.tau_init if params.learnable_tau else params.tau)
    history = CneHistory()
    step = 0
    for epoch in range(params.epochs):
        losses = []
        batches = sample_epoch(g, b, params.seed, epoch)
        for bi, batch in enumerate(batches):
            batch = _sample_negatives(batch, m, rng_neg)
            tau = math.exp(log_tau) if params.learnable_tau else params.tau
            loss, grad, g_tau = infonce_batch_loss(y, batch, params, tau=tau)
            if not math.isfinite(loss) or not np.all(np.isfinite(grad)):
                raise FloatingPointError(f"non-finite loss or gradient at epoch {epoch}, batch {bi}")
            y -= opt_y.step(grad)
            if params.learnable_tau:
                log_tau -= float(opt_tau.step(np.float64(g_tau)))
            losses.append(loss)
            step += 1
            if callback is not None and callback_every and step % callback_every == 0:
                callback(epoch + (bi + 1) / len(batches), step, y)
        history.mean_loss.append(float(np.mean(losses)))
        history.tau.append(math.exp(log_tau) if params.learnable_tau else params.tau)
        log.debug("epoch %d  loss %.5f  tau %.4f", epoch + 1, history.mean_loss[-1], history.tau[-1])
        if callback is not None:
            callback(epoch + 1, step, y)
    metric = "cosine" if params.kernel == "cosine_temperature" else "euclidean"
    return Embedding(y, metric), history
