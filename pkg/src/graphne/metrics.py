"""Neighbor recall, kNN accuracy and linear accuracy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .graph import Graph, LabelSet
from .init import Embedding

BLOCK = 512


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    test: np.ndarray
    seed: int = 0


@dataclass(frozen=True)
class EvalReport:
    recall: float
    knn_accuracy: float
    linear_accuracy: float
    metric_used: str
    seed: int

    def csv_row(self, dataset: str, method: str, d: int) -> str:
        return (f"{dataset},{method},{d},{self.recall:.6f},{self.knn_accuracy:.6f},"
                f"{self.linear_accuracy:.6f},{self.seed}")


CSV_HEADER = "dataset,method,d,recall,knn_acc,linear_acc,seed"


def make_split(n: int, train_fraction: float = 0.9, seed: int = 0) -> Split:
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(np.floor(train_fraction * n + 0.5))
    return Split(np.sort(perm[:n_train]), np.sort(perm[n_train:]), seed)


def _prepared(e: Embedding) -> np.ndarray:
    x = np.asarray(e.coords, dtype=np.float64)
    if e.metric == "cosine":
        norms = np.linalg.norm(x, axis=1)
        if np.any(norms == 0):
            raise ValueError("cosine metric is undefined for zero vectors")
        x = x / norms[:, None]
    return x


def _distances(q: np.ndarray, r: np.ndarray, metric: str) -> np.ndarray:
    if metric == "cosine":
        return 1.0 - q @ r.T
    return cdist(q, r, "sqeuclidean")


def _k_nearest(dist: np.ndarray, k: np.ndarray) -> list[np.ndarray]:
    """Per row, the ``k[row]`` column indices of smallest distance; ties -> lower index."""
    kmax = int(k.max())
    part = np.partition(dist, kmax - 1, axis=1)[:, :kmax]
    part.sort(axis=1)
    thr = part[np.arange(len(k)), k - 1]
    out = []
    for row, t, ki in zip(dist, thr, k):
        cand = np.flatnonzero(row <= t)
        order = np.lexsort((cand, row[cand]))
        out.append(cand[order[:ki]])
    return out


def neighbor_recall(g: Graph, e: Embedding) -> float:
    """Average fraction of each node's graph neighbors among its ``k_i`` embedding neighbors.

    ``k_i`` is the node's degree.  The node itself is never its own neighbor.
    """
    if g.n != e.n:
        raise ValueError(f"graph has {g.n} nodes, embedding has {e.n}")
    x = _prepared(e)
    deg = g.degrees
    if np.any(deg == 0):
        raise ValueError("neighbor recall needs every node to have a neighbor")
    total = 0.0
    for start in range(0, g.n, BLOCK):
        stop = min(start + BLOCK, g.n)
        d = _distances(x[start:stop], x, e.metric)
        r = np.arange(stop - start)
        d[r, r + start] = np.inf
        for i, nn in zip(range(start, stop), _k_nearest(d, deg[start:stop])):
            hits = np.intersect1d(nn, g.neighbors(i), assume_unique=True).size
            total += hits / deg[i]
    return total / g.n


def knn_predict(e: Embedding, labels: LabelSet, split: Split, k: int = 10) -> np.ndarray:
    """Majority vote of the ``k`` nearest training nodes for every test node.

    Among tied classes the one met first in distance order wins, i.e. the
    class of the nearest neighbor when it is among the tied ones.
    """
    if len(labels) != e.n:
        raise ValueError("labels and embedding differ in size")
    if k > len(split.train):
        raise ValueError("k exceeds the number of training nodes")
    x = _prepared(e)
    y = labels.labels
    xtr = x[split.train]
    pred = np.empty(len(split.test), dtype=np.int64)
    n_cls = labels.class_count
    for start in range(0, len(split.test), BLOCK):
        q = split.test[start:start + BLOCK]
        d = _distances(x[q], xtr, e.metric)
        nn = _k_nearest(d, np.full(len(q), k))
        for row, idx in enumerate(nn):
            votes = y[split.train[idx]]
            counts = np.bincount(votes, minlength=n_cls)
            tied = np.flatnonzero(counts == counts.max())
            pred[start + row] = votes[np.isin(votes, tied)][0]
    return pred


def knn_accuracy(e: Embedding, labels: LabelSet, split: Split, k: int = 10) -> float:
    pred = knn_predict(e, labels, split, k)
    return float(np.mean(pred == labels.labels[split.test]))


def standardize(train: np.ndarray, other: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = train.mean(axis=0)
    sd = train.std(axis=0)
    scale = np.where(sd > 0, sd, 1.0)
    a = (train - mu) / scale
    b = (other - mu) / scale
    a[:, sd == 0] = 0.0
    b[:, sd == 0] = 0.0
    return a, b


def fit_softmax_regression(x: np.ndarray, y: np.ndarray, n_classes: int,
                           tol: float = 1e-2, max_iter: int = 10000) -> np.ndarray:
    """Unpenalized multinomial logistic regression by full-batch gradient descent.

    Minimizes the mean cross-entropy; stops when the gradient's max-norm
    drops below ``tol``.  Returns weights of shape (p + 1, classes), bias last.
    """
    n = len(x)
    xb = np.hstack([x, np.ones((n, 1))])
    onehot = np.eye(n_classes)[y]
    # softmax Hessian is bounded by 0.5 * X^T X / n
    lipschitz = 0.5 * np.linalg.eigvalsh(xb.T @ xb / n)[-1]
    step = 1.0 / lipschitz
    w = np.zeros((xb.shape[1], n_classes))
    for _ in range(max_iter):
        logits = xb @ w
        logits -= logits.max(axis=1, keepdims=True)
        prob = np.exp(logits)
        prob /= prob.sum(axis=1, keepdims=True)
        grad = xb.T @ (prob - onehot) / n
        if np.abs(grad).max() < tol:
            break
        w -= step * grad
    return w


def linear_accuracy(e: Embedding, labels: LabelSet, split: Split) -> float:
    """Test accuracy of unpenalized softmax regression on standardized features."""
    if len(labels) != e.n:
        raise ValueError("labels and embedding differ in size")
    y = labels.labels
    ytr = y[split.train]
    if len(np.unique(ytr)) < 2:
        raise ValueError("training split holds a single class")
    x = _prepared(e)
    xtr, xte = standardize(x[split.train], x[split.test])
    w = fit_softmax_regression(xtr, ytr, labels.class_count)
    logits = np.hstack([xte, np.ones((len(xte), 1))]) @ w
    return float(np.mean(np.argmax(logits, axis=1) == y[split.test]))


def evaluate(g: Graph, e: Embedding, labels: LabelSet, seed: int = 0) -> EvalReport:
    split = make_split(g.n, 0.9, seed)
    return EvalReport(
        recall=float(neighbor_recall(g, e)),
        knn_accuracy=knn_accuracy(e, labels, split),
        linear_accuracy=linear_accuracy(e, labels, split),
        metric_used=e.metric,
        seed=seed,
    )
