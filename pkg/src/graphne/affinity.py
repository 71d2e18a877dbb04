"""Graph-derived affinity matrices for graph t-SNE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import Graph


@dataclass(frozen=True)
class SparseAffinity:
    """Symmetric affinity matrix stored once per undirected edge (``i < j``)."""

    n: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    @property
    def total_mass(self) -> float:
        return 2.0 * float(np.sum(self.values))

    def to_csr(self) -> sp.csr_matrix:
        r = np.concatenate([self.rows, self.cols])
        c = np.concatenate([self.cols, self.rows])
        v = np.concatenate([self.values, self.values])
        return sp.csr_matrix((v, (r, c)), shape=(self.n, self.n))

    def scaled(self, factor: float) -> "SparseAffinity":
        return SparseAffinity(self.n, self.rows, self.cols, self.values * factor)

    def dumps(self) -> str:
        return "".join(
            f"{i} {j} {v:.17g}\n" for i, j, v in zip(self.rows, self.cols, self.values)
        )


def degree_normalized_affinity(g: Graph) -> SparseAffinity:
    """Row-normalize the adjacency matrix, symmetrize, divide by ``2n``.

    For an edge ``ij`` this gives ``p_ij = (1/k_i + 1/k_j) / (2n)``.  On a
    k-regular graph every entry is ``1/(nk)``, the usual kNN-graph affinity.
    """
    k = g.degrees
    if np.any(k == 0):
        raise ValueError("graph has isolated nodes; extract the largest connected component first")
    e = g.edges()
    i, j = e[:, 0], e[:, 1]
    values = (1.0 / k[i] + 1.0 / k[j]) / (2.0 * g.n)
    return SparseAffinity(g.n, i, j, values)


def global_normalized_affinity(g: Graph) -> SparseAffinity:
    """Adjacency divided by its total sum: ``1/(2|E|)`` on every edge."""
    e = g.edges()
    if len(e) == 0:
        raise ValueError("graph has no edges")
    values = np.full(len(e), 1.0 / (2.0 * len(e)))
    return SparseAffinity(g.n, e[:, 0], e[:, 1], values)
