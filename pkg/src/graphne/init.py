"""Embedding container, embedding files, and initializations."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import eigsh

from .graph import Graph

METRICS = ("euclidean", "cosine")
DENSE_EIGEN_LIMIT = 3000


class EigenSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Embedding:
    coords: np.ndarray
    metric: str = "euclidean"

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.coords.ndim != 2 or self.coords.shape[1] < 1:
            raise ValueError("coords must be an (n, d) array with d >= 1")
        if not np.all(np.isfinite(self.coords)):
            raise ValueError("embedding has non-finite entries")

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def d(self) -> int:
        return self.coords.shape[1]


def format_embedding(e: Embedding) -> str:
    lines = [f"{e.n} {e.d} {e.metric}\n"]
    lines.extend(" ".join(f"{v:.17g}" for v in row) + "\n" for row in e.coords)
    return "".join(lines)


def parse_embedding(text: str) -> Embedding:
    lines = text.splitlines()
    try:
        n, d, metric = lines[0].split()
        n, d = int(n), int(d)
    except (IndexError, ValueError):
        raise ValueError("bad embedding header, expected 'n d metric'") from None
    coords = np.array([[float(t) for t in line.split()] for line in lines[1:n + 1]], dtype=np.float64)
    if coords.shape != (n, d):
        raise ValueError(f"embedding body has shape {coords.shape}, header says ({n}, {d})")
    return Embedding(coords, metric)


def write_embedding(e: Embedding, path) -> None:
    Path(path).write_text(format_embedding(e), encoding="utf-8")


def read_embedding(path) -> Embedding:
    return parse_embedding(Path(path).read_text(encoding="utf-8"))


def random_init(n: int, d: int, seed: int = 0, std: float = 1e-4) -> Embedding:
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    rng = np.random.default_rng(seed)
    return Embedding(rng.normal(0.0, std, size=(n, d)))


def rescale_init(e: Embedding, target_std: float = 1e-4) -> Embedding:
    """Scale all coordinates by one factor so that column 0 has std ``target_std``."""
    std = np.std(e.coords[:, 0])
    if std == 0:
        raise ValueError("first column has zero variance")
    return Embedding(e.coords * (target_std / std), e.metric)


def _fix_signs(v: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return v * signs


def laplacian_eigenmaps(g: Graph, d: int, seed: int = 0, target_std: float | None = 1e-4) -> Embedding:
    """Laplacian Eigenmaps: the ``d`` smallest nontrivial solutions of ``L v = lam D v``.

    Columns are D-orthonormal, ordered by ascending eigenvalue, and signed so
    their largest-magnitude entry is positive.  If ``target_std`` is not None
    the result is passed through :func:`rescale_init`.
    """
    n = g.n
    if d < 1:
        raise ValueError("d must be positive")
    if n <= d + 1:
        warnings.warn(
            f"graph has {n} nodes, too few for {d} nontrivial eigenvectors; using random init",
            stacklevel=2,
        )
        e = random_init(n, d, seed)
        return e if target_std is None else rescale_init(e, target_std)
    vals, vecs = _generalized_eigs(g, d, seed)
    e = Embedding(_fix_signs(vecs))
    return e if target_std is None else rescale_init(e, target_std)


def _generalized_eigs(g: Graph, d: int, seed: int):
    A = g.adjacency()
    n = g.n
    if connected_components(A, directed=False)[0] != 1:
        raise ValueError("Laplacian Eigenmaps needs a connected graph")
    deg = g.degrees.astype(np.float64)
    s = 1.0 / np.sqrt(deg)
    M = sp.diags(s) @ A @ sp.diags(s)
    if n <= DENSE_EIGEN_LIMIT:
        lam, u = scipy.linalg.eigh(np.eye(n) - M.toarray(), subset_by_index=[0, d])
    else:
        # largest eigenvalues of the normalized adjacency = smallest of L_sym
        rng = np.random.default_rng(seed)
        mu, u = eigsh(M.tocsr(), k=d + 1, which="LA", v0=rng.standard_normal(n), tol=1e-10)
        order = np.argsort(-mu, kind="stable")
        lam, u = 1.0 - mu[order], u[:, order]
    lam, u = lam[1:], u[:, 1:]
    v = u * s[:, None]
    # residual of the generalized problem, relative to ||v||
    L = sp.diags(deg) - A
    res = np.linalg.norm(L @ v - (deg[:, None] * v) * lam, axis=0) / np.linalg.norm(v, axis=0)
    if np.any(res > 1e-6):
        raise EigenSolverError(f"eigensolver did not converge, max residual {res.max():.3g}")
    return lam, v
