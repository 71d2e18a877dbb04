"""Undirected simple graphs in CSR form, plus parsing, LCC extraction and generators."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist


class GraphFormatError(ValueError):
    """Raised for malformed edge-list or label documents."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected, unweighted simple graph.

    Every undirected edge is stored twice (once per endpoint).  Rows are
    sorted and free of duplicates and self-loops.
    """

    row_offsets: np.ndarray
    col_targets: np.ndarray
    original_ids: np.ndarray

    @property
    def n(self) -> int:
        return len(self.row_offsets) - 1

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.row_offsets)

    @property
    def n_edges(self) -> int:
        return len(self.col_targets) // 2

    def neighbors(self, i: int) -> np.ndarray:
        return self.col_targets[self.row_offsets[i]:self.row_offsets[i + 1]]

    def edges(self) -> np.ndarray:
        """Undirected edges as an (m, 2) array with ``i < j``, sorted lexicographically."""
        rows = np.repeat(np.arange(self.n), self.degrees)
        keep = rows < self.col_targets
        return np.column_stack([rows[keep], self.col_targets[keep]])

    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(len(self.col_targets))
        return sp.csr_matrix((data, self.col_targets, self.row_offsets), shape=(self.n, self.n))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_targets, other.col_targets)
            and np.array_equal(self.original_ids, other.original_ids)
        )

    @classmethod
    def from_edges(cls, n: int, edges, original_ids=None) -> "Graph":
        """Build a graph on ``n`` nodes; duplicates and self-loops are dropped."""
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if len(edges) and (edges.min() < 0 or edges.max() >= n):
            raise ValueError("edge endpoint out of range")
        edges = edges[edges[:, 0] != edges[:, 1]]
        both = np.concatenate([edges, edges[:, ::-1]])
        # unique over (row, col) keys gives sorted, duplicate-free rows
        keys = np.unique(both[:, 0] * n + both[:, 1])
        rows, cols = np.divmod(keys, n)
        row_offsets = np.zeros(n + 1, dtype=np.int64)
        np.add.at(row_offsets, rows + 1, 1)
        row_offsets = np.cumsum(row_offsets)
        if original_ids is None:
            original_ids = np.arange(n, dtype=np.int64)
        return cls(row_offsets, cols.astype(np.int64), np.asarray(original_ids, dtype=np.int64))


@dataclass(frozen=True, eq=False)
class LabelSet:
    labels: np.ndarray
    class_names: tuple = ()

    @property
    def class_count(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def __len__(self):
        return len(self.labels)

    def __eq__(self, other):
        if not isinstance(other, LabelSet):
            return NotImplemented
        return np.array_equal(self.labels, other.labels) and self.class_names == other.class_names


def validate_graph(g: Graph) -> None:
    """Raise ``ValueError`` if any structural invariant of ``g`` is violated."""
    ro, ct = g.row_offsets, g.col_targets
    if ro[0] != 0 or ro[-1] != len(ct) or np.any(np.diff(ro) < 0):
        raise ValueError("inconsistent row offsets")
    if len(ct) and (ct.min() < 0 or ct.max() >= g.n):
        raise ValueError("neighbor index out of range")
    if len(g.original_ids) != g.n:
        raise ValueError("original_ids length mismatch")
    rows = np.repeat(np.arange(g.n), g.degrees)
    if np.any(rows == ct):
        raise ValueError("self-loop present")
    same_row = rows[1:] == rows[:-1]
    if np.any(ct[1:][same_row] <= ct[:-1][same_row]):
        raise ValueError("row not strictly increasing")
    fwd = np.sort(rows * g.n + ct)
    bwd = np.sort(ct * g.n + rows)
    if not np.array_equal(fwd, bwd):
        raise ValueError("adjacency is not symmetric")


def _iter_tokens(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line.split()


def parse_edge_list(text: str) -> Graph:
    """Parse a whitespace-separated edge list.

    Node ids are compacted to ``0..n-1`` in order of first appearance; the
    source ids are kept in ``Graph.original_ids``.
    """
    index: dict[int, int] = {}
    pairs = []
    for lineno, tokens in _iter_tokens(text):
        if len(tokens) != 2:
            raise GraphFormatError(f"line {lineno}: expected two node ids, got {len(tokens)} tokens")
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise GraphFormatError(f"line {lineno}: node ids must be integers") from None
        if u < 0 or v < 0:
            raise GraphFormatError(f"line {lineno}: node ids must be non-negative")
        a = index.setdefault(u, len(index))
        b = index.setdefault(v, len(index))
        pairs.append((a, b))
    if not any(a != b for a, b in pairs):
        raise GraphFormatError("edge list contains no edges")
    g = Graph.from_edges(len(index), pairs, original_ids=list(index))
    # nodes that only carried self-loops are left isolated; LCC removes them
    return g


def read_edge_list(path) -> Graph:
    return parse_edge_list(Path(path).read_text(encoding="utf-8"))


def format_edge_list(g: Graph) -> str:
    ids = g.original_ids
    return "".join(f"{ids[i]} {ids[j]}\n" for i, j in g.edges())


def write_edge_list(g: Graph, path) -> None:
    Path(path).write_text(format_edge_list(g), encoding="utf-8")


def parse_labels(text: str, g: Graph) -> LabelSet:
    """Parse ``node_id label`` lines and align them with the nodes of ``g``.

    Label strings are mapped to dense integers in order of first appearance.
    """
    position = {int(o): i for i, o in enumerate(g.original_ids)}
    labels = np.full(g.n, -1, dtype=np.int64)
    names: dict[str, int] = {}
    for lineno, tokens in _iter_tokens(text):
        if len(tokens) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'node_id label'")
        try:
            node = int(tokens[0])
        except ValueError:
            raise GraphFormatError(f"line {lineno}: node id must be an integer") from None
        cls = names.setdefault(tokens[1], len(names))
        if node in position:
            labels[position[node]] = cls
    missing = np.flatnonzero(labels < 0)
    if len(missing):
        raise GraphFormatError(f"no label for node {g.original_ids[missing[0]]}")
    return _compact_labels(labels, tuple(names))


def read_labels(path, g: Graph) -> LabelSet:
    return parse_labels(Path(path).read_text(encoding="utf-8"), g)


def format_labels(labels: LabelSet, g: Graph) -> str:
    names = labels.class_names or tuple(str(c) for c in range(labels.class_count))
    return "".join(f"{o} {names[c]}\n" for o, c in zip(g.original_ids, labels.labels))


def _compact_labels(labels: np.ndarray, names: tuple = ()) -> LabelSet:
    used, dense = np.unique(labels, return_inverse=True)
    if names:
        names = tuple(names[c] for c in used)
    return LabelSet(dense.astype(np.int64), names)


def induced_subgraph(g: Graph, nodes: np.ndarray) -> tuple[Graph, np.ndarray]:
    """Subgraph on ``nodes`` (kept in ascending order) and the old->new index map (-1 = dropped)."""
    nodes = np.sort(np.asarray(nodes, dtype=np.int64))
    index_map = np.full(g.n, -1, dtype=np.int64)
    index_map[nodes] = np.arange(len(nodes))
    e = g.edges()
    keep = (index_map[e[:, 0]] >= 0) & (index_map[e[:, 1]] >= 0)
    sub = Graph.from_edges(len(nodes), index_map[e[keep]], g.original_ids[nodes])
    return sub, index_map


def largest_connected_component(g: Graph, labels: LabelSet | None = None):
    """Restrict ``g`` (and ``labels``) to its largest connected component.

    Ties between equally large components go to the one holding the smallest
    original node id.  Returns ``(graph, labels_or_None, index_map)``.
    """
    n_comp, comp = connected_components(g.adjacency(), directed=False)
    sizes = np.bincount(comp, minlength=n_comp)
    min_ids = np.full(n_comp, np.iinfo(np.int64).max)
    np.minimum.at(min_ids, comp, g.original_ids)
    best = np.lexsort((min_ids, -sizes))[0]
    sub, index_map = induced_subgraph(g, np.flatnonzero(comp == best))
    sub_labels = None
    if labels is not None:
        if len(labels) != g.n:
            raise ValueError("label count does not match graph")
        sub_labels = _compact_labels(labels.labels[index_map >= 0], labels.class_names)
    return sub, sub_labels, index_map


def parse_blocks(spec: str) -> list[int]:
    """Block sizes from ``1000x10`` (ten blocks of 1000) or ``500,300,200``."""
    spec = spec.strip()
    if "x" in spec:
        size, count = spec.split("x")
        return [int(size)] * int(count)
    return [int(s) for s in spec.split(",")]


def sbm_generate(block_sizes, p_in: float, p_out: float, seed: int = 0):
    """Sample a stochastic block model graph.

    Every unordered pair is an independent Bernoulli draw with ``p_in`` inside
    a block and ``p_out`` across blocks.  Row ``i`` draws its upper-triangular
    coins from its own stream ``SeedSequence([seed, i])`` so the result does
    not depend on how rows are scheduled.
    """
    block_sizes = [int(s) for s in block_sizes]
    if not block_sizes:
        raise ValueError("block_sizes must be non-empty")
    if any(s <= 0 for s in block_sizes):
        raise ValueError("block sizes must be positive")
    if not 0.0 <= p_out <= p_in <= 1.0:
        raise ValueError("need 0 <= p_out <= p_in <= 1")
    blocks = np.repeat(np.arange(len(block_sizes)), block_sizes)
    n = len(blocks)
    bounds = np.concatenate([[0], np.cumsum(block_sizes)])
    rows, cols = [], []
    for i in range(n - 1):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, i])))
        coins = rng.random(n - i - 1)
        # columns i+1 .. end_of_block use p_in, the rest p_out
        split = bounds[blocks[i] + 1] - i - 1
        hit = np.empty(len(coins), dtype=bool)
        hit[:split] = coins[:split] < p_in
        hit[split:] = coins[split:] < p_out
        j = np.flatnonzero(hit) + i + 1
        if len(j):
            rows.append(np.full(len(j), i))
            cols.append(j)
    if rows:
        edges = np.column_stack([np.concatenate(rows), np.concatenate(cols)])
    else:
        edges = np.empty((0, 2), dtype=np.int64)
    return Graph.from_edges(n, edges), LabelSet(blocks.astype(np.int64))


def knn_graph(vectors, k: int, block: int = 1024) -> Graph:
    """Exact Euclidean kNN graph, symmetrized by union.

    Distance ties are resolved in favour of the lower node index.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or len(x) < 2:
        raise ValueError("need an (n, p) array with n >= 2")
    if not np.all(np.isfinite(x)):
        raise ValueError("vectors must be finite")
    n = len(x)
    if k <= 0:
        raise ValueError("k must be positive")
    if k >= n:
        raise ValueError("k must be smaller than n")
    out = np.empty((n, k), dtype=np.int64)
    for start in range(0, n, block):
        d = cdist(x[start:start + block], x, "sqeuclidean")
        r = np.arange(d.shape[0])
        d[r, r + start] = np.inf
        out[start:start + block] = np.argsort(d, axis=1, kind="stable")[:, :k]
    rows = np.repeat(np.arange(n), k)
    return Graph.from_edges(n, np.column_stack([rows, out.ravel()]))
