"""End-to-end recipes shared by the CLI, the benchmark and the demos.

Each recipe starts from a graph that is already reduced to its largest
connected component.
"""

from __future__ import annotations

import math
import os
from pathlib import Path

from .affinity import degree_normalized_affinity, global_normalized_affinity
from .cne import CneHistory, CneParams, run_cne
from .graph import Graph, LabelSet, largest_connected_component, read_edge_list, read_labels
from .init import Embedding, laplacian_eigenmaps, random_init, rescale_init
from .tsne import TsneParams, run_tsne

DATA_ENV = "GRAPHNE_DATA"


def tsne_layout(g: Graph, params: TsneParams | None = None, global_norm: bool = False,
                spectral: bool = True, loss_log: list | None = None) -> Embedding:
    """Affinities, initialization and t-SNE optimization in one call."""
    params = params or TsneParams()
    P = global_normalized_affinity(g) if global_norm else degree_normalized_affinity(g)
    if spectral:
        init = laplacian_eigenmaps(g, 2, seed=params.seed)
    else:
        init = random_init(g.n, 2, seed=params.seed)
    return run_tsne(P, init, params, loss_log=loss_log)


def cne_init_std(d: int) -> float:
    # rows of norm about 1, so Adam steps of size adam_lr are small angles
    return 1.0 / math.sqrt(d)


def cne_init(g: Graph, d: int, seed: int = 0, spectral: bool = True) -> Embedding:
    std = cne_init_std(d)
    if spectral:
        return rescale_init(laplacian_eigenmaps(g, d, seed=seed, target_std=None), std)
    return random_init(g.n, d, seed=seed, std=std)


def cne_embedding(g: Graph, params: CneParams | None = None, spectral: bool = True,
                  callback=None, callback_every: int | None = None) -> tuple[Embedding, CneHistory]:
    params = params or CneParams()
    init = cne_init(g, params.d, seed=params.seed, spectral=spectral)
    if params.kernel == "cauchy":
        init = rescale_init(init, 1e-4)
    return run_cne(g, params, init, callback=callback, callback_every=callback_every)


def data_dir(path=None) -> Path:
    path = path or os.environ.get(DATA_ENV)
    if not path:
        raise FileNotFoundError(f"no dataset directory: pass one or set {DATA_ENV}")
    return Path(path)


def load_dataset(name: str, path=None) -> tuple[Graph, LabelSet]:
    """Read ``<dir>/<name>.edges`` and ``<dir>/<name>.labels``, keep the LCC."""
    root = data_dir(path)
    edges, labels = root / f"{name}.edges", root / f"{name}.labels"
    for f in (edges, labels):
        if not f.is_file():
            raise FileNotFoundError(f"dataset file missing: {f}")
    g = read_edge_list(edges)
    g, lab, _ = largest_connected_component(g, read_labels(labels, g))
    return g, lab
