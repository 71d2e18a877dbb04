"""Benchmark harness: every (dataset, method) cell over seeds 0, 1, 2.

Config files are flat ``key = value`` text, ``#`` starts a comment::

    datasets = cora, citeseer          # <data_dir>/<name>.edges and .labels
    # or synthetic: sbm:<blocks>:<p_in>:<p_out>, e.g. sbm:200x5:0.05:0.001
    methods = tsne, cne128, cne2       # cne<d> is graph CNE in d dimensions
    data_dir = /path/to/graphs
    seeds = 0, 1, 2
    tsne.iters = 750
    cne.epochs = 100
    output = bench.csv

The seed drives the initialization, the optimizer and the train/test split
together.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import pipeline
from .cne import CneParams
from .graph import largest_connected_component, parse_blocks, sbm_generate
from .metrics import EvalReport, evaluate
from .tsne import TsneParams

log = logging.getLogger(__name__)

METRIC_NAMES = ("recall", "knn_acc", "linear_acc")


@dataclass
class BenchConfig:
    datasets: list = field(default_factory=list)
    methods: list = field(default_factory=lambda: ["tsne", "cne128"])
    seeds: list = field(default_factory=lambda: [0, 1, 2])
    data_dir: str | None = None
    tsne_iters: int = 750
    tsne_exaggeration_iters: int = 250
    cne_epochs: int = 100
    cne_tau: float = 0.05
    output: str = "bench.csv"


_KEYS = {
    "datasets": ("datasets", lambda v: [s.strip() for s in v.split(",") if s.strip()]),
    "methods": ("methods", lambda v: [s.strip() for s in v.split(",") if s.strip()]),
    "seeds": ("seeds", lambda v: [int(s) for s in v.split(",") if s.strip()]),
    "data_dir": ("data_dir", str),
    "tsne.iters": ("tsne_iters", int),
    "tsne.exaggeration_iters": ("tsne_exaggeration_iters", int),
    "cne.epochs": ("cne_epochs", int),
    "cne.tau": ("cne_tau", float),
    "output": ("output", str),
}


def parse_config(text: str) -> BenchConfig:
    cfg = BenchConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        attr, conv = _KEYS[key]
        setattr(cfg, attr, conv(value))
    if not cfg.datasets:
        raise ValueError("config lists no datasets")
    for m in cfg.methods:
        method_dim(m)
    return cfg


def read_config(path) -> BenchConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def method_dim(method: str) -> int:
    if method == "tsne":
        return 2
    if method.startswith("cne") and method[3:].isdigit():
        return int(method[3:])
    raise ValueError(f"unknown method {method!r} (use tsne or cne<d>)")


def load(name: str, cfg: BenchConfig):
    if name.startswith("sbm:"):
        _, blocks, p_in, p_out = name.split(":")
        g, labels = sbm_generate(parse_blocks(blocks), float(p_in), float(p_out), seed=0)
        g, labels, _ = largest_connected_component(g, labels)
        return g, labels
    return pipeline.load_dataset(name, cfg.data_dir)


@dataclass
class Run:
    dataset: str
    method: str
    d: int
    report: EvalReport
    seconds: float


def run_one(g, labels, method: str, seed: int, cfg: BenchConfig):
    d = method_dim(method)
    if method == "tsne":
        params = TsneParams(total_iters=cfg.tsne_iters, exaggeration_iters=cfg.tsne_exaggeration_iters,
                            seed=seed)
        e = pipeline.tsne_layout(g, params)
    else:
        e, _ = pipeline.cne_embedding(g, CneParams(d=d, tau=cfg.cne_tau, epochs=cfg.cne_epochs, seed=seed))
    return evaluate(g, e, labels, seed=seed)


def run_bench(cfg: BenchConfig) -> list[Run]:
    runs = []
    for name in cfg.datasets:
        g, labels = load(name, cfg)
        log.info("%s: %d nodes, %d edges", name, g.n, g.n_edges)
        for method in cfg.methods:
            for seed in cfg.seeds:
                t = time.perf_counter()
                report = run_one(g, labels, method, seed, cfg)
                dt = time.perf_counter() - t
                runs.append(Run(name, method, method_dim(method), report, dt))
                log.info("%s %s seed %d: recall %.4f knn %.4f linear %.4f (%.1f s)", name, method, seed,
                         report.recall, report.knn_accuracy, report.linear_accuracy, dt)
    return runs


def _values(r: Run) -> tuple:
    return r.report.recall, r.report.knn_accuracy, r.report.linear_accuracy


def summarize(runs: list[Run]) -> list[tuple]:
    """Rows ``(dataset, method, d, means, stds, n)`` in first-seen order.

    The standard deviation uses ``ddof=1`` (sample std over seeds); a single
    run reports 0.
    """
    cells: dict[tuple, list] = {}
    for r in runs:
        cells.setdefault((r.dataset, r.method, r.d), []).append(_values(r))
    rows = []
    for (dataset, method, d), vals in cells.items():
        v = np.array(vals, dtype=np.float64)
        std = v.std(axis=0, ddof=1) if len(v) > 1 else np.zeros(v.shape[1])
        rows.append((dataset, method, d, v.mean(axis=0), std, len(v)))
    return rows


def summary_csv(runs: list[Run]) -> str:
    head = ["dataset", "method", "d"]
    for m in METRIC_NAMES:
        head += [f"{m}_mean", f"{m}_std"]
    lines = [",".join(head + ["runs"])]
    for dataset, method, d, mean, std, n in summarize(runs):
        vals = [f"{x:.6f}" for pair in zip(mean, std) for x in pair]
        lines.append(",".join([dataset, method, str(d)] + vals + [str(n)]))
    return "\n".join(lines) + "\n"


def summary_text(runs: list[Run]) -> str:
    """Aligned table with percentages, ``mean ± std``."""
    head = ["dataset", "method", "d", "recall", "kNN acc", "linear acc"]
    body = []
    for dataset, method, d, mean, std, _ in summarize(runs):
        body.append([dataset, method, str(d)] + [f"{100 * m:.1f} ± {100 * s:.1f}" for m, s in zip(mean, std)])
    widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
    fmt = lambda r: "  ".join(c.ljust(w) if i < 2 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
    lines = [fmt(head), "  ".join("-" * w for w in widths)] + [fmt(r) for r in body]
    return "\n".join(line.rstrip() for line in lines) + "\n"


def runs_csv(runs: list[Run]) -> str:
    from .metrics import CSV_HEADER

    return CSV_HEADER + "\n" + "".join(r.report.csv_row(r.dataset, r.method, r.d) + "\n" for r in runs)
