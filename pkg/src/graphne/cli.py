"""Command-line interface: ``graphne <command> ...``.

Every command exits with status 0 on success.  Any failure prints a single
``graphne: error: <stage>: <message>`` line to stderr and exits with 1.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys
import warnings
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import pipeline
from .cne import KERNELS, CneParams
from .graph import (
    Graph,
    LabelSet,
    format_labels,
    knn_graph,
    largest_connected_component,
    parse_blocks,
    parse_labels,
    read_edge_list,
    read_labels,
    sbm_generate,
    write_edge_list,
)
from .init import Embedding, read_embedding, write_embedding
from .metrics import CSV_HEADER, evaluate
from .tsne import TsneParams

log = logging.getLogger("graphne")

PALETTE = (
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c", "#98df8a", "#d62728", "#ff9896",
    "#9467bd", "#c5b0d5", "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f", "#c7c7c7",
    "#bcbd22", "#dbdb8d", "#17becf", "#9edae5",
)
DEFAULT_COLOR = "#404040"
VIEWPORT = 1000.0
MARGIN = 0.05


class StageError(Exception):
    def __init__(self, stage: str, err: BaseException):
        super().__init__(f"{stage}: {err}")


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as err:  # noqa: BLE001 - re-raised with the stage name
        raise StageError(name, err) from err


def load_graph(path, labels_path=None) -> tuple[Graph, LabelSet | None]:
    with stage("read graph"):
        g = read_edge_list(path)
        labels = read_labels(labels_path, g) if labels_path else None
    with stage("largest component"):
        g, labels, _ = largest_connected_component(g, labels)
    return g, labels


# -- commands -----------------------------------------------------------------

def cmd_layout(args) -> None:
    g, _ = load_graph(args.edges)
    params = TsneParams(total_iters=args.iters, exaggeration_iters=args.exaggeration_iters,
                        bh_theta=args.theta, seed=args.seed)
    trace: list = []
    with stage("t-SNE"):
        e = pipeline.tsne_layout(g, params, global_norm=args.global_norm,
                                 spectral=not args.random_init, loss_log=trace)
    with stage("write output"):
        write_embedding(e, args.output)
        if args.loss_log:
            rows = ["iter,loss"] + [f"{it},{loss:.10g}" for it, loss in trace]
            Path(args.loss_log).write_text("\n".join(rows) + "\n", encoding="utf-8")
    log.info("layout of %d nodes written to %s", g.n, args.output)


def cmd_embed(args) -> None:
    g, _ = load_graph(args.edges)
    with stage("parameters"):
        params = CneParams(d=args.d, kernel=args.kernel, tau=args.tau, learnable_tau=args.learn_tau,
                           epochs=args.epochs, batch_size=args.batch_size, negatives=args.negatives,
                           adam_lr=args.lr, seed=args.seed)
    with stage("CNE"):
        e, history = pipeline.cne_embedding(g, params, spectral=not args.random_init)
    with stage("write output"):
        write_embedding(e, args.output)
        if args.log:
            Path(args.log).write_text(history.csv(), encoding="utf-8")
    log.info("embedding of %d nodes written to %s (final tau %.4g)", g.n, args.output, history.tau[-1])


def cmd_eval(args) -> None:
    g, labels = load_graph(args.edges, args.labels)
    with stage("read embedding"):
        e = read_embedding(args.embedding)
    with stage("evaluate"):
        report = evaluate(g, e, labels, seed=args.seed)
    row = report.csv_row(args.dataset, args.method, e.d)
    out = (CSV_HEADER + "\n" if args.header else "") + row + "\n"
    if args.output:
        with stage("write output"):
            Path(args.output).write_text(out, encoding="utf-8")
    else:
        sys.stdout.write(out)


def cmd_sbm(args) -> None:
    with stage("generate"):
        g, labels = sbm_generate(parse_blocks(args.blocks), args.p_in, args.p_out, seed=args.seed)
    with stage("write output"):
        write_edge_list(g, args.edges_out)
        Path(args.labels_out).write_text(format_labels(labels, g), encoding="utf-8")
    log.info("SBM with %d nodes and %d edges", g.n, g.n_edges)


def cmd_knn_graph(args) -> None:
    with stage("read vectors"):
        x = np.loadtxt(args.vectors, ndmin=2)
    with stage("kNN graph"):
        g = knn_graph(x, args.k)
    with stage("write output"):
        write_edge_list(g, args.output)


def svg_document(e: Embedding, labels: LabelSet | None = None) -> str:
    if e.d != 2:
        raise ValueError(f"plot needs a 2-d embedding, got d={e.d}")
    xy = np.asarray(e.coords, dtype=np.float64)
    lo = xy.min(axis=0)
    span = float((xy.max(axis=0) - lo).max())
    inner = VIEWPORT * (1 - 2 * MARGIN)
    scale = inner / span if span > 0 else 0.0
    # centre the (aspect preserving) point cloud inside the margin box
    offset = VIEWPORT * MARGIN + (inner - scale * (xy.max(axis=0) - lo)) / 2
    px = offset[0] + scale * (xy[:, 0] - lo[0])
    py = VIEWPORT - (offset[1] + scale * (xy[:, 1] - lo[1]))
    if labels is not None and len(labels) != e.n:
        raise ValueError("label count does not match embedding")
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{VIEWPORT:g}" height="{VIEWPORT:g}" '
        f'viewBox="0 0 {VIEWPORT:g} {VIEWPORT:g}">',
        f'<rect width="{VIEWPORT:g}" height="{VIEWPORT:g}" fill="white"/>',
    ]
    for i in range(e.n):
        color = DEFAULT_COLOR if labels is None else PALETTE[labels.labels[i] % len(PALETTE)]
        lines.append(f'<circle cx="{px[i]:.3f}" cy="{py[i]:.3f}" r="2" fill="{color}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def cmd_plot(args) -> None:
    with stage("read embedding"):
        e = read_embedding(args.embedding)
    labels = None
    if args.labels:
        if args.edges:
            _, labels = load_graph(args.edges, args.labels)
        else:
            with stage("read labels"):
                # without a graph, node ids are the embedding row indices
                ids = Graph.from_edges(e.n, np.empty((0, 2), dtype=np.int64))
                labels = parse_labels(Path(args.labels).read_text(encoding="utf-8"), ids)
    with stage("render"):
        doc = svg_document(e, labels)
    with stage("write output"):
        Path(args.output).write_text(doc, encoding="utf-8")


def cmd_bench(args) -> None:
    from . import bench

    with stage("read config"):
        cfg = bench.read_config(args.config)
        if args.data_dir:
            cfg.data_dir = args.data_dir
    with stage("bench"):
        runs = bench.run_bench(cfg)
    with stage("write output"):
        csv, text = bench.summary_csv(runs), bench.summary_text(runs)
        Path(args.output or cfg.output).write_text(csv, encoding="utf-8")
        if args.runs:
            Path(args.runs).write_text(bench.runs_csv(runs), encoding="utf-8")
    if not args.quiet:
        sys.stdout.write(text)


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--deterministic", action="store_true",
                        help="single-threaded numerics for byte-identical outputs")
    common.add_argument("--threads", type=int, default=None, metavar="N", help="numeric thread limit")
    common.add_argument("--quiet", action="store_true", help="only report errors")

    p = argparse.ArgumentParser(prog="graphne", parents=[common],
                                description="Graph t-SNE layouts and graph CNE embeddings.")
    sub = p.add_subparsers(dest="command", required=True)
    # global flags are accepted after the command too; SUPPRESS keeps the
    # value given before the command when the subcommand does not repeat it
    sub_common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    for action in common._actions:
        kw = {"help": argparse.SUPPRESS}
        if isinstance(action, argparse._StoreTrueAction):
            sub_common.add_argument(*action.option_strings, action="store_true", **kw)
        else:
            sub_common.add_argument(*action.option_strings, type=action.type, metavar=action.metavar, **kw)

    s = sub.add_parser("layout", parents=[sub_common], help="2-d graph t-SNE layout")
    s.add_argument("edges")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--global-norm", action="store_true", help="uniform 1/(2|E|) affinities")
    s.add_argument("--random-init", action="store_true", help="random instead of spectral start")
    s.add_argument("--iters", type=int, default=750)
    s.add_argument("--exaggeration-iters", type=int, default=250)
    s.add_argument("--theta", type=float, default=0.5)
    s.add_argument("--loss-log", help="CSV file with columns iter,loss")
    s.set_defaults(func=cmd_layout)

    s = sub.add_parser("embed", parents=[sub_common], help="graph CNE embedding")
    s.add_argument("edges")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--d", type=int, default=128)
    s.add_argument("--kernel", choices=KERNELS, default="cosine_temperature")
    s.add_argument("--tau", type=float, default=0.05)
    s.add_argument("--learn-tau", action="store_true", help="learn tau, starting from 0.5")
    s.add_argument("--epochs", type=int, default=100)
    s.add_argument("--batch-size", type=int, default=None)
    s.add_argument("--negatives", type=int, default=None)
    s.add_argument("--lr", type=float, default=1e-3)
    s.add_argument("--random-init", action="store_true")
    s.add_argument("--log", help="CSV file with columns epoch,mean_loss,tau")
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("eval", parents=[sub_common], help="recall, kNN and linear accuracy")
    s.add_argument("edges")
    s.add_argument("embedding")
    s.add_argument("labels")
    s.add_argument("--dataset", default="data")
    s.add_argument("--method", default="embedding")
    s.add_argument("--header", action="store_true")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("sbm", parents=[sub_common], help="stochastic block model graph")
    s.add_argument("--blocks", required=True, help="e.g. 1000x10 or 500,300,200")
    s.add_argument("--p-in", type=float, required=True)
    s.add_argument("--p-out", type=float, required=True)
    s.add_argument("--edges-out", required=True)
    s.add_argument("--labels-out", required=True)
    s.set_defaults(func=cmd_sbm)

    s = sub.add_parser("knn-graph", parents=[sub_common], help="symmetric kNN graph of vectors")
    s.add_argument("vectors", help="text file, one whitespace-separated vector per line")
    s.add_argument("-k", type=int, required=True)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_knn_graph)

    s = sub.add_parser("plot", parents=[sub_common], help="SVG scatter plot of a 2-d embedding")
    s.add_argument("embedding")
    s.add_argument("--labels")
    s.add_argument("--edges", help="graph the embedding was computed from (aligns labels)")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_plot)

    s = sub.add_parser("bench", parents=[sub_common], help="benchmark table over seeds 0,1,2")
    s.add_argument("config", help="flat 'key = value' file")
    s.add_argument("--data-dir")
    s.add_argument("-o", "--output", help="summary CSV (overrides the config)")
    s.add_argument("--runs", help="per-run CSV rows")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr, force=True)
    threads = 1 if args.deterministic else args.threads
    try:
        with warnings.catch_warnings():
            if args.quiet:
                warnings.simplefilter("ignore")
            with threadpool_limits(limits=threads) if threads else contextlib.nullcontext():
                args.func(args)
    except StageError as err:
        _fail(args.command, str(err))
        return 1
    except Exception as err:  # noqa: BLE001 - last resort, keep the one-line contract
        _fail(args.command, f"{type(err).__name__}: {err}")
        return 1
    return 0


def _fail(command: str, message: str) -> None:
    message = " ".join(message.split())
    print(f"graphne: error: {command}: {message}", file=sys.stderr)
