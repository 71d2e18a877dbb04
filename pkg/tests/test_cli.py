import re
import subprocess
import sys

import numpy as np
import pytest

from graphne import bench
from graphne.cli import main, svg_document
from graphne.graph import largest_connected_component, parse_edge_list, read_edge_list, read_labels
from graphne.init import Embedding, read_embedding
from graphne.metrics import EvalReport, evaluate

TRIANGLES = "0 1\n1 2\n0 2\n3 4\n4 5\n3 5\n2 3\n"


@pytest.fixture
def tri(tmp_path):
    p = tmp_path / "tri.edges"
    p.write_text(TRIANGLES)
    lab = tmp_path / "tri.labels"
    lab.write_text("".join(f"{i} {'ab'[i // 3]}\n" for i in range(6)))
    return p, lab


@pytest.fixture(scope="module")
def sbm_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("sbm")
    rc = main(["--seed", "1", "--quiet", "sbm", "--blocks", "40x3", "--p-in", "0.25", "--p-out", "0.01",
               "--edges-out", str(d / "g.edges"), "--labels-out", str(d / "g.labels")])
    assert rc == 0
    return d / "g.edges", d / "g.labels"


def run(*argv):
    return main(["--quiet", *map(str, argv)])


def test_layout_header_and_rows(tri, tmp_path):
    out = tmp_path / "lay.txt"
    assert run("layout", tri[0], "-o", out, "--iters", "200", "--exaggeration-iters", "50") == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "6 2 euclidean" and len(lines) == 7


def test_layout_loss_log(tri, tmp_path):
    log = tmp_path / "loss.csv"
    assert run("layout", tri[0], "-o", tmp_path / "l.txt", "--iters", "120", "--exaggeration-iters", "20",
               "--loss-log", log) == 0
    rows = log.read_text().splitlines()
    assert rows[0] == "iter,loss" and [r.split(",")[0] for r in rows[1:]] == ["50", "100", "120"]


def test_layout_deterministic_bytes(sbm_files, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for out in (a, b):
        assert run("--deterministic", "--seed", 7, "layout", sbm_files[0], "-o", out, "--iters", "300",
                   "--exaggeration-iters", "100") == 0
    assert a.read_bytes() == b.read_bytes()


def test_global_norm_changes_layout(tmp_path):
    star = tmp_path / "star.edges"
    # a star attached to a triangle, so degrees vary widely
    star.write_text("".join(f"0 {k}\n" for k in range(1, 12)) + "1 2\n2 3\n1 3\n")
    outs = []
    for extra in ([], ["--global-norm"]):
        out = tmp_path / f"s{len(outs)}.txt"
        assert run("layout", star, "-o", out, "--iters", "300", "--exaggeration-iters", "100", *extra) == 0
        outs.append(read_embedding(out).coords)
    assert not np.allclose(outs[0], outs[1])


def test_random_init_flag(tri, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    run("layout", tri[0], "-o", a, "--iters", "100", "--exaggeration-iters", "10")
    run("layout", tri[0], "-o", b, "--iters", "100", "--exaggeration-iters", "10", "--random-init")
    assert a.read_bytes() != b.read_bytes()


def test_embed_header_and_learned_tau(sbm_files, tmp_path):
    out, log = tmp_path / "e.txt", tmp_path / "train.csv"
    assert run("embed", sbm_files[0], "-o", out, "--epochs", "3", "--learn-tau", "--log", log) == 0
    n = read_edge_list(sbm_files[0]).n
    assert out.read_text().splitlines()[0] == f"{n} 128 cosine"
    rows = log.read_text().splitlines()
    assert rows[0] == "epoch,mean_loss,tau" and len(rows) == 4
    assert 0 < float(rows[-1].split(",")[2]) < 1


def test_embed_deterministic_bytes(sbm_files, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"e{k}.txt"
        assert run("--deterministic", "--seed", 3, "embed", sbm_files[0], "-o", out, "--epochs", "2",
                   "--d", "16") == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_eval_path_layout_recall_one(tmp_path):
    edges = tmp_path / "p.edges"
    n = 20
    edges.write_text("".join(f"{i} {i + 1}\n" for i in range(n - 1)))
    labels = tmp_path / "p.labels"
    labels.write_text("".join(f"{i} {'xy'[i * 2 // n]}\n" for i in range(n)))
    emb = tmp_path / "p.emb"
    emb.write_text(f"{n} 2 euclidean\n" + "".join(f"{i} 0\n" for i in range(n)))
    out = tmp_path / "row.csv"
    assert run("eval", edges, emb, labels, "-o", out) == 0
    assert out.read_text().split(",")[3] == "1.000000"


def test_eval_matches_library_and_is_repeatable(sbm_files, tmp_path, capsys):
    edges, labels = sbm_files
    emb = tmp_path / "lay.txt"
    run("layout", edges, "-o", emb, "--iters", "200", "--exaggeration-iters", "50")
    capsys.readouterr()
    rows = []
    for _ in range(2):
        assert run("--seed", 4, "--deterministic", "eval", edges, emb, labels, "--dataset", "sbm",
                   "--method", "tsne") == 0
        rows.append(capsys.readouterr().out)
    assert rows[0] == rows[1]
    g = read_edge_list(edges)
    g, lab, _ = largest_connected_component(g, read_labels(labels, g))
    expected = evaluate(g, read_embedding(emb), lab, seed=4).csv_row("sbm", "tsne", 2)
    assert rows[0].strip() == expected


def test_sbm_round_trip_and_determinism(tmp_path):
    paths = []
    for k in range(2):
        e, l = tmp_path / f"g{k}.edges", tmp_path / f"g{k}.labels"
        assert run("--seed", 5, "sbm", "--blocks", "30,20", "--p-in", "0.3", "--p-out", "0.02",
                   "--edges-out", e, "--labels-out", l) == 0
        paths.append((e, l))
    assert paths[0][0].read_bytes() == paths[1][0].read_bytes()
    g = read_edge_list(paths[0][0])
    text = paths[0][0].read_text()
    assert parse_edge_list(text) == g
    lab = read_labels(paths[0][1], g)
    assert lab.class_count == 2


def test_sbm_paper_configuration_is_accepted():
    # ten blocks of 8000 nodes; only the argument validation is exercised here
    from graphne.graph import parse_blocks
    assert parse_blocks("8000x10") == [8000] * 10


@pytest.mark.slow
def test_sbm_paper_configuration_runs(tmp_path):
    assert run("sbm", "--blocks", "8000x10", "--p-in", "2.5e-3", "--p-out", "5e-6",
               "--edges-out", tmp_path / "g.edges", "--labels-out", tmp_path / "g.labels") == 0


def test_knn_graph_command(tmp_path):
    vec = tmp_path / "v.txt"
    np.savetxt(vec, np.array([[0.0, 0], [1, 0], [10, 0], [11, 0]]))
    out = tmp_path / "k.edges"
    assert run("knn-graph", vec, "-k", 1, "-o", out) == 0
    assert out.read_text() == "0 1\n2 3\n"


# -- plot ---------------------------------------------------------------------------

def circles(doc):
    return re.findall(r'<circle cx="([-\d.]+)" cy="([-\d.]+)" r="2" fill="(#[0-9a-f]{6})"/>', doc)


def test_plot_three_points(tmp_path):
    emb = tmp_path / "e.txt"
    emb.write_text("3 2 euclidean\n0 0\n1 1\n2 0\n")
    out = tmp_path / "p.svg"
    assert run("plot", emb, "-o", out) == 0
    doc = out.read_text()
    got = circles(doc)
    assert len(got) == 3 and doc.count("<circle") == 3
    assert len({c for _, _, c in got}) == 1
    assert 'width="1000"' in doc


def test_plot_corners_within_margin():
    e = Embedding(np.array([[0.0, 0], [5, 5], [0, 5], [5, 0], [2, 3]]))
    pts = np.array([[float(x), float(y)] for x, y, _ in circles(svg_document(e))])
    assert pts.min() >= 50 - 1e-9 and pts.max() <= 950 + 1e-9
    np.testing.assert_allclose(sorted(pts[:4, 0]), [50, 50, 950, 950], atol=1e-3)


def test_plot_colors_by_label(tmp_path):
    emb = tmp_path / "e.txt"
    emb.write_text("4 2 euclidean\n0 0\n1 1\n2 0\n3 3\n")
    lab = tmp_path / "l.txt"
    lab.write_text("0 a\n1 b\n2 a\n3 c\n")
    out = tmp_path / "p.svg"
    assert run("plot", emb, "--labels", lab, "-o", out) == 0
    colors = [c for _, _, c in circles(out.read_text())]
    assert colors[0] == colors[2] and len(set(colors)) == 3


def test_plot_rejects_high_dimensional(tmp_path, capsys):
    emb = tmp_path / "e.txt"
    emb.write_text("2 3 cosine\n1 0 0\n0 1 0\n")
    assert main(["plot", str(emb), "-o", str(tmp_path / "p.svg")]) == 1


# -- errors ---------------------------------------------------------------------------

def test_errors_are_single_line(tmp_path, capsys):
    bad = tmp_path / "bad.edges"
    bad.write_text("0 1\n1 x\n")
    assert main(["layout", str(bad), "-o", str(tmp_path / "o.txt")]) == 1
    err = capsys.readouterr().err
    assert err.count("\n") == 1 and err.startswith("graphne: error: layout: read graph: line 2")


def test_missing_file(tmp_path, capsys):
    assert main(["eval", "nope.edges", "nope.emb", "nope.labels"]) == 1
    assert capsys.readouterr().err.count("\n") == 1


def test_console_entry_point(tri, tmp_path):
    out = tmp_path / "o.txt"
    proc = subprocess.run([sys.executable, "-m", "graphne", "--quiet", "layout", str(tri[0]), "-o", str(out),
                           "--iters", "60", "--exaggeration-iters", "10"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out.read_text().startswith("6 2 euclidean")
    proc = subprocess.run([sys.executable, "-m", "graphne", "layout", "missing.edges", "-o", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode != 0 and proc.stderr.count("\n") == 1


# -- bench ------------------------------------------------------------------------------

def fake_runs():
    vals = {0: (0.5, 0.8, 0.7), 1: (0.6, 0.9, 0.7), 2: (0.7, 1.0, 0.7)}
    runs = []
    for method, d in (("tsne", 2), ("cne128", 128)):
        for s, (r, k, lin) in vals.items():
            runs.append(bench.Run("toy", method, d, EvalReport(r, k, lin, "euclidean", s), 0.0))
    return runs


def test_bench_mean_std_arithmetic():
    rows = bench.summarize(fake_runs())
    _, _, _, mean, std, n = rows[0]
    np.testing.assert_allclose(mean, [0.6, 0.9, 0.7])
    np.testing.assert_allclose(std, [0.1, 0.1, 0.0], atol=1e-15)
    assert n == 3


def test_bench_tables_have_both_dimensions():
    csv = bench.summary_csv(fake_runs()).splitlines()
    assert csv[0] == ("dataset,method,d,recall_mean,recall_std,knn_acc_mean,knn_acc_std,"
                      "linear_acc_mean,linear_acc_std,runs")
    assert [r.split(",")[2] for r in csv[1:]] == ["2", "128"]
    text = bench.summary_text(fake_runs())
    assert "60.0 ± 10.0" in text and "90.0 ± 10.0" in text
    lines = text.splitlines()
    assert len({len(l) for l in lines[:2]}) == 1


def test_bench_config_parsing():
    cfg = bench.parse_config("datasets = cora, sbm:50x2:0.2:0.01  # comment\nmethods = tsne, cne16\n"
                             "cne.epochs = 3\n")
    assert cfg.datasets == ["cora", "sbm:50x2:0.2:0.01"]
    assert cfg.seeds == [0, 1, 2] and cfg.cne_epochs == 3
    assert [bench.method_dim(m) for m in cfg.methods] == [2, 16]
    with pytest.raises(ValueError):
        bench.parse_config("datasets = x\nmethods = umap\n")
    with pytest.raises(ValueError):
        bench.parse_config("speed = 3\n")


def test_bench_command_end_to_end(tmp_path, capsys):
    cfg = tmp_path / "bench.cfg"
    out = tmp_path / "bench.csv"
    cfg.write_text(f"datasets = sbm:40x3:0.25:0.01\nmethods = tsne, cne16\ntsne.iters = 150\n"
                   f"tsne.exaggeration_iters = 50\ncne.epochs = 2\noutput = {out}\n")
    assert main(["bench", str(cfg), "--runs", str(tmp_path / "runs.csv")]) == 0
    rows = out.read_text().splitlines()
    assert len(rows) == 3 and rows[1].split(",")[:3] == ["sbm:40x3:0.25:0.01", "tsne", "2"]
    assert rows[2].split(",")[-1] == "3"
    assert len((tmp_path / "runs.csv").read_text().splitlines()) == 7
    assert "±" in capsys.readouterr().out


def test_bench_missing_dataset_dir(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("GRAPHNE_DATA", raising=False)
    cfg = tmp_path / "bench.cfg"
    cfg.write_text("datasets = cora\n")
    assert main(["bench", str(cfg)]) == 1
    assert "GRAPHNE_DATA" in capsys.readouterr().err
