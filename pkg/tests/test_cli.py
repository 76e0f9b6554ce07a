import json

import numpy as np
import pytest

import choicerank as cr
from choicerank import fileio
from choicerank.cli import main


@pytest.fixture
def star_files(tmp_path):
    graph = tmp_path / "graph.tsv"
    graph.write_text("0\t1\n0\t2\n")
    traffic = tmp_path / "traffic.tsv"
    traffic.write_text("0\t0\t10\n1\t7\t0\n2\t3\t0\n")
    return graph, traffic


def run(argv):
    return main([str(a) for a in argv])


class TestRank:
    def test_star_end_to_end(self, star_files, tmp_path, capsys):
        graph, traffic = star_files
        out = tmp_path / "lam.tsv"
        trans = tmp_path / "p.tsv"
        code = run(["rank", "--graph", graph, "--traffic", traffic,
                    "--out", out, "--out-transitions", trans])
        assert code == 0
        lam = fileio.read_strengths(out, 3)
        np.testing.assert_allclose(lam, [1.0, 4 / 3, 2 / 3], atol=1e-6)
        table = fileio.read_transitions(trans, 3)
        np.testing.assert_allclose(table.p, [2 / 3, 1 / 3], atol=1e-8)
        err = capsys.readouterr().err
        assert "iteration 1" in err and "seconds_per_iteration" in err

    def test_max_iter_zero_nonconverged_exit(self, star_files, tmp_path):
        graph, traffic = star_files
        out = tmp_path / "lam.tsv"
        code = run(["rank", "--graph", graph, "--traffic", traffic,
                    "--out", out, "--max-iter", 0])
        assert code == 5
        np.testing.assert_array_equal(fileio.read_strengths(out, 3), np.ones(3))

    def test_best_effort_suppresses_failure(self, star_files, tmp_path):
        graph, traffic = star_files
        code = run(["rank", "--graph", graph, "--traffic", traffic,
                    "--out", tmp_path / "lam.tsv", "--max-iter", 0,
                    "--best-effort"])
        assert code == 0

    def test_unknown_node_id_parse_error(self, star_files, tmp_path):
        graph, _ = star_files
        bad = tmp_path / "bad.tsv"
        bad.write_text("9\t1\t1\n")
        code = run(["rank", "--graph", graph, "--traffic", bad,
                    "--out", tmp_path / "lam.tsv"])
        assert code == 3

    def test_sink_with_departures_exit_4(self, tmp_path):
        graph = tmp_path / "g.tsv"
        graph.write_text("0\t1\n")
        traffic = tmp_path / "t.tsv"
        traffic.write_text("0\t0\t1\n1\t1\t1\n")
        code = run(["rank", "--graph", graph, "--traffic", traffic,
                    "--out", tmp_path / "lam.tsv"])
        assert code == 4

    def test_conserve_flow_flag(self, tmp_path):
        graph = tmp_path / "g.tsv"
        graph.write_text("0\t1\n1\t0\n")
        traffic = tmp_path / "t.tsv"
        traffic.write_text("0\t4\t-\n1\t4\t-\n")
        out = tmp_path / "lam.tsv"
        assert run(["rank", "--graph", graph, "--traffic", traffic,
                    "--out", out]) == 3
        assert run(["rank", "--graph", graph, "--traffic", traffic,
                    "--out", out, "--conserve-flow"]) == 0


class TestSubcommands:
    def test_simulate_writes_counts_and_traffic(self, star_files, tmp_path):
        graph, _ = star_files
        lam = tmp_path / "lam.tsv"
        fileio.write_strengths(np.array([1.0, 4 / 3, 2 / 3]), lam)
        counts_out = tmp_path / "counts.tsv"
        traffic_out = tmp_path / "sim_traffic.tsv"
        code = run(["simulate", "--graph", graph, "--strengths", lam,
                    "--trajectories", 100, "--length", 1, "--start", 0,
                    "--seed", 5, "--out-counts", counts_out,
                    "--out-traffic", traffic_out])
        assert code == 0
        counts = fileio.read_edge_counts(counts_out, 3)
        assert counts.total == 100
        t = fileio.read_traffic(traffic_out, 3)
        assert t.c_out[0] == 100

    def test_baseline_traffic(self, star_files, tmp_path):
        graph, traffic = star_files
        out = tmp_path / "q.tsv"
        assert run(["baseline", "--graph", graph, "--method", "traffic",
                    "--traffic", traffic, "--out", out]) == 0
        table = fileio.read_transitions(out, 3)
        np.testing.assert_allclose(table.p, [0.7, 0.3])

    def test_baseline_uniform_and_pagerank(self, star_files, tmp_path):
        graph, _ = star_files
        for method in ("uniform", "pagerank"):
            out = tmp_path / f"{method}.tsv"
            assert run(["baseline", "--graph", graph, "--method", method,
                        "--out", out]) == 0
            fileio.read_transitions(out, 3)

    def test_evaluate(self, star_files, tmp_path):
        graph, _ = star_files
        counts = tmp_path / "counts.tsv"
        counts.write_text("0\t1\t7\n0\t2\t3\n")
        est = tmp_path / "est.tsv"
        est.write_text("0\t1\t0.7\n0\t2\t0.3\n")
        report = tmp_path / "report.tsv"
        summary = tmp_path / "summary.json"
        assert run(["evaluate", "--graph", graph, "--truth", counts,
                    "--estimate", f"exact={est}", "--out-report", report,
                    "--out-summary", summary]) == 0
        doc = json.loads(summary.read_text())
        assert doc["summary"]["exact"]["kl"]["weighted_mean"] == 0.0

    def test_check_reports_and_json(self, tmp_path, capsys):
        graph = tmp_path / "g.tsv"
        src = [0, 0, 1, 1, 2, 2, 3, 4, 5, 5, 6, 6, 6, 6]
        dst = [1, 2, 2, 5, 3, 4, 4, 0, 0, 6, 0, 1, 2, 5]
        graph.write_text("".join(f"{s}\t{d}\n" for s, d in zip(src, dst)))
        traffic = tmp_path / "t.tsv"
        traffic.write_text("".join(f"{i}\t1\t1\n" for i in range(7)))
        js = tmp_path / "check.json"
        assert run(["check", "--graph", graph, "--traffic", traffic,
                    "--json", js]) == 0
        out = capsys.readouterr().out
        assert "well-posed:     False" in out
        doc = json.loads(js.read_text())
        assert doc["ml_well_posed"] is False
        assert [3, 4] in doc["hypergraph_components"]

    def test_reorder_roundtrip(self, tmp_path):
        graph = tmp_path / "g.tsv"
        graph.write_text("1\t1\n0\t0\n1\t0\n0\t1\n")
        out = tmp_path / "h.tsv"
        assert run(["reorder", "--graph", graph, "--out", out]) == 0
        lines = [tuple(map(int, ln.split("\t")))
                 for ln in out.read_text().splitlines()]
        assert lines == [(0, 0), (1, 0), (1, 1), (0, 1)]

    def test_remap_roundtrip(self, tmp_path):
        raw = tmp_path / "named.tsv"
        raw.write_text("alice\tbob\nbob\tcarol\n")
        dense = tmp_path / "dense.tsv"
        mapping = tmp_path / "map.tsv"
        assert run(["remap", "--in", raw, "--out", dense,
                    "--mapping", mapping]) == 0
        assert dense.read_text() == "0\t1\n1\t2\n"
        lam = tmp_path / "lam.tsv"
        lam.write_text("0\t1.5\n1\t2.5\n2\t3.5\n")
        named = tmp_path / "lam_named.tsv"
        assert run(["remap", "--decode", "--in", lam, "--out", named,
                    "--mapping", mapping]) == 0
        assert named.read_text().splitlines()[0] == "alice\t1.5"

    def test_weighted_rank(self, tmp_path):
        graph = tmp_path / "g.tsv"
        graph.write_text("0\t1\t3.0\n0\t2\t1.0\n")
        traffic = tmp_path / "t.tsv"
        traffic.write_text("0\t0\t10\n1\t7\t0\n2\t3\t0\n")
        out = tmp_path / "lam.tsv"
        trans = tmp_path / "p.tsv"
        assert run(["rank", "--graph", graph, "--weighted", "--traffic",
                    traffic, "--out", out, "--out-transitions", trans]) == 0
        table = fileio.read_transitions(trans, 3)
        g = cr.load_edge_list(graph, weighted=True)
        lam = fileio.read_strengths(out, 3)
        expect = cr.transition_probabilities(g, lam)
        np.testing.assert_allclose(table.p, expect.p, rtol=1e-12)

    def test_binary_graph_roundtrip(self, star_files, tmp_path):
        graph, traffic = star_files
        cache = tmp_path / "g.bin"
        assert run(["reorder", "--graph", graph, "--out", cache,
                    "--binary"]) == 0
        out = tmp_path / "lam.tsv"
        assert run(["rank", "--graph", cache, "--binary-graph",
                    "--traffic", traffic, "--out", out]) == 0
        lam = fileio.read_strengths(out, 3)
        np.testing.assert_allclose(lam, [1.0, 4 / 3, 2 / 3], atol=1e-6)

    def test_help_exits_zero(self, capsys):
        for argv in (["--help"], ["rank", "--help"], ["simulate", "--help"],
                     ["baseline", "--help"], ["evaluate", "--help"],
                     ["check", "--help"], ["reorder", "--help"],
                     ["remap", "--help"]):
            with pytest.raises(SystemExit) as exc:
                run(argv)
            assert exc.value.code == 0
            capsys.readouterr()


class TestDeterminismAndOrdering:
    def test_rank_agrees_across_edge_orders(self, tmp_path):
        rng = np.random.default_rng(91)
        n = 30
        src = list(range(n))
        dst = [(i + 1) % n for i in range(n)]
        have = set(zip(src, dst))
        while len(src) < 120:
            s, d = int(rng.integers(n)), int(rng.integers(n))
            if (s, d) not in have:
                have.add((s, d))
                src.append(s)
                dst.append(d)
        g = cr.DirectedGraph(n, src, dst)
        counts = rng.integers(0, 30, g.m)
        graph_a = tmp_path / "a.tsv"
        graph_a.write_text("".join(f"{s}\t{d}\n" for s, d in zip(src, dst)))
        h = cr.hilbert_reorder(g)
        graph_b = tmp_path / "b.tsv"
        graph_b.write_text("".join(
            f"{s}\t{d}\n" for s, d in zip(h.src.tolist(), h.dst.tolist())))
        traffic = tmp_path / "t.tsv"
        c_in = np.bincount(g.dst, weights=counts, minlength=n)
        c_out = np.bincount(g.src, weights=counts, minlength=n)
        fileio.write_traffic(cr.TrafficMarginals(c_in=c_in, c_out=c_out), traffic)
        out_a = tmp_path / "lam_a.tsv"
        out_b = tmp_path / "lam_b.tsv"
        assert run(["rank", "--graph", graph_a, "--traffic", traffic,
                    "--out", out_a]) == 0
        assert run(["rank", "--graph", graph_b, "--traffic", traffic,
                    "--out", out_b]) == 0
        lam_a = fileio.read_strengths(out_a, n)
        lam_b = fileio.read_strengths(out_b, n)
        np.testing.assert_allclose(lam_a, lam_b, rtol=0, atol=1e-9)
