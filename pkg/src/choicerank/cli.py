"""Command-line interface.

One binary, subcommand style. All randomness is seeded via ``--seed`` and
thread counts are explicit (default 1), so identical invocations produce
byte-identical output files. Data goes to files; progress and timing go to
standard error.

Exit codes: 0 success, 2 usage, 3 parse error, 4 model inconsistency,
5 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import baselines as bl
from . import diagnostics, engine, fileio, simulate
from .errors import (ChoiceRankError, ModelInconsistencyError, ParseError,
                     SinkEncountered)
from .metrics import evaluate
from .graph import (DirectedGraph, load_binary_cache, load_edge_list,
                    save_binary_cache)
from .hilbert import hilbert_reorder

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_INCONSISTENT = 4
EXIT_NO_CONVERGENCE = 5


def _add_graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True, help="edge list (TSV or binary cache)")
    p.add_argument("--weighted", action="store_true",
                   help="edge list has a third weight column")
    p.add_argument("--nodes", type=int, default=None,
                   help="node count override (default: 1 + max id)")
    p.add_argument("--binary-graph", action="store_true",
                   help="read --graph as a binary cache")


def _load_graph(args) -> DirectedGraph:
    if args.binary_graph:
        return load_binary_cache(args.graph)
    return load_edge_list(args.graph, weighted=args.weighted,
                          num_nodes=args.nodes)


def _load_traffic(args, g: DirectedGraph) -> engine.TrafficMarginals:
    t = fileio.read_traffic(args.traffic, g.n)
    if not t.is_full:
        if not args.conserve_flow:
            raise ParseError(
                "traffic file provides only one side; pass --conserve-flow "
                "to fill the other by flow conservation", args.traffic)
        t = engine.conserve_flow(t)
    return t


def cmd_rank(args) -> int:
    g = _load_graph(args)
    t = _load_traffic(args, g)
    prior = engine.PriorConfig(alpha=args.alpha, beta=args.beta)

    def progress(iteration, delta):
        print(f"iteration {iteration} delta {delta:.6e}", file=sys.stderr)

    started = time.perf_counter()
    report = engine.fit(g, t, prior, tol=args.tol, max_iter=args.max_iter,
                        threads=args.threads, progress=progress)
    elapsed = time.perf_counter() - started
    per_iter = elapsed / max(report.iterations, 1)
    print(f"iterations={report.iterations} final_delta={report.final_delta:.6e} "
          f"seconds_per_iteration={per_iter:.6f} converged={report.converged}",
          file=sys.stderr)
    fileio.write_strengths(report.strengths, args.out)
    if args.out_transitions:
        table = engine.transition_probabilities(g, report.strengths)
        fileio.write_transitions(table, args.out_transitions)
    if not report.converged and not args.best_effort:
        print(f"did not converge within {args.max_iter} iterations "
              "(use --best-effort to accept)", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_simulate(args) -> int:
    g = _load_graph(args)
    if (args.strengths is None) == (args.strengths_dist is None):
        raise ParseError("pass exactly one of --strengths / --strengths-dist")
    if args.strengths is not None:
        lam = fileio.read_strengths(args.strengths, g.n)
    else:
        kind, _, param = args.strengths_dist.partition(":")
        if kind != "lognormal":
            raise ParseError(f"unknown strengths distribution {kind!r}")
        sigma = float(param) if param else 1.0
        root = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(args.seed)))
        lam = root.lognormal(mean=0.0, sigma=sigma, size=g.n)
    start = args.start if args.start == "uniform" else int(args.start)
    if args.length is None and args.stop_probability is None:
        raise ParseError("pass one of --length / --stop-probability")
    spec = simulate.TrajectorySpec(
        num_trajectories=args.trajectories, length=args.length,
        stop_probability=args.stop_probability, start=start, seed=args.seed)
    counts = simulate.sample_trajectories(
        g, lam, spec, allow_early_stop=args.allow_early_stop,
        threads=args.threads)
    fileio.write_edge_counts(counts, args.out_counts)
    if args.out_traffic:
        fileio.write_traffic(simulate.aggregate_marginals(counts),
                             args.out_traffic)
    if args.out_strengths:
        fileio.write_strengths(lam, args.out_strengths)
    return EXIT_OK


def cmd_baseline(args) -> int:
    g = _load_graph(args)
    if args.method == "traffic":
        if not args.traffic:
            raise ParseError("the traffic baseline needs --traffic")
        t = fileio.read_traffic(args.traffic, g.n)
        if t.c_in is None:
            raise ParseError("the traffic baseline needs the c_in column",
                             args.traffic)
        table = bl.baseline_traffic(g, t)
    elif args.method == "pagerank":
        table = bl.baseline_pagerank(g, damping=args.damping)
    else:
        table = bl.baseline_uniform(g)
    fileio.write_transitions(table, args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    g = _load_graph(args)
    truth = fileio.read_edge_counts(args.truth, g.n)
    estimates = {}
    for item in args.estimate:
        name, _, path = item.partition("=")
        if not path:
            raise ParseError(f"--estimate wants NAME=PATH, got {item!r}")
        estimates[name] = fileio.read_transitions(path, g.n)
    report = evaluate(truth, estimates)
    fileio.write_eval_report(report, args.out_report, args.out_summary)
    return EXIT_OK


def cmd_check(args) -> int:
    g = _load_graph(args)
    t = _load_traffic(args, g)
    diag = diagnostics.diagnose(g, t)
    print(f"alternative-set hypergraph connected: {diag.hypergraph_connected}")
    if not diag.hypergraph_connected:
        parts = ", ".join(str(sorted(p)) for p in diag.hypergraph_parts)
        print(f"  components: {parts}")
    print(f"marginals feasible:                   {diag.flow_feasible}")
    print(f"comparison graph strongly connected:  "
          f"{diag.comparison_graph_strongly_connected}")
    print(f"prior-free estimation well-posed:     {diag.ml_well_posed}")
    if diag.witness:
        print(f"witness: {diag.witness}")
    for note in diag.notes:
        print(f"note: {note}")
    if args.json:
        doc = {
            "hypergraph_connected": diag.hypergraph_connected,
            "flow_feasible": diag.flow_feasible,
            "comparison_graph_strongly_connected":
                diag.comparison_graph_strongly_connected,
            "ml_well_posed": diag.ml_well_posed,
            "witness": diag.witness,
            "hypergraph_components": [sorted(p) for p in diag.hypergraph_parts],
            "notes": diag.notes,
        }
        if diag.comparison_check is not None and \
                diag.comparison_check.scale_up_set is not None:
            doc["scale_up_set"] = sorted(diag.comparison_check.scale_up_set)
        if diag.flow_check is not None and diag.flow_check.cut_origin_side:
            doc["cut_origin_side"] = sorted(diag.flow_check.cut_origin_side)
        with open(args.json, "wt", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)
            fh.write("\n")
    return EXIT_OK


def cmd_reorder(args) -> int:
    g = _load_graph(args)
    h = hilbert_reorder(g)
    if args.binary:
        save_binary_cache(h, args.out)
    else:
        with open(args.out, "wt", encoding="utf-8") as fh:
            if h.weight is None:
                for s, d in zip(h.src.tolist(), h.dst.tolist()):
                    fh.write(f"{s}\t{d}\n")
            else:
                for s, d, w in zip(h.src.tolist(), h.dst.tolist(),
                                   h.weight.tolist()):
                    fh.write(f"{s}\t{d}\t{format(w, '.17g')}\n")
    return EXIT_OK


def cmd_remap(args) -> int:
    if args.decode:
        if not args.mapping:
            raise ParseError("--decode needs --mapping")
        id_to_name: dict[int, str] = {}
        with open(args.mapping, "rt", encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                name, _, idx = line.rpartition("\t")
                id_to_name[int(idx)] = name
        with open(args.infile, "rt", encoding="utf-8") as fin, \
                open(args.out, "wt", encoding="utf-8") as fout:
            for line in fin:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    fout.write(line + "\n")
                    continue
                first, sep, rest = line.partition("\t")
                fout.write(id_to_name[int(first)] + sep + rest + "\n")
        return EXIT_OK
    if not args.mapping:
        raise ParseError("encode mode needs --mapping to write the id table")
    ids: dict[str, int] = {}
    out_lines = []
    with open(args.infile, "rt", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            if len(parts) < 2:
                raise ParseError("expected at least src and dst",
                                 args.infile, lineno)
            row = [str(ids.setdefault(parts[0], len(ids))),
                   str(ids.setdefault(parts[1], len(ids)))]
            row += parts[2:]
            out_lines.append("\t".join(row))
    with open(args.out, "wt", encoding="utf-8") as fh:
        fh.write("\n".join(out_lines) + ("\n" if out_lines else ""))
    with open(args.mapping, "wt", encoding="utf-8") as fh:
        for name, idx in ids.items():
            fh.write(f"{name}\t{idx}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="choicerank",
        description="Infer edge transition probabilities on a directed "
                    "graph from per-node traffic counts.")
    sub = p.add_subparsers(dest="command", required=True)

    rank = sub.add_parser("rank", help="fit strengths from marginal traffic")
    _add_graph_args(rank)
    rank.add_argument("--traffic", required=True)
    rank.add_argument("--alpha", type=float, default=2.0)
    rank.add_argument("--beta", type=float, default=1.0)
    rank.add_argument("--tol", type=float, default=1e-8)
    rank.add_argument("--max-iter", type=int, default=10000)
    rank.add_argument("--threads", type=int, default=1)
    rank.add_argument("--conserve-flow", action="store_true",
                      help="fill a '-' traffic column by flow conservation")
    rank.add_argument("--best-effort", action="store_true",
                      help="exit 0 even without convergence")
    rank.add_argument("--out", required=True, help="strengths TSV")
    rank.add_argument("--out-transitions", default=None)
    rank.set_defaults(func=cmd_rank)

    sim = sub.add_parser("simulate", help="sample trajectories under known strengths")
    _add_graph_args(sim)
    sim.add_argument("--strengths", "--lambda", dest="strengths",
                     default=None, help="strengths TSV")
    sim.add_argument("--strengths-dist", "--lambda-dist",
                     dest="strengths_dist", default=None,
                     help="draw strengths, e.g. lognormal:1.0")
    sim.add_argument("--trajectories", type=int, required=True)
    sim.add_argument("--length", type=int, default=None)
    sim.add_argument("--stop-probability", type=float, default=None)
    sim.add_argument("--start", default="uniform",
                     help="'uniform' or a node id")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--threads", type=int, default=1)
    sim.add_argument("--allow-early-stop", action="store_true",
                     help="truncate walks at nodes with no outgoing edges")
    sim.add_argument("--out-counts", required=True)
    sim.add_argument("--out-traffic", default=None,
                     help="also write aggregated marginals")
    sim.add_argument("--out-strengths", default=None,
                     help="also write the strengths used")
    sim.set_defaults(func=cmd_simulate)

    base = sub.add_parser("baseline", help="heuristic transition estimates")
    _add_graph_args(base)
    base.add_argument("--method", required=True,
                      choices=["traffic", "pagerank", "uniform"])
    base.add_argument("--traffic", default=None)
    base.add_argument("--damping", type=float, default=0.85)
    base.add_argument("--out", required=True)
    base.set_defaults(func=cmd_baseline)

    ev = sub.add_parser(
        "evaluate", help="score estimates against edge counts",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="report columns (TSV, one row per node with outgoing "
               "traffic):\n"
               "  node           node id\n"
               "  out_degree     number of alternatives at the node\n"
               "  weight         observed departure count (summary weight)\n"
               "  kl_NAME        KL divergence truth vs estimate, natural "
               "log\n"
               "  rank_disp_NAME normalized rank displacement in [0, 1)\n"
               "the JSON summary holds choice-weighted mean and p5/p25/"
               "median/p75/p95\nper method, plus a per-out-degree breakdown; "
               "single-alternative nodes are\nexcluded from displacement "
               "summaries (the metric is identically zero there).")
    _add_graph_args(ev)
    ev.add_argument("--truth", required=True, help="edge-count TSV")
    ev.add_argument("--estimate", action="append", required=True,
                    metavar="NAME=PATH")
    ev.add_argument("--out-report", required=True, help="per-node TSV")
    ev.add_argument("--out-summary", default=None, help="summary JSON")
    ev.set_defaults(func=cmd_evaluate)

    chk = sub.add_parser("check", help="well-posedness diagnostics")
    _add_graph_args(chk)
    chk.add_argument("--traffic", required=True)
    chk.add_argument("--conserve-flow", action="store_true")
    chk.add_argument("--json", default=None, help="machine-readable report")
    chk.set_defaults(func=cmd_check)

    ro = sub.add_parser("reorder", help="rewrite edges in Hilbert curve order")
    _add_graph_args(ro)
    ro.add_argument("--out", required=True)
    ro.add_argument("--binary", action="store_true",
                    help="write a binary cache instead of TSV")
    ro.set_defaults(func=cmd_reorder)

    rm = sub.add_parser("remap", help="translate string node ids to dense ids")
    rm.add_argument("--in", dest="infile", required=True)
    rm.add_argument("--out", required=True)
    rm.add_argument("--mapping", default=None,
                    help="mapping TSV (written in encode mode, read in decode)")
    rm.add_argument("--decode", action="store_true",
                    help="translate the first column back to string ids")
    rm.set_defaults(func=cmd_remap)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ModelInconsistencyError, SinkEncountered) as exc:
        print(f"inconsistent input: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except ChoiceRankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
