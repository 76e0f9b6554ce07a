"""Readers and writers for the TSV file formats.

All formats are tab-separated, one record per line, with ``#``-prefixed
comment lines and blank lines ignored. Floating-point values are written
with 17 significant digits, which round-trips float64 exactly and keeps
outputs byte-deterministic.

* traffic:      ``node<TAB>c_in<TAB>c_out`` — a column may be ``-`` on
                every line, marking that side as absent (see conserve_flow)
* strengths:    ``node<TAB>strength``
* transitions:  ``src<TAB>dst<TAB>probability``
* edge counts:  ``src<TAB>dst<TAB>count``
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .engine import EdgeTransitionTable, TrafficMarginals
from .errors import ParseError
from .metrics import EvalReport
from .simulate import EdgeCounts


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _data_lines(path: Path):
    with open(path, "rt", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line.split("\t") if "\t" in line else line.split()


def _parse_node(token: str, n: int, path: Path, lineno: int) -> int:
    try:
        node = int(token)
    except ValueError:
        raise ParseError(f"non-integer node id {token!r}", path, lineno)
    if not 0 <= node < n:
        raise ParseError(f"node id {node} out of range [0, {n})", path, lineno)
    return node


def read_traffic(path, n: int) -> TrafficMarginals:
    """Read per-node marginals; unlisted nodes default to zero.

    A column consisting solely of ``-`` marks that side as absent. Mixing
    ``-`` and numbers within one column is an error.
    """
    path = Path(path)
    c_in = np.zeros(n, dtype=np.float64)
    c_out = np.zeros(n, dtype=np.float64)
    seen = np.zeros(n, dtype=bool)
    missing = {"c_in": 0, "c_out": 0}
    rows = 0
    for lineno, parts in _data_lines(path):
        if len(parts) != 3:
            raise ParseError(f"expected 3 fields, got {len(parts)}", path, lineno)
        node = _parse_node(parts[0], n, path, lineno)
        if seen[node]:
            raise ParseError(f"duplicate entry for node {node}", path, lineno)
        seen[node] = True
        rows += 1
        for token, name, arr in ((parts[1], "c_in", c_in),
                                 (parts[2], "c_out", c_out)):
            if token == "-":
                missing[name] += 1
                continue
            try:
                value = float(token)
            except ValueError:
                raise ParseError(f"bad count {token!r}", path, lineno)
            if not np.isfinite(value) or value < 0:
                raise ParseError(f"counts must be nonnegative, got {value!r}",
                                 path, lineno)
            arr[node] = value
    sides = {"c_in": c_in, "c_out": c_out}
    for name, cnt in missing.items():
        if cnt == 0:
            continue
        if cnt != rows:
            raise ParseError(
                f"column {name} mixes '-' and numbers; a side is either "
                "fully present or fully absent", path)
        sides[name] = None
    try:
        return TrafficMarginals(c_in=sides["c_in"], c_out=sides["c_out"])
    except ValueError as exc:
        raise ParseError(str(exc), path) from exc


def write_traffic(t: TrafficMarginals, path) -> None:
    n = t.n
    with open(path, "wt", encoding="utf-8") as fh:
        for i in range(n):
            ci = "-" if t.c_in is None else _fmt(t.c_in[i])
            co = "-" if t.c_out is None else _fmt(t.c_out[i])
            fh.write(f"{i}\t{ci}\t{co}\n")


def read_strengths(path, n: int) -> np.ndarray:
    """Read a full strength vector; every node must appear exactly once."""
    path = Path(path)
    lam = np.full(n, np.nan)
    for lineno, parts in _data_lines(path):
        if len(parts) != 2:
            raise ParseError(f"expected 2 fields, got {len(parts)}", path, lineno)
        node = _parse_node(parts[0], n, path, lineno)
        if not np.isnan(lam[node]):
            raise ParseError(f"duplicate entry for node {node}", path, lineno)
        try:
            lam[node] = float(parts[1])
        except ValueError:
            raise ParseError(f"bad strength {parts[1]!r}", path, lineno)
    if np.isnan(lam).any():
        missing = int(np.nonzero(np.isnan(lam))[0][0])
        raise ParseError(f"no strength for node {missing}", path)
    return lam


def write_strengths(lam: np.ndarray, path) -> None:
    with open(path, "wt", encoding="utf-8") as fh:
        for i, v in enumerate(np.asarray(lam, dtype=np.float64)):
            fh.write(f"{i}\t{_fmt(v)}\n")


def write_transitions(table: EdgeTransitionTable, path) -> None:
    with open(path, "wt", encoding="utf-8") as fh:
        for s, d, p in zip(table.src.tolist(), table.dst.tolist(),
                           table.p.tolist()):
            fh.write(f"{s}\t{d}\t{_fmt(p)}\n")


def read_transitions(path, n: int) -> EdgeTransitionTable:
    path = Path(path)
    src: list[int] = []
    dst: list[int] = []
    p: list[float] = []
    for lineno, parts in _data_lines(path):
        if len(parts) != 3:
            raise ParseError(f"expected 3 fields, got {len(parts)}", path, lineno)
        src.append(_parse_node(parts[0], n, path, lineno))
        dst.append(_parse_node(parts[1], n, path, lineno))
        try:
            p.append(float(parts[2]))
        except ValueError:
            raise ParseError(f"bad probability {parts[2]!r}", path, lineno)
    try:
        return EdgeTransitionTable(n=n, src=np.array(src, dtype=np.int64),
                                   dst=np.array(dst, dtype=np.int64),
                                   p=np.array(p, dtype=np.float64))
    except ValueError as exc:
        raise ParseError(str(exc), path) from exc


def write_edge_counts(counts: EdgeCounts, path) -> None:
    with open(path, "wt", encoding="utf-8") as fh:
        for s, d, c in zip(counts.src.tolist(), counts.dst.tolist(),
                           counts.counts.tolist()):
            fh.write(f"{s}\t{d}\t{c}\n")


def read_edge_counts(path, n: int) -> EdgeCounts:
    path = Path(path)
    src: list[int] = []
    dst: list[int] = []
    cnt: list[int] = []
    seen: set[tuple[int, int]] = set()
    for lineno, parts in _data_lines(path):
        if len(parts) != 3:
            raise ParseError(f"expected 3 fields, got {len(parts)}", path, lineno)
        s = _parse_node(parts[0], n, path, lineno)
        d = _parse_node(parts[1], n, path, lineno)
        if (s, d) in seen:
            raise ParseError(f"duplicate edge ({s}, {d})", path, lineno)
        seen.add((s, d))
        try:
            c = int(parts[2])
        except ValueError:
            raise ParseError(f"bad count {parts[2]!r}", path, lineno)
        if c < 0:
            raise ParseError("counts must be nonnegative", path, lineno)
        src.append(s)
        dst.append(d)
        cnt.append(c)
    return EdgeCounts(n=n, src=np.array(src, dtype=np.int64),
                      dst=np.array(dst, dtype=np.int64),
                      counts=np.array(cnt, dtype=np.int64))


def write_eval_report(report: EvalReport, tsv_path, json_path=None) -> None:
    """Per-node TSV (one row per evaluated node) plus a JSON summary."""
    cols = ["node", "out_degree", "weight"]
    for name in report.methods:
        cols += [f"kl_{name}", f"rank_disp_{name}"]
    with open(tsv_path, "wt", encoding="utf-8") as fh:
        fh.write("# " + "\t".join(cols) + "\n")
        for row, node in enumerate(report.nodes.tolist()):
            cells = [str(node), str(int(report.out_degree[row])),
                     _fmt(report.weights[row])]
            for name in report.methods:
                cells.append(_fmt(report.kl[name][row]))
                cells.append(_fmt(report.rank_disp[name][row]))
            fh.write("\t".join(cells) + "\n")
    if json_path is not None:
        doc = {
            "metadata": report.metadata,
            "methods": report.methods,
            "summary": report.summary,
            "per_degree": {
                name: {str(deg): stats for deg, stats in by_deg.items()}
                for name, by_deg in report.per_degree.items()
            },
        }
        with open(json_path, "wt", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)
            fh.write("\n")
