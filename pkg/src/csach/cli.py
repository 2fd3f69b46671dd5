"""``csach`` command line.

CSV goes to stdout, diagnostics to stderr.  Node ids on the command line
and in files are 1-based, as in DIMACS.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .graph import (
    INF,
    TOLERANCE,
    Graph,
    GraphFormatError,
    all_pairs_oracle,
    dijkstra_sssp,
    format_weight,
    gen_random_graph,
    load_dimacs,
)
from .hierarchy import (
    DEFAULT_SETTLE_LIMIT,
    ContractionHierarchy,
    Ordering,
    build_ch,
    deserialize_ch,
    serialize_ch,
    verify_updown_property,
)
from .query import (
    bidir_dijkstra_ch,
    bidir_dijkstra_distances,
    csa_ch_distances,
    csa_ch_many_to_many,
    csa_ch_query,
)
from .rng import SplitMix64
from .timetable import csa_earliest_arrival, load_timetable_csv, reconstruct_journey

ALGORITHMS = ("dijkstra", "bidir-dijkstra-ch", "csa-ch", "csa-ch-m2m")
BENCH_FIELDS = ("instance", "pair", "source", "target", "algorithm",
                "wall_ns", "arcs_scanned", "labels_updated", "distance")


class CLIError(Exception):
    pass


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _writer(out):
    return csv.writer(out, lineterminator="\n")


def _read(path: str) -> str:
    try:
        with open(path) as f:
            return f.read()
    except OSError as e:
        raise CLIError(f"cannot read {path}: {e.strerror}") from None


def _is_ch(text: str) -> bool:
    for line in text.splitlines():
        parts = line.split()
        if parts and parts[0] != "c":
            return parts[0] == "ch"
    return False


def _ordering(value: str):
    """Ordering name or a comma list of 0-based ranks per node."""
    try:
        return Ordering(value)
    except ValueError:
        pass
    try:
        return [int(x) for x in value.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"ordering must be one of {', '.join(o.value for o in Ordering)} or a rank list") from None


def _int_list(value: str) -> list[int]:
    try:
        return [int(x) for x in value.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}") from None


def _nodes(values: Sequence[str], n: int, what: str) -> list[int]:
    out = []
    for v in values:
        for tok in v.split(","):
            if not tok:
                continue
            try:
                i = int(tok)
            except ValueError:
                raise CLIError(f"{what}: bad node id {tok!r}") from None
            if not 1 <= i <= n:
                raise CLIError(f"{what}: unknown node {i} (graph has nodes 1..{n})")
            out.append(i - 1)
    if not out:
        raise CLIError(f"{what}: no nodes given")
    return out


def _load_hierarchy(path: str, ordering, settle_limit: int) -> ContractionHierarchy:
    text = _read(path)
    if _is_ch(text):
        return deserialize_ch(text)
    return build_ch(load_dimacs(text), ordering, settle_limit)


def _path_str(nodes: Sequence[int]) -> str:
    return "->".join(str(v + 1) for v in nodes)


# ---------------------------------------------------------------------------
# subcommands


def cmd_preprocess(args, out) -> int:
    g = load_dimacs(_read(args.graph))
    t0 = time.perf_counter_ns()
    ch = build_ch(g, args.ordering, args.settle_limit)
    build_ns = time.perf_counter_ns() - t0
    with open(args.out, "w") as f:
        f.write(serialize_ch(ch))
    w = _writer(out)
    w.writerow(("nodes", "arcs", "shortcuts", "up_arcs", "down_arcs", "build_ms"))
    w.writerow((ch.node_count, g.arc_count, ch.shortcut_count, ch.scan.up_count,
                ch.scan.down_count, f"{build_ns / 1e6:.3f}"))
    _log(f"wrote {args.out}")
    return 0


def cmd_query(args, out) -> int:
    ch = _load_hierarchy(args.ch, Ordering.EDGE_DIFFERENCE, DEFAULT_SETTLE_LIMIT)
    n = ch.node_count
    sources = _nodes(args.sources, n, "--from")
    targets = _nodes(args.targets, n, "--to")
    w = _writer(out)
    w.writerow(("source", "target", "distance") + (("path",) if args.paths else ()))
    if args.algo == "csa-ch-m2m":
        table = csa_ch_many_to_many(ch, sources, targets, tol=args.tolerance)
        rows = {(s, t): table.path(ch, i, j)
                for i, s in enumerate(table.departures) for j, t in enumerate(table.arrivals)}
    for s in sources:
        for t in targets:
            if args.algo == "csa-ch":
                r = csa_ch_query(ch, s, t, tol=args.tolerance)
            elif args.algo == "bidir-dijkstra-ch":
                r = bidir_dijkstra_ch(ch, s, t)
            elif args.algo == "csa-ch-m2m":
                r = rows[(s, t)]
            else:
                dm = dijkstra_sssp(ch.base, s)
                d = dm.dist[t]
                nodes = [] if d == INF else [s] + [a.target for a in dm.path_to(ch.base, t)]
                w.writerow((s + 1, t + 1, format_weight(d)) + ((_path_str(nodes),) if args.paths else ()))
                continue
            w.writerow((s + 1, t + 1, format_weight(r.distance))
                       + ((_path_str(r.nodes),) if args.paths else ()))
    return 0


def _verify_one(w, instance: str, ch: ContractionHierarchy, label: str, tol: float) -> bool:
    n = ch.node_count
    oracle = all_pairs_oracle(ch.base) if n else np.zeros((0, 0))
    bad = []
    if n:
        src, dst = np.divmod(np.arange(n * n), n)
        truth = oracle.reshape(-1)
        for algo, got in (("csa-ch", csa_ch_distances(ch, src, dst, tol=tol)),
                          ("bidir-dijkstra-ch", bidir_dijkstra_distances(ch, src, dst))):
            with np.errstate(invalid="ignore"):
                wrong = ~((got == truth) | (np.abs(got - truth) <= tol))
            bad.extend((int(i), algo, got[i]) for i in np.flatnonzero(wrong))
        bad.extend((s * n + t, "updown", g) for s, t, g, _ in verify_updown_property(ch, oracle, tol))
    bad.sort(key=lambda b: b[0])
    first = ""
    if bad:
        i, algo, got = bad[0]
        s, t = divmod(i, n)
        first = f"{algo}:{s + 1}->{t + 1}:{format_weight(got)}!={format_weight(oracle[s, t])}"
    pairs = len({b[0] for b in bad})
    w.writerow((instance, label, n, ch.base.arc_count, ch.shortcut_count, n * n, pairs,
                "pass" if not bad else "fail", first))
    return not bad


def cmd_verify(args, out) -> int:
    w = _writer(out)
    w.writerow(("instance", "ordering", "nodes", "arcs", "shortcuts", "pairs",
                "mismatches", "status", "first_violation"))
    orderings = args.ordering or [Ordering.INPUT, Ordering.EDGE_DIFFERENCE]
    ok = True
    if args.graph:
        text = _read(args.graph)
        name = os.path.basename(args.graph)
        if _is_ch(text):
            ok &= _verify_one(w, name, deserialize_ch(text), "file", args.tolerance)
        else:
            g = load_dimacs(text)
            for o in orderings:
                ch = build_ch(g, o, args.settle_limit)
                ok &= _verify_one(w, name, ch, _ordering_label(o), args.tolerance)
    else:
        for n in args.sizes:
            for seed in args.seeds:
                g = _random_instance(n, seed)
                for o in orderings:
                    ch = build_ch(g, o, args.settle_limit)
                    ok &= _verify_one(w, f"n{n}-s{seed}", ch, _ordering_label(o), args.tolerance)
    if not ok:
        _log("verification failed")
    return 0 if ok else 1


def _ordering_label(o) -> str:
    return o.value if isinstance(o, Ordering) else "explicit"


def _random_instance(n: int, seed: int) -> Graph:
    if n < 1:
        raise CLIError(f"size must be positive, got {n}")
    if n == 1:
        return Graph.from_arcs(1, [])
    return gen_random_graph(n, min(5 * n, n * (n - 1)), seed)


def bench_records(ch: ContractionHierarchy, instance: str, pairs: int, seed: int,
                  timing: bool = True) -> list[tuple]:
    """One row per (pair, algorithm), ordered by pair index."""
    n = ch.node_count
    if pairs and not n:
        raise CLIError("cannot draw query pairs from an empty graph")
    rng = SplitMix64(seed)
    clock = time.perf_counter_ns if timing else (lambda: 0)
    rows = []
    for p in range(pairs):
        s, t = rng.below(n), rng.below(n)
        t0 = clock()
        dm = dijkstra_sssp(ch.base, s)
        t1 = clock()
        rows.append((instance, p, s + 1, t + 1, "dijkstra", t1 - t0, dm.relaxed, dm.updated, dm.dist[t]))
        t0 = clock()
        r = bidir_dijkstra_ch(ch, s, t)
        t1 = clock()
        rows.append((instance, p, s + 1, t + 1, "bidir-dijkstra-ch", t1 - t0, r.stats.arcs_relaxed,
                     r.stats.settled, r.distance))
        t0 = clock()
        r = csa_ch_query(ch, s, t)
        t1 = clock()
        rows.append((instance, p, s + 1, t + 1, "csa-ch", t1 - t0, r.stats.arcs_scanned,
                     r.stats.labels_updated, r.distance))
        t0 = clock()
        m = csa_ch_many_to_many(ch, [s], [t])
        t1 = clock()
        rows.append((instance, p, s + 1, t + 1, "csa-ch-m2m", t1 - t0, m.stats.arcs_scanned,
                     m.stats.labels_updated, float(m.distances[0, 0])))
    return rows


def cmd_bench(args, out) -> int:
    ch = _load_hierarchy(args.graph, args.ordering, args.settle_limit)
    instance = os.path.basename(args.graph)
    rows = bench_records(ch, instance, args.pairs, args.seed, timing=not args.no_timing)
    w = _writer(out)
    w.writerow(BENCH_FIELDS)
    ok = True
    for i in range(0, len(rows), len(ALGORITHMS)):
        group = rows[i:i + len(ALGORITHMS)]
        ds = [r[-1] for r in group]
        if any(not (d == ds[0] or abs(d - ds[0]) <= args.tolerance) for d in ds):
            _log(f"pair {group[0][1]}: algorithms disagree: {ds}")
            ok = False
    for r in rows:
        w.writerow(r[:-1] + (format_weight(r[-1]),))
    return 0 if ok else 1


def _stop_time(value: str) -> tuple[str, int]:
    stop, sep, t = value.rpartition("@")
    if not sep or not stop:
        raise argparse.ArgumentTypeError(f"expected stop@time, got {value!r}")
    try:
        return stop, int(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"time must be integer seconds in {value!r}") from None


def cmd_timetable(args, out) -> int:
    tt = load_timetable_csv(_read(args.timetable))

    def sid(name: str) -> int:
        try:
            return tt.stop_id(name)
        except KeyError as e:
            raise CLIError(str(e.args[0])) from None

    departures: dict[int, int] = {}
    for name, t in args.departures:
        s = sid(name)
        departures[s] = min(t, departures.get(s, t))
    arrivals = [sid(name) for name in args.arrivals]
    labels = csa_earliest_arrival(tt, departures, arrivals, use_break=not args.no_break)
    w = _writer(out)
    w.writerow(("stop", "arrival") + (("journey",) if args.journeys else ()))
    for s in arrivals:
        t = labels.arrival[s]
        row = (tt.stops[s], format_weight(t))
        if args.journeys:
            legs = reconstruct_journey(tt, labels, s) if t != INF else []
            row += (";".join(f"{tt.stops[c.dep_stop]}@{c.dep_time}->{tt.stops[c.arr_stop]}@{c.arr_time}"
                             for c in legs),)
        w.writerow(row)
    _log(f"scanned {labels.scanned} of {len(tt.connections)} connections")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="csach", description=__doc__.splitlines()[0])
    p.add_argument("--tolerance", type=float, default=TOLERANCE,
                   help="absolute tolerance for distance comparisons (default %(default)g)")
    sub = p.add_subparsers(dest="command", required=True)

    def ordering_flags(sp, default=Ordering.EDGE_DIFFERENCE, multi=False):
        if multi:
            sp.add_argument("--ordering", type=_ordering, action="append",
                            help="node ordering, repeatable (default: input-order and edge-difference)")
        else:
            sp.add_argument("--ordering", type=_ordering, default=default,
                            help="input-order, by-node-id, edge-difference or a rank list (default %(default)s)")
        sp.add_argument("--settle-limit", type=int, default=DEFAULT_SETTLE_LIMIT,
                        help="settled-node cap per witness search")

    sp = sub.add_parser("preprocess", help="build and serialise a hierarchy from a DIMACS graph")
    sp.add_argument("graph")
    ordering_flags(sp)
    sp.add_argument("--out", "-o", required=True, help="output hierarchy file")
    sp.set_defaults(func=cmd_preprocess)

    sp = sub.add_parser("query", help="shortest distances between node lists")
    sp.add_argument("ch", help="hierarchy file (a DIMACS graph is preprocessed on the fly)")
    sp.add_argument("--from", dest="sources", nargs="+", required=True)
    sp.add_argument("--to", dest="targets", nargs="+", required=True)
    sp.add_argument("--algo", choices=ALGORITHMS, default="csa-ch")
    sp.add_argument("--paths", action="store_true", help="append the unpacked node path")
    sp.set_defaults(func=cmd_query)

    sp = sub.add_parser("verify", help="all-pairs check against Dijkstra")
    sp.add_argument("graph", nargs="?", help="DIMACS graph or hierarchy file; seeded instances if omitted")
    sp.add_argument("--seeds", type=_int_list, default=[0, 1, 2])
    sp.add_argument("--sizes", type=_int_list, default=[10, 50])
    ordering_flags(sp, multi=True)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("bench", help="per-pair timing and scan counts for every algorithm")
    sp.add_argument("graph", help="DIMACS graph or hierarchy file")
    sp.add_argument("--pairs", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--no-timing", action="store_true", help="report wall_ns as 0 for reproducible output")
    ordering_flags(sp)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("timetable", help="earliest arrival on a timetable CSV")
    sp.add_argument("timetable")
    sp.add_argument("--from", dest="departures", type=_stop_time, nargs="+", required=True,
                    metavar="STOP@TIME")
    sp.add_argument("--to", dest="arrivals", nargs="+", required=True, metavar="STOP")
    sp.add_argument("--no-break", action="store_true", help="scan to the end of the timetable")
    sp.add_argument("--journeys", action="store_true", help="append the connections used")
    sp.set_defaults(func=cmd_timetable)
    return p


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    args = build_parser().parse_args(argv)
    out = sys.stdout if out is None else out
    if args.command == "bench" and args.pairs < 0:
        _log("--pairs must be non-negative")
        return 2
    try:
        return args.func(args, out)
    except (CLIError, GraphFormatError, ValueError, IndexError) as e:
        _log(f"error: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
