"""Shortest-path queries over a :class:`ContractionHierarchy`.

Two engines answer the same question.  :func:`bidir_dijkstra_ch` is the
classical priority-queue search restricted to upward (forward) and
downward (backward) arcs.  :func:`csa_ch_query` replaces the queues with one
linear pass over each prebuilt scan array: because ranks strictly increase
along an up-path, scanning upward arcs by ascending source rank visits
every arc of the path after all arcs entering its source; the downward
array, ordered by ascending target rank, does the same for down-paths
read backwards.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from . import kernels
from .graph import INF, TOLERANCE, Arc
from .hierarchy import ContractionHierarchy, unpack_arc


@dataclass
class QueryStats:
    arcs_scanned_forward: int = 0
    arcs_scanned_backward: int = 0
    labels_updated: int = 0
    settled: int = 0
    heap_operations: int = 0
    arcs_relaxed: int = 0

    @property
    def arcs_scanned(self) -> int:
        return self.arcs_scanned_forward + self.arcs_scanned_backward


@dataclass
class QueryResult:
    source: Optional[int]
    target: int
    distance: float
    meeting_node: Optional[int]
    packed_path: list[Arc] = field(default_factory=list)
    unpacked_path: list[Arc] = field(default_factory=list)
    stats: QueryStats = field(default_factory=QueryStats)

    @property
    def nodes(self) -> list[int]:
        """Node sequence of the unpacked path (just the endpoint for empty paths)."""
        if not self.unpacked_path:
            return [] if self.distance == INF else [self.target]
        return [self.unpacked_path[0].source] + [a.target for a in self.unpacked_path]

    @property
    def packed_nodes(self) -> list[int]:
        if not self.packed_path:
            return [] if self.distance == INF else [self.target]
        return [self.packed_path[0].source] + [a.target for a in self.packed_path]


def _check_node(ch: ContractionHierarchy, v: int) -> int:
    v = int(v)
    if not 0 <= v < ch.node_count:
        raise IndexError(f"node {v} out of range 0..{ch.node_count - 1}")
    return v


def _trace(ch: ContractionHierarchy, meet: int, pred, succ) -> list[int]:
    """Arc ids of the up-path into ``meet`` followed by the down-path out of it."""
    up = []
    v = meet
    while pred[v] != -1:
        i = int(pred[v])
        up.append(i)
        v = ch.arcs[i].source
    up.reverse()
    v = meet
    down = []
    while succ[v] != -1:
        i = int(succ[v])
        down.append(i)
        v = ch.arcs[i].target
    return up + down


def _result(ch, s, t, best, meet, pred, succ, stats) -> QueryResult:
    if best == INF:
        return QueryResult(s, t, INF, None, stats=stats)
    ids = _trace(ch, int(meet), pred, succ)
    packed = [ch.arcs[i] for i in ids]
    unpacked = [ch.arcs[j] for i in ids for j in unpack_arc(ch, i)]
    return QueryResult(s, t, float(best), int(meet), packed, unpacked, stats)


# ---------------------------------------------------------------------------
# baseline: bidirectional Dijkstra


def bidir_dijkstra_ch(ch: ContractionHierarchy, s: int, t: int, backend=None) -> QueryResult:
    """Forward search on upward arcs, backward search on downward arcs, alternating.

    A direction stops once its queue minimum reaches the best combined
    distance found so far.
    """
    s, t = _check_node(ch, s), _check_node(ch, t)
    k = kernels.backend_module(backend)
    v = ch.scan.view(k)
    rank = kernels.as_backend(ch.ranks, k)
    dist_f, pred_f = kernels.new_labels(ch.node_count, module=k)
    dist_b, succ_b = kernels.new_labels(ch.node_count, module=k)
    best, meet, settled, relaxed, ops = k.bidir_dijkstra(
        v["up_offsets"], v["up_dst"], v["up_w"], v["up_arc"],
        v["down_offsets"], v["down_src"], v["down_w"], v["down_arc"],
        rank, s, t, dist_f, pred_f, dist_b, succ_b,
    )
    stats = QueryStats(settled=settled, heap_operations=ops, arcs_relaxed=relaxed)
    return _result(ch, s, t, best, meet, pred_f, succ_b, stats)


def bidir_dijkstra_distances(ch: ContractionHierarchy, sources: Sequence[int],
                             targets: Sequence[int], backend=None) -> np.ndarray:
    """Distances of :func:`bidir_dijkstra_ch` for many pairs in one kernel call."""
    k = kernels.backend_module(backend)
    v = ch.scan.view(k)
    out = k.bidir_dijkstra_batch(
        v["up_offsets"], v["up_dst"], v["up_w"], v["up_arc"],
        v["down_offsets"], v["down_src"], v["down_w"], v["down_arc"],
        kernels.as_backend(ch.ranks, k),
        kernels.as_backend(np.asarray(sources, dtype=np.int64), k),
        kernels.as_backend(np.asarray(targets, dtype=np.int64), k),
    )
    return np.asarray(out, dtype=np.float64)


# ---------------------------------------------------------------------------
# scan-based query


def _seed_departures(departures) -> dict[int, float]:
    if isinstance(departures, Mapping):
        seeds = {int(d): float(x) for d, x in departures.items()}
    else:
        seeds = {}
        for d in departures:
            if isinstance(d, tuple):
                seeds[int(d[0])] = float(d[1])
            else:
                seeds[int(d)] = 0.0
    if not seeds:
        raise ValueError("departure set is empty")
    if any(x < 0 for x in seeds.values()):
        raise ValueError("initial distances must be non-negative")
    return seeds


def _lockstep_query(ch, seeds: dict[int, float], t: int, tol: float, early_stop: bool, k):
    v = ch.scan.view(k)
    rank = kernels.as_backend(ch.ranks, k)
    n = ch.node_count
    dist_f, pred_f = kernels.new_labels(n, module=k)
    dist_b, succ_b = kernels.new_labels(n, module=k)
    for d, x in seeds.items():
        dist_f[d] = x
    dist_b[t] = 0.0
    up_start = int(v["up_offsets"][min(int(ch.ranks[d]) for d in seeds)])
    down_start = int(v["down_offsets"][int(ch.ranks[t])])
    sf, sb, upd = k.lockstep_scan(
        v["up_src"], v["up_dst"], v["up_w"], v["up_arc"], up_start,
        v["down_src"], v["down_dst"], v["down_w"], v["down_arc"], down_start,
        dist_f, pred_f, dist_b, succ_b, rank, tol, early_stop,
    )
    best, meet = k.combine(dist_f, dist_b)
    stats = QueryStats(sf, sb, upd)
    return best, meet, pred_f, succ_b, stats, dist_f, dist_b


def csa_ch_query(
    ch: ContractionHierarchy,
    source: int,
    target: int,
    *,
    tol: float = TOLERANCE,
    early_stop: bool = False,
    backend=None,
) -> QueryResult:
    """One-to-one query by lock-step scan of the upward and downward arrays.

    ``early_stop`` ends a pass once its cursor has moved past every
    labelled node's rank (nothing further can relax); it never changes
    the result.
    """
    s, t = _check_node(ch, source), _check_node(ch, target)
    k = kernels.backend_module(backend)
    best, meet, pred, succ, stats, _, _ = _lockstep_query(ch, {s: 0.0}, t, tol, early_stop, k)
    return _result(ch, s, t, best, meet, pred, succ, stats)


def csa_ch_query_multi(
    ch: ContractionHierarchy,
    departures: Union[Mapping[int, float], Iterable],
    arrivals: Iterable[int],
    *,
    tol: float = TOLERANCE,
    early_stop: bool = False,
    backend=None,
) -> dict[int, QueryResult]:
    """Best distance from the departure set (with initial offsets) to each arrival."""
    seeds = _seed_departures(departures)
    for d in seeds:
        _check_node(ch, d)
    arrivals = [_check_node(ch, a) for a in arrivals]
    if not arrivals:
        raise ValueError("arrival set is empty")
    k = kernels.backend_module(backend)
    out = {}
    for t in arrivals:
        best, meet, pred, succ, stats, _, _ = _lockstep_query(ch, seeds, t, tol, early_stop, k)
        out[t] = _result(ch, None, t, best, meet, pred, succ, stats)
    return out


def csa_ch_distances(ch: ContractionHierarchy, sources: Sequence[int], targets: Sequence[int],
                     *, tol: float = TOLERANCE, early_stop: bool = False, share_passes: bool = True,
                     return_scans: bool = False, backend=None):
    """Distances of :func:`csa_ch_query` for many pairs.

    The forward pass depends only on the source and the backward pass only
    on the target, so by default each is run once per distinct node and
    paired up afterwards; the sums are the same floating-point operations
    the one-to-one query performs.  ``share_passes=False`` runs the full
    lock-step query for every pair inside the kernel instead.

    With ``return_scans`` (shared passes only) the result is
    ``(distances, scanned_forward, scanned_backward)`` with the per-pair
    arc counts the one-to-one query would report.
    """
    k = kernels.backend_module(backend)
    v = ch.scan.view(k)
    rank = kernels.as_backend(ch.ranks, k)
    src = np.asarray(sources, dtype=np.int64)
    dst = np.asarray(targets, dtype=np.int64)
    if not share_passes:
        if return_scans:
            raise ValueError("scan counts need share_passes=True")
        out = k.csa_ch_batch(
            v["up_src"], v["up_dst"], v["up_w"], v["up_arc"], v["up_offsets"],
            v["down_src"], v["down_dst"], v["down_w"], v["down_arc"], v["down_offsets"],
            rank, kernels.as_backend(src, k), kernels.as_backend(dst, k), tol, early_stop,
        )
        return np.asarray(out, dtype=np.float64)
    n = ch.node_count
    nu, nd = ch.scan.up_count, ch.scan.down_count
    uniq_s, inv_s = np.unique(src, return_inverse=True)
    uniq_t, inv_t = np.unique(dst, return_inverse=True)
    F = np.empty((len(uniq_s), n))
    B = np.empty((len(uniq_t), n))
    scan_f = np.zeros(len(uniq_s), dtype=np.int64)
    scan_b = np.zeros(len(uniq_t), dtype=np.int64)
    for row, s in enumerate(uniq_s.tolist()):
        df, pf = kernels.new_labels(n, module=k)
        db, sb = kernels.new_labels(n, module=k)
        df[s] = 0.0
        scan_f[row], _, _ = k.lockstep_scan(v["up_src"], v["up_dst"], v["up_w"], v["up_arc"], int(v["up_offsets"][rank[s]]),
                        v["down_src"], v["down_dst"], v["down_w"], v["down_arc"], nd,
                        df, pf, db, sb, rank, tol, early_stop)
        F[row] = df
    for row, t in enumerate(uniq_t.tolist()):
        df, pf = kernels.new_labels(n, module=k)
        db, sb = kernels.new_labels(n, module=k)
        db[t] = 0.0
        _, scan_b[row], _ = k.lockstep_scan(v["up_src"], v["up_dst"], v["up_w"], v["up_arc"], nu,
                        v["down_src"], v["down_dst"], v["down_w"], v["down_arc"], int(v["down_offsets"][rank[t]]),
                        df, pf, db, sb, rank, tol, early_stop)
        B[row] = db
    out = np.empty(len(src))
    for row in range(len(uniq_s)):
        idx = np.flatnonzero(inv_s == row)
        out[idx] = (F[row][None, :] + B[inv_t[idx]]).min(axis=1)
    if return_scans:
        return out, scan_f[inv_s], scan_b[inv_t]
    return out


@dataclass
class ManyToMany:
    departures: list[int]
    arrivals: list[int]
    distances: np.ndarray
    meeting: np.ndarray
    stats: QueryStats
    forward: np.ndarray = field(repr=False)
    forward_arcs: np.ndarray = field(repr=False)
    backward: np.ndarray = field(repr=False)
    backward_arcs: np.ndarray = field(repr=False)

    def path(self, ch: ContractionHierarchy, i: int, j: int) -> QueryResult:
        """Reconstructed result for ``departures[i] -> arrivals[j]``."""
        d = self.distances[i, j]
        return _result(ch, self.departures[i], self.arrivals[j], d, self.meeting[i, j],
                       self.forward_arcs[i], self.backward_arcs[j], QueryStats())


def csa_ch_many_to_many(
    ch: ContractionHierarchy,
    departures: Iterable[int],
    arrivals: Iterable[int],
    *,
    tol: float = TOLERANCE,
    backend=None,
) -> ManyToMany:
    """Distance table from one upward pass labelled by departure and one downward pass by arrival.

    Each arc is scanned once and relaxed for every departure (arrival)
    whose label reached its source (target).  Labels are dense per
    departure; ``distances[i, j]`` is the minimum over nodes of the two
    label sums, with the smallest meeting node on ties.
    """
    deps = list(dict.fromkeys(_check_node(ch, d) for d in departures))
    arrs = list(dict.fromkeys(_check_node(ch, a) for a in arrivals))
    if not deps or not arrs:
        raise ValueError("departure and arrival sets must be non-empty")
    k = kernels.backend_module(backend)
    v = ch.scan.view(k)
    n = ch.node_count
    fwd, fwd_arc = kernels.new_labels(n, rows=len(deps), module=k)
    bwd, bwd_arc = kernels.new_labels(n, rows=len(arrs), module=k)
    for i, d in enumerate(deps):
        fwd[i][d] = 0.0
    for j, a in enumerate(arrs):
        bwd[j][a] = 0.0
    up_start = int(v["up_offsets"][min(int(ch.ranks[d]) for d in deps)])
    down_start = int(v["down_offsets"][min(int(ch.ranks[a]) for a in arrs)])
    sf, uf = k.scan_up_multi(v["up_src"], v["up_dst"], v["up_w"], v["up_arc"], up_start, fwd, fwd_arc, tol)
    sb, ub = k.scan_down_multi(v["down_src"], v["down_dst"], v["down_w"], v["down_arc"],
                               down_start, bwd, bwd_arc, tol)
    F = np.asarray(fwd, dtype=np.float64)
    B = np.asarray(bwd, dtype=np.float64)
    dist = np.empty((len(deps), len(arrs)))
    meet = np.empty((len(deps), len(arrs)), dtype=np.int64)
    for i in range(len(deps)):
        sums = F[i][None, :] + B
        meet[i] = np.argmin(sums, axis=1)
        dist[i] = sums[np.arange(len(arrs)), meet[i]]
    meet[np.isinf(dist)] = -1
    return ManyToMany(deps, arrs, dist, meet, QueryStats(sf, sb, uf + ub),
                      F, np.asarray(fwd_arc, dtype=np.int64), B, np.asarray(bwd_arc, dtype=np.int64))


def updown_matrix(ch: ContractionHierarchy, tol: float = TOLERANCE, backend=None) -> np.ndarray:
    """Best up-down path length for every ordered pair."""
    nodes = range(ch.node_count)
    if ch.node_count == 0:
        return np.zeros((0, 0))
    return csa_ch_many_to_many(ch, nodes, nodes, tol=tol, backend=backend).distances


# ---------------------------------------------------------------------------
# path unpacking


class PathError(ValueError):
    pass


def unpack_path(ch: ContractionHierarchy, packed: Sequence[Arc]) -> list[Arc]:
    """Replace every shortcut by the original arcs it stands for."""
    out: list[Arc] = []
    for prev, nxt in zip(packed, packed[1:]):
        if prev.target != nxt.source:
            raise PathError(f"discontinuous path: {prev} then {nxt}")
    index = _arc_index(ch)
    for a in packed:
        i = index.get(a)
        if i is None:
            raise PathError(f"arc {a} is not part of the hierarchy")
        out.extend(ch.arcs[j] for j in unpack_arc(ch, i))
    return out


def _arc_index(ch: ContractionHierarchy) -> dict[Arc, int]:
    index: dict[Arc, int] = {}
    for i, a in enumerate(ch.arcs):
        index.setdefault(a, i)
    return index


# ---------------------------------------------------------------------------
# diagnostics


def first_meeting_scan(
    ch: ContractionHierarchy,
    s: int,
    t: int,
    up_order: Sequence[int],
    down_order: Sequence[int],
    lag: int = 0,
) -> tuple[float, int]:
    """Lock-step scan that stops at the first node holding both labels.

    ``up_order`` / ``down_order`` are arc ids in scan order; the backward
    pass starts ``lag`` steps late (negative: the forward pass does).
    Returns ``(distance, arcs_scanned)``; this is the unsound termination
    rule kept only to demonstrate why the full scan is needed.
    """
    n = ch.node_count
    dist_f = [INF] * n
    dist_b = [INF] * n
    dist_f[s] = 0.0
    dist_b[t] = 0.0
    if s == t:
        return 0.0, 0
    ups = [ch.arcs[i] for i in up_order]
    downs = [ch.arcs[i] for i in down_order]
    i = j = step = scanned = 0
    while i < len(ups) or j < len(downs):
        if i < len(ups) and step >= -lag:
            a = ups[i]
            i += 1
            scanned += 1
            if dist_f[a.source] + a.weight < dist_f[a.target]:
                dist_f[a.target] = dist_f[a.source] + a.weight
                if dist_b[a.target] < INF:
                    return dist_f[a.target] + dist_b[a.target], scanned
        if j < len(downs) and step >= lag:
            a = downs[j]
            j += 1
            scanned += 1
            if a.weight + dist_b[a.target] < dist_b[a.source]:
                dist_b[a.source] = a.weight + dist_b[a.target]
                if dist_f[a.source] < INF:
                    return dist_f[a.source] + dist_b[a.source], scanned
        step += 1
    return INF, scanned


def bucket_permutations(ids: Sequence[int], keys: Sequence[int]) -> Iterable[list[int]]:
    """Every reordering of ``ids`` that only permutes runs of equal ``keys``."""
    groups = [list(g) for _, g in itertools.groupby(zip(keys, ids), key=lambda p: p[0])]
    choices = [list(itertools.permutations([i for _, i in g])) for g in groups]
    for combo in itertools.product(*choices):
        yield [i for part in combo for i in part]
