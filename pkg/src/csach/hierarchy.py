"""Contraction Hierarchy preprocessing.

Nodes are contracted in ascending rank.  Contracting ``v`` considers every
remaining in-neighbour ``u`` and out-neighbour ``w`` and inserts the shortcut
``u -> w`` (middle ``v``) unless a witness path avoiding ``v`` is no longer
than ``u -> v -> w``.  The finished hierarchy carries two read-only scan
arrays: upward arcs sorted by the source's rank and downward arcs sorted by
the target's rank.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence, TextIO, Union

import numpy as np

from . import kernels
from .graph import INF, TOLERANCE, Arc, Graph, GraphFormatError, format_weight

DEFAULT_SETTLE_LIMIT = 500
FORMAT_VERSION = 1


class Ordering(str, Enum):
    INPUT = "input-order"
    NODE_ID = "by-node-id"
    EDGE_DIFFERENCE = "edge-difference"


OrderingStrategy = Union[Ordering, str, Sequence[int]]


class CHFormatError(GraphFormatError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScanArrays:
    """Upward arcs by ascending source rank, downward arcs by ascending target rank.

    ``up_offsets[r]`` is the first upward arc whose source has rank ``>= r``;
    ``down_offsets[r]`` the same for downward arcs and target rank.  Both
    offset arrays have ``n + 1`` entries.  ``*_arc`` maps a position back to
    the arc id in the hierarchy's ``arcs``.
    """

    up_src: np.ndarray
    up_dst: np.ndarray
    up_w: np.ndarray
    up_arc: np.ndarray
    up_offsets: np.ndarray
    down_src: np.ndarray
    down_dst: np.ndarray
    down_w: np.ndarray
    down_arc: np.ndarray
    down_offsets: np.ndarray
    _views: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def up_count(self) -> int:
        return len(self.up_src)

    @property
    def down_count(self) -> int:
        return len(self.down_src)

    def up_pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.up_src.tolist(), self.up_dst.tolist()))

    def down_pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.down_src.tolist(), self.down_dst.tolist()))

    def view(self, module) -> dict:
        """Arrays converted once per kernel backend and cached."""
        from .kernels import as_backend

        key = module.__name__
        if key not in self._views:
            self._views[key] = {
                name: as_backend(getattr(self, name), module)
                for name in (
                    "up_src", "up_dst", "up_w", "up_arc", "up_offsets",
                    "down_src", "down_dst", "down_w", "down_arc", "down_offsets",
                )
            }
        return self._views[key]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ScanArrays):
            return NotImplemented
        names = ("up_src", "up_dst", "up_w", "up_arc", "up_offsets",
                 "down_src", "down_dst", "down_w", "down_arc", "down_offsets")
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in names)


def build_scan_arrays(arcs: Sequence[Arc], ranks: np.ndarray) -> ScanArrays:
    n = len(ranks)
    src = np.fromiter((a.source for a in arcs), dtype=np.int64, count=len(arcs))
    dst = np.fromiter((a.target for a in arcs), dtype=np.int64, count=len(arcs))
    w = np.fromiter((a.weight for a in arcs), dtype=np.float64, count=len(arcs))
    rs, rt = ranks[src], ranks[dst]
    up = np.flatnonzero(rs < rt)
    down = np.flatnonzero(rs > rt)
    if len(up) + len(down) != len(arcs):
        raise ValueError("hierarchy contains an arc between equally ranked nodes")
    up = up[np.argsort(rs[up], kind="stable")]
    down = down[np.argsort(rt[down], kind="stable")]
    up_off = np.searchsorted(rs[up], np.arange(n + 1), side="left")
    down_off = np.searchsorted(rt[down], np.arange(n + 1), side="left")
    return ScanArrays(
        _frozen(src[up]), _frozen(dst[up]), _frozen(w[up]), _frozen(up.astype(np.int64)),
        _frozen(up_off.astype(np.int64)),
        _frozen(src[down]), _frozen(dst[down]), _frozen(w[down]), _frozen(down.astype(np.int64)),
        _frozen(down_off.astype(np.int64)),
    )


@dataclass(frozen=True, eq=False)
class ContractionHierarchy:
    """``arcs`` starts with the base graph's arcs (same order) followed by shortcuts.

    ``halves[i]`` is ``(first, second)`` arc ids for shortcut ``i`` and
    ``None`` for original arcs.
    """

    base: Graph
    arcs: tuple[Arc, ...]
    halves: tuple[Optional[tuple[int, int]], ...]
    ranks: np.ndarray
    scan: ScanArrays

    @property
    def node_count(self) -> int:
        return self.base.node_count

    @property
    def shortcut_count(self) -> int:
        return len(self.arcs) - self.base.arc_count

    @property
    def order(self) -> np.ndarray:
        """Nodes by ascending rank."""
        return np.argsort(self.ranks, kind="stable")

    def aug_graph(self) -> Graph:
        return Graph.raw(self.node_count, self.arcs)

    def shortcuts(self) -> list[Arc]:
        return list(self.arcs[self.base.arc_count:])

    def transposed(self) -> "ContractionHierarchy":
        """Hierarchy of the reversed graph: same ranks, every arc flipped."""
        arcs = tuple(Arc(a.target, a.source, a.weight, a.shortcut_mid) for a in self.arcs)
        halves = tuple(None if h is None else (h[1], h[0]) for h in self.halves)
        return ContractionHierarchy(self.base.transposed(), arcs, halves, self.ranks,
                                    build_scan_arrays(arcs, self.ranks))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ContractionHierarchy):
            return NotImplemented
        return (
            self.base == other.base
            and self.arcs == other.arcs
            and self.halves == other.halves
            and np.array_equal(self.ranks, other.ranks)
            and self.scan == other.scan
        )

    __hash__ = None  # type: ignore[assignment]


# ---------------------------------------------------------------------------
# ordering


def _as_ranks(order: Sequence[int], n: int) -> np.ndarray:
    ranks = np.empty(n, dtype=np.int64)
    ranks[np.asarray(order, dtype=np.int64)] = np.arange(n, dtype=np.int64)
    return ranks


def check_ranks(ranks: Sequence[int], n: int) -> np.ndarray:
    arr = np.asarray(ranks, dtype=np.int64)
    if arr.shape != (n,) or not np.array_equal(np.sort(arr), np.arange(n)):
        raise ValueError(f"ranks must be a permutation of 0..{n - 1}")
    return arr


def order_nodes(
    graph: Graph,
    strategy: OrderingStrategy = Ordering.EDGE_DIFFERENCE,
    settle_limit: int = DEFAULT_SETTLE_LIMIT,
    backend=None,
) -> np.ndarray:
    """Rank per node (``ranks[v]``, bijective onto ``0..n-1``).

    ``input-order`` and ``by-node-id`` both keep nodes in id order.  An
    explicit sequence is read as ``ranks[v] = seq[v]``.  ``edge-difference``
    runs the lazy heuristic, which needs a full simulated contraction.
    """
    n = graph.node_count
    if isinstance(strategy, str):
        strategy = Ordering(strategy)
        if strategy is Ordering.EDGE_DIFFERENCE:
            c = _run_edge_difference(_contractor(graph, settle_limit, backend), n)
            return _as_ranks(c.order, n)
        return np.arange(n, dtype=np.int64)
    return check_ranks(strategy, n)


# ---------------------------------------------------------------------------
# contraction


class WorkingGraph:
    """Mutable adjacency over the uncontracted nodes; one arc id per ordered pair."""

    def __init__(self, graph: Graph):
        self.n = graph.node_count
        self.arcs: list[Arc] = list(graph.arcs)
        self.halves: list[Optional[tuple[int, int]]] = [None] * len(self.arcs)
        self.out: list[dict[int, int]] = [{} for _ in range(self.n)]
        self.inn: list[dict[int, int]] = [{} for _ in range(self.n)]
        for i, a in enumerate(self.arcs):
            self._link(a.source, a.target, i)

    def _link(self, u: int, w: int, i: int) -> None:
        cur = self.out[u].get(w)
        if cur is None or self.arcs[i].weight < self.arcs[cur].weight:
            self.out[u][w] = i
            self.inn[w][u] = i

    def weight(self, i: int) -> float:
        return self.arcs[i].weight

    def add_shortcut(self, u: int, w: int, first: int, second: int, mid: int) -> int:
        i = len(self.arcs)
        self.arcs.append(Arc(u, w, self.arcs[first].weight + self.arcs[second].weight, mid))
        self.halves.append((first, second))
        self._link(u, w, i)
        return i

    def remove(self, v: int) -> None:
        for w in self.out[v]:
            del self.inn[w][v]
        for u in self.inn[v]:
            del self.out[u][v]
        self.out[v] = {}
        self.inn[v] = {}


def _witness_distances(
    work: WorkingGraph,
    u: int,
    targets: dict[int, float],
    excluded: int,
    cap: float,
    settle_limit: int,
) -> dict[int, float]:
    """Upper bounds on ``u -> w`` distances avoiding ``excluded`` (exact when settled)."""
    dist = {u: 0.0}
    heap = [(0.0, u)]
    done = set()
    remaining = len(targets)
    arcs = work.arcs
    out = work.out
    while heap and len(done) < settle_limit:
        d, x = heapq.heappop(heap)
        if x in done:
            continue
        if d > cap:
            break
        done.add(x)
        if x in targets:
            remaining -= 1
            if remaining == 0:
                break
        for y, i in out[x].items():
            if y == excluded:
                continue
            nd = d + arcs[i].weight
            if nd <= cap and nd < dist.get(y, INF):
                dist[y] = nd
                heapq.heappush(heap, (nd, y))
    return {w: dist.get(w, INF) for w in targets}


def witness_search(
    work: Union[WorkingGraph, Graph],
    u: int,
    w: int,
    excluded: int,
    cap: float,
    settle_limit: int = DEFAULT_SETTLE_LIMIT,
) -> float:
    """Shortest ``u -> w`` distance avoiding ``excluded`` if it is ``<= cap``, else ``inf``.

    When the settle limit cuts the search short the result is an upper
    bound (possibly ``inf``).
    """
    if isinstance(work, Graph):
        work = WorkingGraph(work)
    d = _witness_distances(work, u, {w: cap}, excluded, cap, settle_limit)[w]
    return d if d <= cap else INF


class _PyContractor:
    """Reference contractor; ``_ckernels.Contractor`` exposes the same methods."""

    def __init__(self, graph: Graph, settle_limit: int):
        self.settle_limit = settle_limit
        self.work = WorkingGraph(graph)
        self.order: list[int] = []
        self._cached: Optional[tuple[int, list]] = None

    def needed(self, v: int) -> list[tuple[int, int, int, int]]:
        """Shortcuts ``(u, w, arc_uv, arc_vw)`` contracting ``v`` now would insert."""
        if self._cached is not None and self._cached[0] == v:
            return self._cached[1]
        work = self.work
        outs = work.out[v]
        found = []
        for u, a_uv in work.inn[v].items():
            w_uv = work.weight(a_uv)
            targets = {}
            for w, a_vw in outs.items():
                if w == u:
                    continue
                via = w_uv + work.weight(a_vw)
                direct = work.out[u].get(w)
                if direct is not None and work.weight(direct) <= via:
                    continue
                targets[w] = via
            if not targets:
                continue
            wit = _witness_distances(work, u, targets, v, max(targets.values()), self.settle_limit)
            for w, via in targets.items():
                if not wit[w] <= via:
                    found.append((u, w, a_uv, outs[w]))
        self._cached = (v, found)
        return found

    def edge_difference(self, v: int) -> int:
        return len(self.needed(v)) - len(self.work.inn[v]) - len(self.work.out[v])

    def contract_node(self, v: int) -> None:
        for u, w, a_uv, a_vw in self.needed(v):
            self.work.add_shortcut(u, w, a_uv, a_vw, v)
        self.work.remove(v)
        self._cached = None
        self.order.append(v)

    def export(self):
        arcs = self.work.arcs
        halves = self.work.halves
        return (
            [a.source for a in arcs], [a.target for a in arcs], [a.weight for a in arcs],
            [-1 if a.shortcut_mid is None else a.shortcut_mid for a in arcs],
            [-1 if h is None else h[0] for h in halves],
            [-1 if h is None else h[1] for h in halves],
        )


def _contractor(graph: Graph, settle_limit: int, backend=None):
    k = kernels.backend_module(backend)
    if hasattr(k, "Contractor"):
        return k.Contractor(graph.node_count, [a.source for a in graph.arcs],
                            [a.target for a in graph.arcs], [a.weight for a in graph.arcs],
                            settle_limit)
    return _PyContractor(graph, settle_limit)


def _run_edge_difference(c, n: int):
    """Lazy edge-difference: pop the minimum, re-evaluate, contract if still minimal."""
    heap = [(c.edge_difference(v), v) for v in range(n)]
    heapq.heapify(heap)
    while heap:
        _, v = heapq.heappop(heap)
        prio = c.edge_difference(v)
        if heap and (prio, v) > heap[0]:
            heapq.heappush(heap, (prio, v))
            continue
        c.contract_node(v)
    return c


def _finish(graph: Graph, c) -> ContractionHierarchy:
    ranks = _as_ranks(c.order, graph.node_count)
    src, dst, w, mid, first, second = c.export()
    m = graph.arc_count
    arcs = graph.arcs + tuple(
        Arc(src[i], dst[i], w[i], mid[i]) for i in range(m, len(src))
    )
    halves = (None,) * m + tuple((first[i], second[i]) for i in range(m, len(src)))
    return ContractionHierarchy(graph, arcs, halves, _frozen(ranks), build_scan_arrays(arcs, ranks))


def contract(
    graph: Graph,
    ranks: Sequence[int],
    witness_settle_limit: int = DEFAULT_SETTLE_LIMIT,
    backend=None,
) -> ContractionHierarchy:
    """Contract in ascending rank and return the finished hierarchy."""
    ranks = check_ranks(ranks, graph.node_count)
    c = _contractor(graph, witness_settle_limit, backend)
    for v in np.argsort(ranks, kind="stable").tolist():
        c.contract_node(v)
    return _finish(graph, c)


def build_ch(
    graph: Graph,
    strategy: OrderingStrategy = Ordering.EDGE_DIFFERENCE,
    witness_settle_limit: int = DEFAULT_SETTLE_LIMIT,
    backend=None,
) -> ContractionHierarchy:
    """Order and contract in one pass.

    Equal to ``contract(graph, order_nodes(graph, strategy))`` but avoids
    running the edge-difference simulation twice.
    """
    if isinstance(strategy, str) and Ordering(strategy) is Ordering.EDGE_DIFFERENCE:
        c = _run_edge_difference(_contractor(graph, witness_settle_limit, backend), graph.node_count)
        return _finish(graph, c)
    return contract(graph, order_nodes(graph, strategy), witness_settle_limit, backend)


def unpack_arc(ch: ContractionHierarchy, arc_id: int) -> list[int]:
    """Original arc ids a (possibly shortcut) arc stands for, in path order."""
    out = []
    stack = [arc_id]
    while stack:
        i = stack.pop()
        h = ch.halves[i]
        if h is None:
            out.append(i)
        else:
            stack.append(h[1])
            stack.append(h[0])
    return out


# ---------------------------------------------------------------------------
# verification


def verify_updown_property(
    ch: ContractionHierarchy,
    oracle: np.ndarray,
    tol: float = TOLERANCE,
) -> list[tuple[int, int, float, float]]:
    """All ``(s, t, updown, oracle)`` pairs whose best up-down length disagrees with the oracle."""
    from .query import updown_matrix

    n = ch.node_count
    if oracle.shape != (n, n):
        raise ValueError("oracle shape does not match the hierarchy")
    got = updown_matrix(ch, tol=tol)
    both_inf = np.isinf(got) & np.isinf(oracle)
    with np.errstate(invalid="ignore"):
        bad = ~both_inf & ~(np.abs(got - oracle) <= tol)
    return [(int(s), int(t), float(got[s, t]), float(oracle[s, t])) for s, t in np.argwhere(bad)]


# ---------------------------------------------------------------------------
# "ch 1" text format (1-based node ids)


def serialize_ch(ch: ContractionHierarchy) -> str:
    m_orig = ch.base.arc_count
    lines = [f"ch {FORMAT_VERSION} {ch.node_count} {m_orig} {len(ch.arcs)}"]
    lines.extend(f"r {v + 1} {int(r)}" for v, r in enumerate(ch.ranks))
    for a in ch.arcs[:m_orig]:
        lines.append(f"a {a.source + 1} {a.target + 1} {format_weight(a.weight)}")
    for a in ch.arcs[m_orig:]:
        lines.append(f"s {a.source + 1} {a.target + 1} {format_weight(a.weight)} {a.shortcut_mid + 1}")
    return "\n".join(lines) + "\n"


def deserialize_ch(stream: Union[TextIO, str, Iterable[str]]) -> ContractionHierarchy:
    lines = stream.splitlines() if isinstance(stream, str) else stream
    header = None
    ranks: dict[int, int] = {}
    originals: list[Arc] = []
    shortcuts: list[tuple[int, list[str]]] = []

    def node(tok: str, lineno: int) -> int:
        try:
            v = int(tok)
        except ValueError:
            raise CHFormatError(f"bad node id {tok!r}", lineno) from None
        if not 1 <= v <= header[0]:
            raise CHFormatError(f"node id {v} out of range 1..{header[0]}", lineno)
        return v - 1

    def weight(tok: str, lineno: int) -> float:
        try:
            w = float(tok)
        except ValueError:
            raise CHFormatError(f"bad weight {tok!r}", lineno) from None
        if w < 0 or math.isnan(w) or math.isinf(w):
            raise CHFormatError(f"invalid weight {tok!r}", lineno)
        return w

    for lineno, line in enumerate(lines, start=1):
        parts = line.split()
        if not parts or parts[0] == "c":
            continue
        tag = parts[0]
        if header is None:
            if tag != "ch" or len(parts) != 5:
                raise CHFormatError("expected header 'ch <version> <n> <m_orig> <m_aug>'", lineno)
            try:
                version, n, m_orig, m_aug = (int(x) for x in parts[1:])
            except ValueError:
                raise CHFormatError("non-integer header field", lineno) from None
            if version != FORMAT_VERSION:
                raise CHFormatError(f"unsupported version {version} (expected {FORMAT_VERSION})", lineno)
            if n < 0 or m_orig < 0 or m_aug < m_orig:
                raise CHFormatError("inconsistent header counts", lineno)
            header = (n, m_orig, m_aug)
            continue
        if tag == "r" and len(parts) == 3:
            v = node(parts[1], lineno)
            if v in ranks:
                raise CHFormatError(f"duplicate rank for node {v + 1}", lineno)
            try:
                ranks[v] = int(parts[2])
            except ValueError:
                raise CHFormatError(f"bad rank {parts[2]!r}", lineno) from None
        elif tag == "a" and len(parts) == 4:
            if shortcuts:
                raise CHFormatError("original arc after shortcut lines", lineno)
            u, v = node(parts[1], lineno), node(parts[2], lineno)
            if u == v:
                raise CHFormatError("self-loop", lineno)
            originals.append(Arc(u, v, weight(parts[3], lineno)))
        elif tag == "s" and len(parts) == 5:
            shortcuts.append((lineno, parts))
        else:
            raise CHFormatError(f"malformed line {line.strip()!r}", lineno)
    if header is None:
        raise CHFormatError("missing header")
    n, m_orig, m_aug = header
    if len(ranks) != n:
        raise CHFormatError(f"expected {n} rank lines, found {len(ranks)}")
    if len(originals) != m_orig or len(originals) + len(shortcuts) != m_aug:
        raise CHFormatError(
            f"arc counts {len(originals)}+{len(shortcuts)} disagree with header {m_orig}/{m_aug}")
    try:
        rank_arr = check_ranks([ranks[v] for v in range(n)], n)
    except ValueError:
        raise CHFormatError("ranks are not a bijection onto 0..n-1") from None

    base = Graph.raw(n, originals)
    arcs = list(originals)
    halves: list[Optional[tuple[int, int]]] = [None] * len(arcs)
    lightest: dict[tuple[int, int], int] = {}
    for i, a in enumerate(arcs):
        cur = lightest.get((a.source, a.target))
        if cur is None or a.weight < arcs[cur].weight:
            lightest[(a.source, a.target)] = i
    for lineno, parts in shortcuts:
        u, v, mid = node(parts[1], lineno), node(parts[2], lineno), node(parts[4], lineno)
        w = weight(parts[3], lineno)
        if not rank_arr[mid] < min(rank_arr[u], rank_arr[v]):
            raise CHFormatError("shortcut middle node must rank below both endpoints", lineno)
        first, second = lightest.get((u, mid)), lightest.get((mid, v))
        if first is None or second is None:
            raise CHFormatError("shortcut halves not present", lineno)
        if w != arcs[first].weight + arcs[second].weight:
            raise CHFormatError(
                f"shortcut weight {parts[3]} != {format_weight(arcs[first].weight)}"
                f" + {format_weight(arcs[second].weight)}", lineno)
        i = len(arcs)
        arcs.append(Arc(u, v, w, mid))
        halves.append((first, second))
        cur = lightest.get((u, v))
        if cur is None or w < arcs[cur].weight:
            lightest[(u, v)] = i
    arcs_t = tuple(arcs)
    return ContractionHierarchy(base, arcs_t, tuple(halves), _frozen(rank_arr),
                                build_scan_arrays(arcs_t, rank_arr))
