"""Weighted digraph model, DIMACS ingestion, seeded generators and Dijkstra oracles.

Node ids are dense integers ``0..n-1``.  File formats use the DIMACS 1-based
convention and are translated on the way in and out.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Optional, TextIO, Union

import numpy as np

from .rng import SplitMix64

INF = math.inf
TOLERANCE = 1e-9
ORACLE_CAP = 500


class GraphFormatError(ValueError):
    """Malformed graph input; ``lineno`` is 1-based (0 when not line-specific)."""

    def __init__(self, message: str, lineno: int = 0):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno else message)


class Arc(NamedTuple):
    source: int
    target: int
    weight: float
    shortcut_mid: Optional[int] = None

    @property
    def is_shortcut(self) -> bool:
        return self.shortcut_mid is not None


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable digraph.  ``out_adjacency[v]`` / ``in_adjacency[v]`` hold arc indices."""

    node_count: int
    arcs: tuple[Arc, ...]
    out_adjacency: tuple[tuple[int, ...], ...] = field(repr=False)
    in_adjacency: tuple[tuple[int, ...], ...] = field(repr=False)

    @classmethod
    def from_arcs(cls, node_count: int, arcs: Iterable[Union[Arc, tuple]]) -> "Graph":
        """Build a graph with the ingestion rules applied.

        Self-loops are dropped and parallel arcs collapse to their minimum
        weight; the surviving arc keeps the position of its first occurrence.
        """
        if node_count < 0:
            raise ValueError("node_count must be non-negative")
        best: dict[tuple[int, int], float] = {}
        for arc in arcs:
            u, v, w = int(arc[0]), int(arc[1]), float(arc[2])
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise ValueError(f"arc ({u},{v}) out of range for {node_count} nodes")
            if w < 0 or math.isnan(w):
                raise ValueError(f"arc ({u},{v}) has negative weight {w}")
            if u == v:
                continue
            key = (u, v)
            if key not in best or w < best[key]:
                best[key] = w
        return cls.raw(node_count, [Arc(u, v, w) for (u, v), w in best.items()])

    @classmethod
    def raw(cls, node_count: int, arcs: Iterable[Arc]) -> "Graph":
        """Build a graph from arcs as given (parallel arcs allowed)."""
        arcs = tuple(a if isinstance(a, Arc) else Arc(*a) for a in arcs)
        out_adj: list[list[int]] = [[] for _ in range(node_count)]
        in_adj: list[list[int]] = [[] for _ in range(node_count)]
        for i, a in enumerate(arcs):
            out_adj[a.source].append(i)
            in_adj[a.target].append(i)
        return cls(
            node_count,
            arcs,
            tuple(tuple(x) for x in out_adj),
            tuple(tuple(x) for x in in_adj),
        )

    @property
    def arc_count(self) -> int:
        return len(self.arcs)

    def transposed(self) -> "Graph":
        return Graph.raw(
            self.node_count,
            [Arc(a.target, a.source, a.weight, a.shortcut_mid) for a in self.arcs],
        )

    def arc_set(self) -> set[tuple[int, int, float]]:
        return {(a.source, a.target, a.weight) for a in self.arcs}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.node_count == other.node_count and self.arcs == other.arcs

    __hash__ = None  # type: ignore[assignment]


@dataclass
class DistanceMap:
    source: int
    dist: list[float]
    pred: list[Optional[int]]
    settled: int = 0
    relaxed: int = 0
    updated: int = 0

    def path_to(self, graph: Graph, node: int) -> list[Arc]:
        """Arcs of the recorded shortest path from ``source`` to ``node``."""
        if self.dist[node] == INF:
            raise ValueError(f"node {node} is unreachable from {self.source}")
        path = []
        while self.pred[node] is not None:
            arc = graph.arcs[self.pred[node]]
            path.append(arc)
            node = arc.source
        path.reverse()
        return path


# ---------------------------------------------------------------------------
# DIMACS "gr" text format


def format_weight(w: float) -> str:
    if w == INF:
        return "inf"
    if float(w).is_integer():
        return str(int(w))
    return repr(float(w))


def load_dimacs(stream: Union[TextIO, str, Iterable[str]]) -> Graph:
    """Parse DIMACS ``gr`` text (``c`` comments, one ``p sp n m`` header, ``a u v w`` arcs)."""
    lines = stream.splitlines() if isinstance(stream, str) else stream
    n: Optional[int] = None
    arcs: list[tuple[int, int, float]] = []
    for lineno, line in enumerate(lines, start=1):
        parts = line.split()
        if not parts or parts[0] == "c":
            continue
        tag = parts[0]
        if tag == "p":
            if n is not None:
                raise GraphFormatError("duplicate problem line", lineno)
            if len(parts) != 4 or parts[1] != "sp":
                raise GraphFormatError(f"malformed problem line {line.strip()!r}", lineno)
            try:
                n, _m = int(parts[2]), int(parts[3])
            except ValueError:
                raise GraphFormatError(f"non-integer counts in {line.strip()!r}", lineno) from None
            if n < 0 or _m < 0:
                raise GraphFormatError("negative counts in problem line", lineno)
        elif tag == "a":
            if n is None:
                raise GraphFormatError("arc line before problem line", lineno)
            if len(parts) != 4:
                raise GraphFormatError(f"malformed arc line {line.strip()!r}", lineno)
            try:
                u, v = int(parts[1]), int(parts[2])
                w = float(parts[3])
            except ValueError:
                raise GraphFormatError(f"malformed arc line {line.strip()!r}", lineno) from None
            if not (1 <= u <= n and 1 <= v <= n):
                raise GraphFormatError(f"node id out of range 1..{n}", lineno)
            if w < 0 or math.isnan(w):
                raise GraphFormatError(f"negative weight {parts[3]}", lineno)
            arcs.append((u - 1, v - 1, w))
        else:
            raise GraphFormatError(f"unknown line type {tag!r}", lineno)
    if n is None:
        raise GraphFormatError("missing problem line")
    return Graph.from_arcs(n, arcs)


def dump_dimacs(graph: Graph) -> str:
    """Inverse of :func:`load_dimacs` on the collapsed arc set."""
    out = [f"p sp {graph.node_count} {graph.arc_count}"]
    out.extend(f"a {a.source + 1} {a.target + 1} {format_weight(a.weight)}" for a in graph.arcs)
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Seeded instances


def gen_random_graph(n: int, m: int, seed: int, w_max: int = 100) -> Graph:
    """Random simple digraph with exactly ``m`` arcs.

    Pairs are selected by a partial Fisher-Yates shuffle over the
    ``n*(n-1)`` ordered pairs (index ``k`` maps to ``u = k // (n-1)``,
    ``r = k % (n-1)``, ``v = r + (r >= u)``), driven by SplitMix64 seeded
    with ``seed``.  After selecting pair ``i`` its weight is drawn as
    ``1 + below(w_max)``.  Arcs are emitted in selection order.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if w_max < 1:
        raise ValueError("w_max must be at least 1")
    total = n * (n - 1)
    if not 0 <= m <= total:
        raise ValueError(f"infeasible arc count {m}: at most {total} ordered pairs on {n} nodes")
    rng = SplitMix64(seed)
    swapped: dict[int, int] = {}
    arcs = []
    for i in range(m):
        j = i + rng.below(total - i)
        ki = swapped.get(i, i)
        kj = swapped.get(j, j)
        swapped[j] = ki
        swapped[i] = kj
        u, r = divmod(kj, n - 1)
        v = r + (r >= u)
        arcs.append(Arc(u, v, float(1 + rng.below(w_max))))
    return Graph.raw(n, arcs)


# ---------------------------------------------------------------------------
# Oracles


def dijkstra_sssp(
    graph: Graph,
    source: int,
    restrict: Optional[Callable[[Arc], bool]] = None,
) -> DistanceMap:
    """Exact single-source distances over the arcs accepted by ``restrict``."""
    n = graph.node_count
    if not 0 <= source < n:
        raise IndexError(f"source {source} out of range 0..{n - 1}")
    dist = [INF] * n
    pred: list[Optional[int]] = [None] * n
    done = [False] * n
    dist[source] = 0.0
    heap = [(0.0, source)]
    arcs = graph.arcs
    out_adj = graph.out_adjacency
    settled = relaxed = updated = 0
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        settled += 1
        for i in out_adj[u]:
            a = arcs[i]
            if restrict is not None and not restrict(a):
                continue
            relaxed += 1
            nd = d + a.weight
            if nd < dist[a.target]:
                dist[a.target] = nd
                pred[a.target] = i
                updated += 1
                heapq.heappush(heap, (nd, a.target))
    return DistanceMap(source, dist, pred, settled, relaxed, updated)


def all_pairs_oracle(graph: Graph, cap: int = ORACLE_CAP) -> np.ndarray:
    """Dense ``n x n`` distance matrix from one Dijkstra per source."""
    n = graph.node_count
    if n > cap:
        raise ValueError(f"all-pairs oracle capped at {cap} nodes, graph has {n}")
    out = np.full((n, n), INF)
    for s in range(n):
        out[s] = dijkstra_sssp(graph, s).dist
    return out

