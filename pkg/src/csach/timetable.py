"""Timetable connection scan and the order-generic scan it specialises.

Times are integer seconds.  A connection arriving at ``t`` can be followed
by any connection leaving the same stop at ``>= t`` (no change time).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Mapping, NamedTuple, Optional, Sequence, TextIO, Union

import numpy as np

from . import kernels
from .graph import INF, Arc, Graph, dijkstra_sssp
from .rng import SplitMix64

CSV_HEADER = ("dep_stop", "arr_stop", "dep_time", "arr_time")


class TimetableFormatError(ValueError):
    pass


class Connection(NamedTuple):
    dep_stop: int
    arr_stop: int
    dep_time: int
    arr_time: int


@dataclass(frozen=True, eq=False)
class Timetable:
    """Connections sorted by departure time; ties keep their input order."""

    stops: tuple[str, ...]
    connections: tuple[Connection, ...]
    _arrays: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_connections(cls, connections: Iterable[Sequence[int]],
                         stops: Optional[Sequence[str]] = None) -> "Timetable":
        conns = [Connection(*map(int, c)) for c in connections]
        n_stops = len(stops) if stops is not None else 1 + max(
            (max(c.dep_stop, c.arr_stop) for c in conns), default=-1)
        for c in conns:
            if c.dep_time > c.arr_time:
                raise ValueError(f"connection {c} arrives before it departs")
            if not (0 <= c.dep_stop < n_stops and 0 <= c.arr_stop < n_stops):
                raise ValueError(f"connection {c} refers to an unknown stop")
        conns.sort(key=lambda c: c.dep_time)
        names = tuple(stops) if stops is not None else tuple(str(i) for i in range(n_stops))
        return cls(names, tuple(conns))

    @property
    def stop_count(self) -> int:
        return len(self.stops)

    def named_connections(self) -> list[tuple[str, str, int, int]]:
        """Connections with stop names; ids depend on file order, names do not."""
        s = self.stops
        return [(s[c.dep_stop], s[c.arr_stop], c.dep_time, c.arr_time) for c in self.connections]

    def stop_id(self, name: str) -> int:
        try:
            return self.stops.index(name)
        except ValueError:
            raise KeyError(f"unknown stop {name!r}") from None

    def arrays(self, module=None) -> dict:
        module = kernels.impl if module is None else module
        key = module.__name__
        if key not in self._arrays:
            c = self.connections
            raw = {
                "dep_stop": np.array([x.dep_stop for x in c], dtype=np.int64),
                "arr_stop": np.array([x.arr_stop for x in c], dtype=np.int64),
                "dep_time": np.array([x.dep_time for x in c], dtype=np.float64),
                "arr_time": np.array([x.arr_time for x in c], dtype=np.float64),
            }
            self._arrays[key] = {k: kernels.as_backend(v, module) for k, v in raw.items()}
            self._arrays[key]["sorted_dep"] = raw["dep_time"]
        return self._arrays[key]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Timetable):
            return NotImplemented
        return self.stops == other.stops and self.connections == other.connections

    __hash__ = None  # type: ignore[assignment]


def load_timetable_csv(stream: Union[TextIO, str]) -> Timetable:
    """Read ``dep_stop,arr_stop,dep_time,arr_time`` rows; stop names get ids in first-seen order."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
        raise TimetableFormatError(f"expected header {','.join(CSV_HEADER)}")
    ids: dict[str, int] = {}
    conns = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not x.strip() for x in row):
            continue
        if len(row) != 4:
            raise TimetableFormatError(f"line {lineno}: expected 4 fields, got {len(row)}")
        dep, arr = row[0].strip(), row[1].strip()
        try:
            td, ta = int(row[2]), int(row[3])
        except ValueError:
            raise TimetableFormatError(f"line {lineno}: times must be integer seconds") from None
        if td > ta:
            raise TimetableFormatError(f"line {lineno}: arrival before departure")
        for name in (dep, arr):
            ids.setdefault(name, len(ids))
        conns.append((ids[dep], ids[arr], td, ta))
    return Timetable.from_connections(conns, list(ids))


def dump_timetable_csv(tt: Timetable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for c in tt.connections:
        w.writerow((tt.stops[c.dep_stop], tt.stops[c.arr_stop], c.dep_time, c.arr_time))
    return buf.getvalue()


def gen_random_timetable(
    n_stops: int,
    n_connections: int,
    seed: int,
    horizon: int = 6 * 3600,
    max_duration: int = 1800,
) -> Timetable:
    """Random connections between distinct stops with durations in ``1..max_duration``.

    Draw order per connection with SplitMix64: departure stop
    ``below(n_stops)``, arrival stop ``below(n_stops - 1)`` (shifted past
    the departure stop), departure time ``below(horizon)``, duration
    ``1 + below(max_duration)``.
    """
    if n_stops < 2:
        raise ValueError("need at least two stops")
    rng = SplitMix64(seed)
    conns = []
    for _ in range(n_connections):
        a = rng.below(n_stops)
        b = rng.below(n_stops - 1)
        b += b >= a
        td = rng.below(horizon)
        conns.append((a, b, td, td + 1 + rng.below(max_duration)))
    return Timetable.from_connections(conns, [f"S{i}" for i in range(n_stops)])


# ---------------------------------------------------------------------------
# earliest arrival


@dataclass
class ArrivalLabels:
    arrival: list[float]
    pred: list[int]
    seeds: dict[int, int]
    scanned: int = 0

    def __getitem__(self, stop: int) -> float:
        return self.arrival[stop]


def csa_earliest_arrival(
    tt: Timetable,
    departures: Mapping[int, int],
    arrivals: Iterable[int] = (),
    *,
    use_break: bool = True,
    backend=None,
) -> ArrivalLabels:
    """Earliest arrival at every stop from ``departures`` (stop -> departure time).

    Scanning starts at the first connection leaving no earlier than the
    smallest departure time.  With ``use_break`` it stops once the
    departure time reaches the latest arrival label over ``arrivals``
    (only when all of those are finite); arrival labels are exact either
    way, other stops may be left unfinished.
    """
    if not departures:
        raise ValueError("departure set is empty")
    n = tt.stop_count
    seeds = {int(s): int(t) for s, t in departures.items()}
    for s in seeds:
        if not 0 <= s < n:
            raise IndexError(f"stop {s} out of range")
    k = kernels.backend_module(backend)
    arr = tt.arrays(k)
    T, pred = kernels.new_labels(n, module=k)
    for s, t in seeds.items():
        T[s] = float(t)
    flags = np.zeros(n, dtype=np.int8)
    for s in arrivals:
        flags[int(s)] = 1
    start = int(np.searchsorted(arr["sorted_dep"], min(seeds.values()), side="left"))
    scanned = k.csa_connections(
        arr["dep_stop"], arr["arr_stop"], arr["dep_time"], arr["arr_time"],
        start, T, pred, kernels.as_backend(flags, k), use_break,
    )
    arrival = [float(x) for x in T]
    return ArrivalLabels(arrival, [int(x) for x in pred], seeds, scanned)


def reconstruct_journey(tt: Timetable, labels: ArrivalLabels, stop: int) -> list[Connection]:
    """Connections of the recorded earliest-arrival journey ending at ``stop``."""
    if labels.arrival[stop] == INF:
        raise ValueError(f"stop {stop} was not reached")
    out = []
    seen = set()
    while labels.pred[stop] != -1:
        if stop in seen:
            raise RuntimeError("cyclic predecessor chain")
        seen.add(stop)
        c = tt.connections[labels.pred[stop]]
        out.append(c)
        stop = c.dep_stop
    out.reverse()
    return out


def time_expanded_oracle(tt: Timetable, departures: Mapping[int, int]) -> list[float]:
    """Earliest arrival per stop via Dijkstra on the time-expanded event graph.

    One node per distinct ``(stop, time)`` event, waiting arcs between
    consecutive events at a stop, one arc per connection, and a
    super-source whose arc weights are the departure times, so a node's
    distance is its absolute time.
    """
    events: dict[tuple[int, int], int] = {}

    def node(stop: int, t: int) -> int:
        return events.setdefault((stop, t), len(events) + 1)

    for s, t in departures.items():
        node(s, t)
    for c in tt.connections:
        node(c.dep_stop, c.dep_time)
        node(c.arr_stop, c.arr_time)
    arcs = [(0, node(s, t), float(t)) for s, t in departures.items()]
    for c in tt.connections:
        arcs.append((events[(c.dep_stop, c.dep_time)], events[(c.arr_stop, c.arr_time)],
                     float(c.arr_time - c.dep_time)))
    by_stop: dict[int, list[int]] = {}
    for (s, t) in events:
        by_stop.setdefault(s, []).append(t)
    for s, times in by_stop.items():
        times.sort()
        for a, b in zip(times, times[1:]):
            arcs.append((events[(s, a)], events[(s, b)], float(b - a)))
    g = Graph.from_arcs(len(events) + 1, arcs)
    dist = dijkstra_sssp(g, 0).dist
    best = [INF] * tt.stop_count
    for (s, t), v in events.items():
        if dist[v] < INF and t < best[s]:
            best[s] = float(t)
    return best


# ---------------------------------------------------------------------------
# order-generic scan


class ScanOrder:
    """How a particular arc order plugs into :func:`generalized_scan`.

    ``tail``/``head`` name the endpoint a label is read from and written
    to (for backward passes these are the arc's target and source).
    """

    def tail(self, arc) -> Hashable:
        raise NotImplementedError

    def head(self, arc) -> Hashable:
        raise NotImplementedError

    def admits(self, value, pred_arc, arc) -> bool:
        """Whether a path ending with ``pred_arc`` (``None`` at a seed) can continue with ``arc``."""
        raise NotImplementedError

    def extend(self, value, arc):
        raise NotImplementedError

    def closed(self, value, node, arc) -> bool:
        """True once no arc at or after ``arc`` can improve ``node``'s label."""
        raise NotImplementedError


class EarliestArrivalOrder(ScanOrder):
    """Connections by departure time; objective is the arrival time."""

    def tail(self, c):
        return c.dep_stop

    def head(self, c):
        return c.arr_stop

    def admits(self, value, pred_arc, c):
        return value <= c.dep_time

    def extend(self, value, c):
        return c.arr_time

    def closed(self, value, node, c):
        return value <= c.dep_time


class UpwardRankOrder(ScanOrder):
    """Upward CH arcs by source rank; objective is summed weight."""

    def __init__(self, ranks):
        self.ranks = ranks

    def tail(self, a):
        return a.source

    def head(self, a):
        return a.target

    def admits(self, value, pred_arc, a):
        return value < INF

    def extend(self, value, a):
        return value + a.weight

    def closed(self, value, node, a):
        return self.ranks[node] <= self.ranks[a.source]


class DownwardRankOrder(ScanOrder):
    """Downward CH arcs by target rank, relaxed target-to-source."""

    def __init__(self, ranks):
        self.ranks = ranks

    def tail(self, a):
        return a.target

    def head(self, a):
        return a.source

    def admits(self, value, pred_arc, a):
        return value < INF

    def extend(self, value, a):
        return a.weight + value

    def closed(self, value, node, a):
        return self.ranks[node] <= self.ranks[a.target]


@dataclass
class ScanLabels:
    value: dict
    pred: dict
    scanned: int = 0

    def get(self, node, default=INF):
        return self.value.get(node, default)


def generalized_scan(
    arcs: Sequence[Any],
    order: ScanOrder,
    sources: Mapping[Hashable, Any],
    targets: Iterable[Hashable] = (),
    *,
    use_break: bool = True,
) -> ScanLabels:
    """Single in-order pass over ``arcs`` (already sorted for ``order``).

    ``pred[v]`` is the arc that last improved ``v`` (absent at seeds).  The
    caller guarantees the arc order admits an optimal path for every pair.
    """
    value = dict(sources)
    pred: dict = {}
    targets = list(targets)
    scanned = 0
    for e in arcs:
        if use_break and targets and all(
            value.get(s, INF) < INF and order.closed(value[s], s, e) for s in targets
        ):
            break
        scanned += 1
        a = order.tail(e)
        va = value.get(a, INF)
        if va == INF or not order.admits(va, pred.get(a), e):
            continue
        b = order.head(e)
        nv = order.extend(va, e)
        if nv < value.get(b, INF):
            value[b] = nv
            pred[b] = e
    return ScanLabels(value, pred, scanned)
