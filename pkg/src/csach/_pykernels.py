"""Pure-Python inner loops.  Same signatures and results as ``_ckernels``.

Array arguments may be lists or numpy arrays; lists are much faster here.
Label arrays are mutated in place.  Unreached labels are ``inf`` and
missing predecessor arcs are ``-1``.
"""
from __future__ import annotations

import heapq
import math

INF = math.inf


def _max_labeled_rank(dist, rank):
    best = -1
    for v, d in enumerate(dist):
        if d != INF and rank[v] > best:
            best = rank[v]
    return best


def lockstep_scan(
    up_src, up_dst, up_w, up_arc, up_start,
    dn_src, dn_dst, dn_w, dn_arc, dn_start,
    dist_f, pred_f, dist_b, succ_b,
    rank, tol, early_stop,
):
    """Interleave one upward and one downward arc per step until both are exhausted.

    Returns ``(scanned_forward, scanned_backward, labels_updated)``.
    """
    nu = len(up_src)
    nd = len(dn_src)
    i = up_start
    j = dn_start
    sf = sb = upd = 0
    top_f = top_b = 0
    if early_stop:
        top_f = _max_labeled_rank(dist_f, rank)
        top_b = _max_labeled_rank(dist_b, rank)
    while i < nu or j < nd:
        if i < nu:
            a = up_src[i]
            if early_stop and rank[a] > top_f:
                i = nu
            else:
                sf += 1
                da = dist_f[a]
                if da != INF:
                    b = up_dst[i]
                    nd_ = da + up_w[i]
                    if nd_ < dist_f[b] - tol:
                        dist_f[b] = nd_
                        pred_f[b] = up_arc[i]
                        upd += 1
                        if early_stop and rank[b] > top_f:
                            top_f = rank[b]
                i += 1
        if j < nd:
            b = dn_dst[j]
            if early_stop and rank[b] > top_b:
                j = nd
            else:
                sb += 1
                db = dist_b[b]
                if db != INF:
                    a = dn_src[j]
                    nd_ = dn_w[j] + db
                    if nd_ < dist_b[a] - tol:
                        dist_b[a] = nd_
                        succ_b[a] = dn_arc[j]
                        upd += 1
                        if early_stop and rank[a] > top_b:
                            top_b = rank[a]
                j += 1
    return sf, sb, upd


def scan_up_multi(up_src, up_dst, up_w, up_arc, start, dist, pred, tol):
    """One pass over upward arcs relaxing every departure row of ``dist``."""
    k = len(dist)
    scanned = upd = 0
    rows = range(k)
    for i in range(start, len(up_src)):
        scanned += 1
        a = up_src[i]
        b = up_dst[i]
        w = up_w[i]
        for r in rows:
            row = dist[r]
            da = row[a]
            if da != INF:
                nd_ = da + w
                if nd_ < row[b] - tol:
                    row[b] = nd_
                    pred[r][b] = up_arc[i]
                    upd += 1
    return scanned, upd


def scan_down_multi(dn_src, dn_dst, dn_w, dn_arc, start, dist, succ, tol):
    """One pass over downward arcs relaxing every arrival row of ``dist``."""
    k = len(dist)
    scanned = upd = 0
    rows = range(k)
    for j in range(start, len(dn_src)):
        scanned += 1
        a = dn_src[j]
        b = dn_dst[j]
        w = dn_w[j]
        for r in rows:
            row = dist[r]
            db = row[b]
            if db != INF:
                nd_ = w + db
                if nd_ < row[a] - tol:
                    row[a] = nd_
                    succ[r][a] = dn_arc[j]
                    upd += 1
    return scanned, upd


def combine(dist_f, dist_b):
    """``(min_v dist_f[v] + dist_b[v], argmin)``; smallest node on ties, ``-1`` if none."""
    best = INF
    meet = -1
    for v in range(len(dist_f)):
        x = dist_f[v] + dist_b[v]
        if x < best:
            best = x
            meet = v
    return best, meet


def bidir_dijkstra(
    up_off, up_dst, up_w, up_arc,
    dn_off, dn_src, dn_w, dn_arc,
    rank, s, t,
    dist_f, pred_f, dist_b, succ_b,
):
    """Upward forward search from ``s`` and downward backward search from ``t``.

    ``up_off`` / ``dn_off`` are indexed by rank: the upward arcs leaving
    ``v`` and the downward arcs entering ``v`` sit at
    ``[off[rank[v]], off[rank[v] + 1])``.

    Returns ``(distance, meeting, settled, relaxed, heap_ops)``.
    """
    dist_f[s] = 0.0
    dist_b[t] = 0.0
    done_f = set()
    done_b = set()
    heap_f = [(0.0, s)]
    heap_b = [(0.0, t)]
    ops = 2
    mu = INF
    if s == t:
        mu = 0.0
    settled = relaxed = 0
    forward = True
    while True:
        act_f = bool(heap_f) and heap_f[0][0] < mu
        act_b = bool(heap_b) and heap_b[0][0] < mu
        if not (act_f or act_b):
            break
        if act_f and (forward or not act_b):
            d, u = heapq.heappop(heap_f)
            ops += 1
            if u not in done_f:
                done_f.add(u)
                settled += 1
                r = rank[u]
                for i in range(up_off[r], up_off[r + 1]):
                    v = up_dst[i]
                    nd_ = d + up_w[i]
                    relaxed += 1
                    if nd_ < dist_f[v]:
                        dist_f[v] = nd_
                        pred_f[v] = up_arc[i]
                        heapq.heappush(heap_f, (nd_, v))
                        ops += 1
                        x = nd_ + dist_b[v]
                        if x < mu:
                            mu = x
        else:
            d, u = heapq.heappop(heap_b)
            ops += 1
            if u not in done_b:
                done_b.add(u)
                settled += 1
                r = rank[u]
                for j in range(dn_off[r], dn_off[r + 1]):
                    v = dn_src[j]
                    nd_ = dn_w[j] + d
                    relaxed += 1
                    if nd_ < dist_b[v]:
                        dist_b[v] = nd_
                        succ_b[v] = dn_arc[j]
                        heapq.heappush(heap_b, (nd_, v))
                        ops += 1
                        x = dist_f[v] + nd_
                        if x < mu:
                            mu = x
        forward = not forward
    best, meet = combine(dist_f, dist_b)
    return best, meet, settled, relaxed, ops


def bidir_dijkstra_batch(
    up_off, up_dst, up_w, up_arc,
    dn_off, dn_src, dn_w, dn_arc,
    rank, sources, targets,
):
    n = len(rank)
    out = []
    for s, t in zip(sources, targets):
        df = [INF] * n
        db = [INF] * n
        pf = [-1] * n
        sb = [-1] * n
        out.append(bidir_dijkstra(up_off, up_dst, up_w, up_arc, dn_off, dn_src, dn_w, dn_arc,
                                  rank, s, t, df, pf, db, sb)[0])
    return out


def csa_ch_batch(
    up_src, up_dst, up_w, up_arc, up_off,
    dn_src, dn_dst, dn_w, dn_arc, dn_off,
    rank, sources, targets, tol, early_stop,
):
    """Full one-to-one lock-step query for each pair; returns distances."""
    n = len(rank)
    out = []
    for s, t in zip(sources, targets):
        df = [INF] * n
        db = [INF] * n
        pf = [-1] * n
        sb = [-1] * n
        df[s] = 0.0
        db[t] = 0.0
        lockstep_scan(up_src, up_dst, up_w, up_arc, up_off[rank[s]],
                      dn_src, dn_dst, dn_w, dn_arc, dn_off[rank[t]],
                      df, pf, db, sb, rank, tol, early_stop)
        out.append(combine(df, db)[0])
    return out


def csa_connections(dep_stop, arr_stop, dep_time, arr_time, start, T, pred, is_arrival, use_break):
    """Earliest-arrival connection scan from index ``start``; returns connections scanned.

    ``T`` holds seeded departure times (``inf`` elsewhere).  With
    ``use_break`` the scan stops once the current departure time reaches
    the latest label over arrival stops, provided all of them are finite.
    """
    n_conn = len(dep_stop)
    bound = INF
    arrivals = [s for s, flag in enumerate(is_arrival) if flag]
    if use_break and arrivals:
        bound = max(T[s] for s in arrivals)
    scanned = 0
    for c in range(start, n_conn):
        td = dep_time[c]
        if use_break and td >= bound:
            break
        scanned += 1
        if T[dep_stop[c]] <= td:
            b = arr_stop[c]
            ta = arr_time[c]
            if ta < T[b]:
                T[b] = ta
                pred[b] = c
                if use_break and is_arrival[b]:
                    bound = max(T[s] for s in arrivals)
    return scanned
