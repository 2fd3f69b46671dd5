# distutils: language = c++
# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.  Mirrors ``_pykernels`` signature for signature."""
import numpy as np

from libc.math cimport INFINITY
from libc.stdlib cimport malloc, free
from libcpp.vector cimport vector

ctypedef long long i64


cdef i64 _max_labeled_rank(double[::1] dist, const i64[::1] rank) noexcept nogil:
    cdef i64 v, best = -1
    for v in range(dist.shape[0]):
        if dist[v] != INFINITY and rank[v] > best:
            best = rank[v]
    return best


cdef void _lockstep(
    const i64[::1] up_src, const i64[::1] up_dst, const double[::1] up_w, const i64[::1] up_arc, i64 up_start,
    const i64[::1] dn_src, const i64[::1] dn_dst, const double[::1] dn_w, const i64[::1] dn_arc, i64 dn_start,
    double[::1] dist_f, i64[::1] pred_f, double[::1] dist_b, i64[::1] succ_b,
    const i64[::1] rank, double tol, bint early_stop, i64* out,
) noexcept nogil:
    cdef i64 nu = up_src.shape[0], nd = dn_src.shape[0]
    cdef i64 i = up_start, j = dn_start, a, b
    cdef i64 sf = 0, sb = 0, upd = 0, top_f = 0, top_b = 0
    cdef double da, db, x
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
                if da != INFINITY:
                    b = up_dst[i]
                    x = da + up_w[i]
                    if x < dist_f[b] - tol:
                        dist_f[b] = x
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
                if db != INFINITY:
                    a = dn_src[j]
                    x = dn_w[j] + db
                    if x < dist_b[a] - tol:
                        dist_b[a] = x
                        succ_b[a] = dn_arc[j]
                        upd += 1
                        if early_stop and rank[a] > top_b:
                            top_b = rank[a]
                j += 1
    out[0] = sf
    out[1] = sb
    out[2] = upd


def lockstep_scan(
    const i64[::1] up_src, const i64[::1] up_dst, const double[::1] up_w, const i64[::1] up_arc, i64 up_start,
    const i64[::1] dn_src, const i64[::1] dn_dst, const double[::1] dn_w, const i64[::1] dn_arc, i64 dn_start,
    double[::1] dist_f, i64[::1] pred_f, double[::1] dist_b, i64[::1] succ_b,
    const i64[::1] rank, double tol, bint early_stop,
):
    cdef i64 out[3]
    with nogil:
        _lockstep(up_src, up_dst, up_w, up_arc, up_start,
                  dn_src, dn_dst, dn_w, dn_arc, dn_start,
                  dist_f, pred_f, dist_b, succ_b, rank, tol, early_stop, out)
    return out[0], out[1], out[2]


def scan_up_multi(const i64[::1] up_src, const i64[::1] up_dst, const double[::1] up_w, const i64[::1] up_arc,
                  i64 start, double[:, ::1] dist, i64[:, ::1] pred, double tol):
    cdef i64 i, r, a, b, k = dist.shape[0], scanned = 0, upd = 0
    cdef double w, da, x
    with nogil:
        for i in range(start, up_src.shape[0]):
            scanned += 1
            a = up_src[i]
            b = up_dst[i]
            w = up_w[i]
            for r in range(k):
                da = dist[r, a]
                if da != INFINITY:
                    x = da + w
                    if x < dist[r, b] - tol:
                        dist[r, b] = x
                        pred[r, b] = up_arc[i]
                        upd += 1
    return scanned, upd


def scan_down_multi(const i64[::1] dn_src, const i64[::1] dn_dst, const double[::1] dn_w, const i64[::1] dn_arc,
                    i64 start, double[:, ::1] dist, i64[:, ::1] succ, double tol):
    cdef i64 j, r, a, b, k = dist.shape[0], scanned = 0, upd = 0
    cdef double w, db, x
    with nogil:
        for j in range(start, dn_src.shape[0]):
            scanned += 1
            a = dn_src[j]
            b = dn_dst[j]
            w = dn_w[j]
            for r in range(k):
                db = dist[r, b]
                if db != INFINITY:
                    x = w + db
                    if x < dist[r, a] - tol:
                        dist[r, a] = x
                        succ[r, a] = dn_arc[j]
                        upd += 1
    return scanned, upd


cdef void _combine(double[::1] dist_f, double[::1] dist_b, double* best, i64* meet) noexcept nogil:
    cdef i64 v
    cdef double x
    best[0] = INFINITY
    meet[0] = -1
    for v in range(dist_f.shape[0]):
        x = dist_f[v] + dist_b[v]
        if x < best[0]:
            best[0] = x
            meet[0] = v


def combine(double[::1] dist_f, double[::1] dist_b):
    cdef double best
    cdef i64 meet
    _combine(dist_f, dist_b, &best, &meet)
    return best, meet


# ---------------------------------------------------------------------------
# binary min-heap on (key, node) with lazy deletion

cdef struct Heap:
    double* key
    i64* node
    i64 size


cdef inline void _push(Heap* h, double k, i64 v) noexcept nogil:
    cdef i64 i = h.size, p
    h.size += 1
    while i > 0:
        p = (i - 1) >> 1
        if h.key[p] < k or (h.key[p] == k and h.node[p] <= v):
            break
        h.key[i] = h.key[p]
        h.node[i] = h.node[p]
        i = p
    h.key[i] = k
    h.node[i] = v


cdef inline void _pop(Heap* h, double* k, i64* v) noexcept nogil:
    cdef i64 i = 0, c, n
    cdef double lk
    cdef i64 lv
    k[0] = h.key[0]
    v[0] = h.node[0]
    h.size -= 1
    n = h.size
    if n == 0:
        return
    lk = h.key[n]
    lv = h.node[n]
    while True:
        c = 2 * i + 1
        if c >= n:
            break
        if c + 1 < n and (h.key[c + 1] < h.key[c] or (h.key[c + 1] == h.key[c] and h.node[c + 1] < h.node[c])):
            c += 1
        if lk < h.key[c] or (lk == h.key[c] and lv <= h.node[c]):
            break
        h.key[i] = h.key[c]
        h.node[i] = h.node[c]
        i = c
    h.key[i] = lk
    h.node[i] = lv


cdef void _bidir(
    const i64[::1] up_off, const i64[::1] up_dst, const double[::1] up_w, const i64[::1] up_arc,
    const i64[::1] dn_off, const i64[::1] dn_src, const double[::1] dn_w, const i64[::1] dn_arc,
    const i64[::1] rank, i64 s, i64 t,
    double[::1] dist_f, i64[::1] pred_f, double[::1] dist_b, i64[::1] succ_b,
    Heap* hf, Heap* hb, signed char* done_f, signed char* done_b, double* res, i64* stats,
) noexcept nogil:
    cdef double mu = INFINITY, d, x
    cdef i64 u, v, r, i, settled = 0, relaxed = 0, ops = 2
    cdef bint act_f, act_b, forward = True
    dist_f[s] = 0.0
    dist_b[t] = 0.0
    hf.size = 0
    hb.size = 0
    _push(hf, 0.0, s)
    _push(hb, 0.0, t)
    if s == t:
        mu = 0.0
    while True:
        act_f = hf.size > 0 and hf.key[0] < mu
        act_b = hb.size > 0 and hb.key[0] < mu
        if not (act_f or act_b):
            break
        if act_f and (forward or not act_b):
            _pop(hf, &d, &u)
            ops += 1
            if not done_f[u]:
                done_f[u] = 1
                settled += 1
                r = rank[u]
                for i in range(up_off[r], up_off[r + 1]):
                    v = up_dst[i]
                    x = d + up_w[i]
                    relaxed += 1
                    if x < dist_f[v]:
                        dist_f[v] = x
                        pred_f[v] = up_arc[i]
                        _push(hf, x, v)
                        ops += 1
                        if x + dist_b[v] < mu:
                            mu = x + dist_b[v]
        else:
            _pop(hb, &d, &u)
            ops += 1
            if not done_b[u]:
                done_b[u] = 1
                settled += 1
                r = rank[u]
                for i in range(dn_off[r], dn_off[r + 1]):
                    v = dn_src[i]
                    x = dn_w[i] + d
                    relaxed += 1
                    if x < dist_b[v]:
                        dist_b[v] = x
                        succ_b[v] = dn_arc[i]
                        _push(hb, x, v)
                        ops += 1
                        if dist_f[v] + x < mu:
                            mu = dist_f[v] + x
        forward = not forward
    _combine(dist_f, dist_b, &res[0], &stats[0])
    stats[1] = settled
    stats[2] = relaxed
    stats[3] = ops


cdef int _heaps_alloc(Heap* hf, Heap* hb, i64 cap_f, i64 cap_b) noexcept nogil:
    hf.key = <double*> malloc(cap_f * sizeof(double))
    hf.node = <i64*> malloc(cap_f * sizeof(i64))
    hb.key = <double*> malloc(cap_b * sizeof(double))
    hb.node = <i64*> malloc(cap_b * sizeof(i64))
    return hf.key != NULL and hf.node != NULL and hb.key != NULL and hb.node != NULL


cdef void _heaps_free(Heap* hf, Heap* hb) noexcept nogil:
    free(hf.key)
    free(hf.node)
    free(hb.key)
    free(hb.node)


def bidir_dijkstra(
    const i64[::1] up_off, const i64[::1] up_dst, const double[::1] up_w, const i64[::1] up_arc,
    const i64[::1] dn_off, const i64[::1] dn_src, const double[::1] dn_w, const i64[::1] dn_arc,
    const i64[::1] rank, i64 s, i64 t,
    double[::1] dist_f, i64[::1] pred_f, double[::1] dist_b, i64[::1] succ_b,
):
    cdef Heap hf, hb
    cdef double res
    cdef i64 stats[4]
    cdef i64 n = rank.shape[0]
    done = np.zeros(2 * n, dtype=np.int8)
    cdef signed char[::1] dv = done
    if not _heaps_alloc(&hf, &hb, up_dst.shape[0] + 1, dn_src.shape[0] + 1):
        _heaps_free(&hf, &hb)
        raise MemoryError()
    with nogil:
        _bidir(up_off, up_dst, up_w, up_arc, dn_off, dn_src, dn_w, dn_arc, rank, s, t,
               dist_f, pred_f, dist_b, succ_b, &hf, &hb, &dv[0], &dv[n], &res, stats)
        _heaps_free(&hf, &hb)
    return res, stats[0], stats[1], stats[2], stats[3]


def bidir_dijkstra_batch(
    const i64[::1] up_off, const i64[::1] up_dst, const double[::1] up_w, const i64[::1] up_arc,
    const i64[::1] dn_off, const i64[::1] dn_src, const double[::1] dn_w, const i64[::1] dn_arc,
    const i64[::1] rank, const i64[::1] sources, const i64[::1] targets,
):
    cdef Heap hf, hb
    cdef double res
    cdef i64 stats[4]
    cdef i64 n = rank.shape[0], q, v
    out = np.empty(sources.shape[0])
    cdef double[::1] ov = out
    df = np.empty(n)
    db = np.empty(n)
    pf = np.empty(n, dtype=np.int64)
    sb = np.empty(n, dtype=np.int64)
    cdef double[::1] dfv = df, dbv = db
    cdef i64[::1] pfv = pf, sbv = sb
    done = np.zeros(2 * n, dtype=np.int8)
    cdef signed char[::1] dv = done
    if not _heaps_alloc(&hf, &hb, up_dst.shape[0] + 1, dn_src.shape[0] + 1):
        _heaps_free(&hf, &hb)
        raise MemoryError()
    with nogil:
        for q in range(sources.shape[0]):
            for v in range(n):
                dfv[v] = INFINITY
                dbv[v] = INFINITY
                pfv[v] = -1
                sbv[v] = -1
                dv[v] = 0
                dv[n + v] = 0
            _bidir(up_off, up_dst, up_w, up_arc, dn_off, dn_src, dn_w, dn_arc, rank,
                   sources[q], targets[q], dfv, pfv, dbv, sbv, &hf, &hb, &dv[0], &dv[n], &res, stats)
            ov[q] = res
        _heaps_free(&hf, &hb)
    return out


def csa_ch_batch(
    const i64[::1] up_src, const i64[::1] up_dst, const double[::1] up_w, const i64[::1] up_arc, const i64[::1] up_off,
    const i64[::1] dn_src, const i64[::1] dn_dst, const double[::1] dn_w, const i64[::1] dn_arc, const i64[::1] dn_off,
    const i64[::1] rank, const i64[::1] sources, const i64[::1] targets, double tol, bint early_stop,
):
    cdef i64 n = rank.shape[0], q, v, s, t, meet
    cdef i64 st[3]
    cdef double best
    out = np.empty(sources.shape[0])
    cdef double[::1] ov = out
    df = np.empty(n)
    db = np.empty(n)
    pf = np.empty(n, dtype=np.int64)
    sb = np.empty(n, dtype=np.int64)
    cdef double[::1] dfv = df, dbv = db
    cdef i64[::1] pfv = pf, sbv = sb
    with nogil:
        for q in range(sources.shape[0]):
            s = sources[q]
            t = targets[q]
            for v in range(n):
                dfv[v] = INFINITY
                dbv[v] = INFINITY
                pfv[v] = -1
                sbv[v] = -1
            dfv[s] = 0.0
            dbv[t] = 0.0
            _lockstep(up_src, up_dst, up_w, up_arc, up_off[rank[s]],
                      dn_src, dn_dst, dn_w, dn_arc, dn_off[rank[t]],
                      dfv, pfv, dbv, sbv, rank, tol, early_stop, st)
            _combine(dfv, dbv, &best, &meet)
            ov[q] = best
    return out


def csa_connections(const i64[::1] dep_stop, const i64[::1] arr_stop, const double[::1] dep_time, const double[::1] arr_time,
                    i64 start, double[::1] T, i64[::1] pred, const signed char[::1] is_arrival, bint use_break):
    cdef i64 c, b, s, n_conn = dep_stop.shape[0], n_stop = T.shape[0], scanned = 0
    cdef double bound = INFINITY, td, ta
    cdef bint any_arrival = False

    with nogil:
        if use_break:
            bound = -INFINITY
            for s in range(n_stop):
                if is_arrival[s]:
                    any_arrival = True
                    if T[s] > bound:
                        bound = T[s]
            if not any_arrival:
                bound = INFINITY
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
                        bound = -INFINITY
                        for s in range(n_stop):
                            if is_arrival[s] and T[s] > bound:
                                bound = T[s]
    return scanned


# ---------------------------------------------------------------------------
# contraction
#
# Adjacency lists keep insertion order, replace in place and erase without
# reordering, so iteration matches the dict-based reference contractor and
# both produce identical arc sequences.

cdef struct Nbr:
    i64 node
    i64 arc


cdef struct Item:
    double key
    i64 node


cdef inline bint _item_less(Item a, Item b) noexcept nogil:
    return a.key < b.key or (a.key == b.key and a.node < b.node)


cdef void _vpush(vector[Item]& h, double k, i64 v) noexcept nogil:
    cdef Item it
    it.key = k
    it.node = v
    h.push_back(it)
    cdef size_t i = h.size() - 1, p
    while i > 0:
        p = (i - 1) >> 1
        if not _item_less(it, h[p]):
            break
        h[i] = h[p]
        i = p
    h[i] = it


cdef Item _vpop(vector[Item]& h) noexcept nogil:
    cdef Item top = h[0]
    cdef Item last = h.back()
    h.pop_back()
    cdef size_t n = h.size(), i = 0, c
    if n == 0:
        return top
    while True:
        c = 2 * i + 1
        if c >= n:
            break
        if c + 1 < n and _item_less(h[c + 1], h[c]):
            c += 1
        if not _item_less(h[c], last):
            break
        h[i] = h[c]
        i = c
    h[i] = last
    return top


cdef class Contractor:
    cdef i64 n, settle_limit, stamp, cached_v
    cdef vector[vector[Nbr]] out_, in_
    cdef vector[i64] src, dst, mid, first, second
    cdef vector[double] w
    cdef vector[double] dist
    cdef vector[i64] seen, settled, target_mark
    cdef vector[Item] heap
    cdef vector[i64] found
    cdef public list order

    def __init__(self, i64 n, src, dst, weights, i64 settle_limit):
        cdef i64 i
        self.n = n
        self.settle_limit = settle_limit
        self.out_.resize(n)
        self.in_.resize(n)
        self.dist.resize(n, INFINITY)
        self.seen.resize(n, 0)
        self.settled.resize(n, 0)
        self.target_mark.resize(n, 0)
        self.stamp = 0
        self.cached_v = -1
        self.order = []
        for i in range(len(src)):
            self.src.push_back(src[i])
            self.dst.push_back(dst[i])
            self.w.push_back(weights[i])
            self.mid.push_back(-1)
            self.first.push_back(-1)
            self.second.push_back(-1)
            self._link(src[i], dst[i], i)

    cdef i64 _find(self, vector[Nbr]& lst, i64 node) noexcept nogil:
        cdef size_t k
        for k in range(lst.size()):
            if lst[k].node == node:
                return <i64> k
        return -1

    cdef void _link(self, i64 u, i64 v, i64 arc) noexcept nogil:
        cdef i64 k = self._find(self.out_[u], v)
        cdef Nbr nb
        if k < 0:
            nb.node = v
            nb.arc = arc
            self.out_[u].push_back(nb)
            nb.node = u
            self.in_[v].push_back(nb)
        elif self.w[arc] < self.w[self.out_[u][k].arc]:
            self.out_[u][k].arc = arc
            self.in_[v][self._find(self.in_[v], u)].arc = arc

    cdef void _erase(self, vector[Nbr]& lst, i64 node) noexcept nogil:
        cdef i64 k = self._find(lst, node)
        if k >= 0:
            lst.erase(lst.begin() + k)

    cdef void _witness(self, i64 u, i64 excluded, double cap, i64 n_targets) noexcept nogil:
        # targets carry target_mark == stamp; distances left in dist/seen
        cdef i64 count = 0, remaining = n_targets, x, y, arc
        cdef double d, nd
        cdef Item it
        cdef size_t k
        self.heap.clear()
        self.dist[u] = 0.0
        self.seen[u] = self.stamp
        _vpush(self.heap, 0.0, u)
        while self.heap.size() > 0 and count < self.settle_limit:
            it = _vpop(self.heap)
            d = it.key
            x = it.node
            if self.settled[x] == self.stamp:
                continue
            if d > cap:
                break
            self.settled[x] = self.stamp
            count += 1
            if self.target_mark[x] == self.stamp:
                remaining -= 1
                if remaining == 0:
                    break
            for k in range(self.out_[x].size()):
                y = self.out_[x][k].node
                if y == excluded:
                    continue
                nd = d + self.w[self.out_[x][k].arc]
                if nd <= cap and (self.seen[y] != self.stamp or nd < self.dist[y]):
                    self.dist[y] = nd
                    self.seen[y] = self.stamp
                    _vpush(self.heap, nd, y)

    cdef void _needed(self, i64 v) noexcept nogil:
        cdef size_t a, b
        cdef i64 u, x, a_uv, a_vw, k, n_t
        cdef double w_uv, via, cap
        if self.cached_v == v:
            return
        self.found.clear()
        for a in range(self.in_[v].size()):
            u = self.in_[v][a].node
            a_uv = self.in_[v][a].arc
            w_uv = self.w[a_uv]
            self.stamp += 1
            n_t = 0
            cap = -INFINITY
            for b in range(self.out_[v].size()):
                x = self.out_[v][b].node
                if x == u:
                    continue
                via = w_uv + self.w[self.out_[v][b].arc]
                k = self._find(self.out_[u], x)
                if k >= 0 and self.w[self.out_[u][k].arc] <= via:
                    continue
                self.target_mark[x] = self.stamp
                n_t += 1
                if via > cap:
                    cap = via
            if n_t == 0:
                continue
            self._witness(u, v, cap, n_t)
            for b in range(self.out_[v].size()):
                x = self.out_[v][b].node
                if self.target_mark[x] != self.stamp:
                    continue
                a_vw = self.out_[v][b].arc
                via = w_uv + self.w[a_vw]
                if not (self.seen[x] == self.stamp and self.dist[x] <= via):
                    self.found.push_back(u)
                    self.found.push_back(x)
                    self.found.push_back(a_uv)
                    self.found.push_back(a_vw)
        self.cached_v = v

    def needed(self, i64 v):
        self._needed(v)
        cdef size_t k
        return [(self.found[k], self.found[k + 1], self.found[k + 2], self.found[k + 3])
                for k in range(0, self.found.size(), 4)]

    def edge_difference(self, i64 v):
        self._needed(v)
        return <i64> (self.found.size() // 4) - <i64> self.in_[v].size() - <i64> self.out_[v].size()

    def contract_node(self, i64 v):
        cdef size_t k
        cdef i64 u, x, a1, a2, arc
        cdef size_t j
        with nogil:
            self._needed(v)
            for k in range(0, self.found.size(), 4):
                u = self.found[k]
                x = self.found[k + 1]
                a1 = self.found[k + 2]
                a2 = self.found[k + 3]
                arc = <i64> self.w.size()
                self.src.push_back(u)
                self.dst.push_back(x)
                self.w.push_back(self.w[a1] + self.w[a2])
                self.mid.push_back(v)
                self.first.push_back(a1)
                self.second.push_back(a2)
                self._link(u, x, arc)
            for j in range(self.out_[v].size()):
                self._erase(self.in_[self.out_[v][j].node], v)
            for j in range(self.in_[v].size()):
                self._erase(self.out_[self.in_[v][j].node], v)
            self.out_[v].clear()
            self.in_[v].clear()
            self.cached_v = -1
        self.order.append(v)

    def export(self):
        """``(src, dst, weight, mid, first, second)`` lists over all arcs."""
        return (list(self.src), list(self.dst), list(self.w), list(self.mid),
                list(self.first), list(self.second))
