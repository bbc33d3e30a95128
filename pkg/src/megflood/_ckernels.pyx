# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled hot kernels: radius-graph queries on a bucket grid and the lazy
edge-MEG flooding step.  Mirrors ``_pykernels`` output bit for bit."""

import numpy as np

from libc.stdint cimport int64_t, uint64_t, uint8_t
from libcpp.unordered_map cimport unordered_map
from libcpp.vector cimport vector
from cython.operator cimport dereference as deref

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t MIX2 = 0x94D049BB133111EBULL


cdef inline uint64_t mix64(uint64_t x) nogil:
    cdef uint64_t z = x + GOLDEN
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


cdef inline double ipow(double base, int64_t k) nogil:
    cdef double result = 1.0
    while k:
        if k & 1:
            result *= base
        base *= base
        k >>= 1
    return result


cdef int64_t _bucket_csr(const int64_t[:] pi, const int64_t[:] pj, const uint8_t[:] keep,
                         int64_t bucket, int64_t nb, int64_t[:] starts, int64_t[:] members):
    # counting sort of kept nodes by bucket id; starts has nb*nb + 1 slots
    cdef Py_ssize_t n = pi.shape[0]
    cdef Py_ssize_t u
    cdef int64_t b, total = 0
    starts[:] = 0
    for u in range(n):
        if keep[u]:
            b = (pi[u] // bucket) * nb + pj[u] // bucket
            starts[b + 1] += 1
    for b in range(nb * nb):
        starts[b + 1] += starts[b]
    cdef int64_t[:] fill = np.array(starts[:nb * nb], dtype=np.int64)
    for u in range(n):
        if keep[u]:
            b = (pi[u] // bucket) * nb + pj[u] // bucket
            members[fill[b]] = u
            fill[b] += 1
            total += 1
    return total


cdef int64_t _grid_size(const int64_t[:] pi, const int64_t[:] pj, int64_t bucket):
    cdef Py_ssize_t u
    cdef int64_t m = 0
    for u in range(pi.shape[0]):
        if pi[u] > m:
            m = pi[u]
        if pj[u] > m:
            m = pj[u]
    return m // bucket + 1


def geo_pairs(pi_in, pj_in, int64_t r2u, int64_t bucket):
    cdef const int64_t[:] pi = np.ascontiguousarray(pi_in, dtype=np.int64)
    cdef const int64_t[:] pj = np.ascontiguousarray(pj_in, dtype=np.int64)
    cdef Py_ssize_t n = pi.shape[0]
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    cdef int64_t nb = _grid_size(pi, pj, bucket)
    cdef int64_t[:] starts = np.zeros(nb * nb + 1, dtype=np.int64)
    cdef int64_t[:] members = np.zeros(n, dtype=np.int64)
    cdef const uint8_t[:] keep = np.ones(n, dtype=np.uint8)
    _bucket_csr(pi, pj, keep, bucket, nb, starts, members)
    cdef vector[int64_t] out
    cdef Py_ssize_t u
    cdef int64_t bx, by, x, y, b, s, v, di, dj
    for u in range(n):
        bx = pi[u] // bucket
        by = pj[u] // bucket
        for x in range(bx - 1, bx + 2):
            if x < 0 or x >= nb:
                continue
            for y in range(by - 1, by + 2):
                if y < 0 or y >= nb:
                    continue
                b = x * nb + y
                for s in range(starts[b], starts[b + 1]):
                    v = members[s]
                    if v <= u:
                        continue
                    di = pi[u] - pi[v]
                    dj = pj[u] - pj[v]
                    if di * di + dj * dj <= r2u:
                        out.push_back(u * n + v)
    res = np.empty(out.size(), dtype=np.int64)
    cdef int64_t[:] rv = res
    cdef size_t k
    for k in range(out.size()):
        rv[k] = out[k]
    res.sort()
    return res


def geo_degrees(pi_in, pj_in, int64_t r2u, int64_t bucket):
    cdef const int64_t[:] pi = np.ascontiguousarray(pi_in, dtype=np.int64)
    cdef const int64_t[:] pj = np.ascontiguousarray(pj_in, dtype=np.int64)
    cdef Py_ssize_t n = pi.shape[0]
    deg = np.zeros(n, dtype=np.int64)
    if n < 2:
        return deg
    cdef int64_t[:] d = deg
    cdef int64_t nb = _grid_size(pi, pj, bucket)
    cdef int64_t[:] starts = np.zeros(nb * nb + 1, dtype=np.int64)
    cdef int64_t[:] members = np.zeros(n, dtype=np.int64)
    cdef const uint8_t[:] keep = np.ones(n, dtype=np.uint8)
    _bucket_csr(pi, pj, keep, bucket, nb, starts, members)
    cdef Py_ssize_t u
    cdef int64_t bx, by, x, y, b, s, v, di, dj
    for u in range(n):
        bx = pi[u] // bucket
        by = pj[u] // bucket
        for x in range(bx - 1, bx + 2):
            if x < 0 or x >= nb:
                continue
            for y in range(by - 1, by + 2):
                if y < 0 or y >= nb:
                    continue
                b = x * nb + y
                for s in range(starts[b], starts[b + 1]):
                    v = members[s]
                    if v == u:
                        continue
                    di = pi[u] - pi[v]
                    dj = pj[u] - pj[v]
                    if di * di + dj * dj <= r2u:
                        d[u] += 1
    return deg


def geo_expand(pi_in, pj_in, informed_in, int64_t r2u, int64_t bucket):
    """I ∪ N(I) on the radius graph; scans only informed nodes in the 3x3
    buckets around each uninformed node and stops at the first hit."""
    cdef const int64_t[:] pi = np.ascontiguousarray(pi_in, dtype=np.int64)
    cdef const int64_t[:] pj = np.ascontiguousarray(pj_in, dtype=np.int64)
    inf_arr = np.ascontiguousarray(informed_in, dtype=np.uint8)
    cdef const uint8_t[:] informed = inf_arr
    cdef Py_ssize_t n = pi.shape[0]
    out = inf_arr.astype(bool)
    if n < 2:
        return out
    cdef uint8_t[:] o = out.view(np.uint8)
    cdef int64_t nb = _grid_size(pi, pj, bucket)
    cdef int64_t[:] starts = np.zeros(nb * nb + 1, dtype=np.int64)
    cdef int64_t[:] members = np.zeros(n, dtype=np.int64)
    if _bucket_csr(pi, pj, informed, bucket, nb, starts, members) == 0:
        return out
    cdef Py_ssize_t u
    cdef int64_t bx, by, x, y, b, s, v, di, dj
    cdef bint found
    for u in range(n):
        if informed[u]:
            continue
        bx = pi[u] // bucket
        by = pj[u] // bucket
        found = False
        for x in range(bx - 1, bx + 2):
            if found or x < 0 or x >= nb:
                continue
            for y in range(by - 1, by + 2):
                if found or y < 0 or y >= nb:
                    continue
                b = x * nb + y
                for s in range(starts[b], starts[b + 1]):
                    v = members[s]
                    di = pi[u] - pi[v]
                    dj = pj[u] - pj[v]
                    if di * di + dj * dj <= r2u:
                        found = True
                        break
        if found:
            o[u] = 1
    return out


def ipow_py(double base, int64_t k):
    return ipow(base, k)


def kstep_on_probability(double p, double q, int64_t k, bint start_on):
    cdef double p_hat = p / (p + q)
    cdef double r1 = ipow(1.0 - p - q, k)
    if start_on:
        return p_hat + (1.0 - p_hat) * r1
    return p_hat * (1.0 - r1)


cdef class LazyFloodLedger:
    """Compiled twin of ``_pykernels.LazyFloodLedger``.

    Ledger entries live with their uninformed endpoint ``v`` as
    ``u -> time * 2 + state``; a node's map is cleared once it is informed.
    """

    cdef public int64_t n
    cdef public double p, q, p_hat
    cdef public uint64_t seed
    cdef public int64_t queries
    cdef uint64_t seed_mix
    cdef double lam
    cdef vector[unordered_map[int64_t, int64_t]] ledger

    def __init__(self, n, p, q, seed, chunk_cells=None):
        self.n = n
        self.p = p
        self.q = q
        self.p_hat = self.p / (self.p + self.q)
        self.seed = (<uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF))
        self.seed_mix = mix64(self.seed)
        self.lam = 1.0 - self.p - self.q
        self.queries = 0
        self.ledger.resize(n)

    @property
    def ledger_size(self):
        cdef size_t total = 0
        cdef Py_ssize_t v
        for v in range(self.n):
            total += self.ledger[v].size()
        return total

    def step(self, informed_in, int64_t t):
        inf_arr = np.ascontiguousarray(informed_in, dtype=np.uint8)
        cdef const uint8_t[:] informed = inf_arr
        cdef int64_t n = self.n
        inf_idx_arr = np.flatnonzero(inf_arr).astype(np.int64)
        cdef const int64_t[:] inf_idx = inf_idx_arr
        cdef Py_ssize_t m = inf_idx.shape[0]
        now = inf_arr.astype(bool)
        cdef uint8_t[:] o = now.view(np.uint8)
        cdef Py_ssize_t v, a
        cdef int64_t u, lo, hi, key, entry, tprev
        cdef double prob, r1, x
        cdef uint64_t h
        cdef unordered_map[int64_t, int64_t].iterator it
        for v in range(n):
            if informed[v]:
                continue
            for a in range(m):
                u = inf_idx[a]
                if u < v:
                    lo = u
                    hi = v
                else:
                    lo = v
                    hi = u
                key = lo * n + hi
                it = self.ledger[v].find(u)
                if it == self.ledger[v].end():
                    prob = self.p_hat
                else:
                    entry = deref(it).second
                    tprev = entry >> 1
                    r1 = ipow(self.lam, t - tprev)
                    if entry & 1:
                        prob = self.p_hat + (1.0 - self.p_hat) * r1
                    else:
                        prob = self.p_hat * (1.0 - r1)
                h = mix64(mix64((<uint64_t>key) ^ self.seed_mix) ^ (<uint64_t>t))
                x = (h >> 11) * (1.0 / 9007199254740992.0)
                self.queries += 1
                if x < prob:
                    o[v] = 1
                    break
                self.ledger[v][u] = t * 2
        for v in range(n):
            if o[v] and not informed[v]:
                self.ledger[v].clear()
        return now
