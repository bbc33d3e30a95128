"""Pure numpy implementations of the hot kernels.

Same signatures and bit-identical outputs as the compiled ``_ckernels``
module; used when the extension is not built or ``MEGFLOOD_PURE=1``.
"""

from __future__ import annotations

import numpy as np

from .rng import hash_uniform_array

BACKEND = "python"

# half of the 3x3 bucket neighbourhood; (0, 0) handled as "within bucket"
_HALF_OFFSETS = ((0, 0), (0, 1), (1, -1), (1, 0), (1, 1))


def _bucket_index(pi, pj, bucket):
    bx = pi // bucket
    by = pj // bucket
    nb = int(max(bx.max(initial=0), by.max(initial=0))) + 1
    return bx, by, nb


def _candidate_pairs(pi, pj, bucket):
    """Node index pairs (a, b) from the same or adjacent buckets, each once."""
    bx, by, nb = _bucket_index(pi, pj, bucket)
    bid = bx * nb + by
    order = np.argsort(bid, kind="stable")
    counts = np.bincount(bid, minlength=nb * nb)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    occupied = np.flatnonzero(counts)
    ox, oy = occupied // nb, occupied % nb
    out_a, out_b = [], []
    for dx, dy in _HALF_OFFSETS:
        tx, ty = ox + dx, oy + dy
        ok = (tx >= 0) & (tx < nb) & (ty >= 0) & (ty < nb)
        b1 = occupied[ok]
        b2 = tx[ok] * nb + ty[ok]
        c1, c2 = counts[b1], counts[b2]
        sizes = c1 * c2
        keep = sizes > 0
        b1, b2, c1, c2, sizes = b1[keep], b2[keep], c1[keep], c2[keep], sizes[keep]
        total = int(sizes.sum())
        if total == 0:
            continue
        blk = np.repeat(np.arange(b1.size), sizes)
        w = np.arange(total) - np.repeat(np.cumsum(sizes) - sizes, sizes)
        ia = starts[b1][blk] + w // c2[blk]
        ib = starts[b2][blk] + w % c2[blk]
        if dx == 0 and dy == 0:
            sel = ia < ib
            ia, ib = ia[sel], ib[sel]
        out_a.append(order[ia])
        out_b.append(order[ib])
    if not out_a:
        z = np.zeros(0, dtype=np.int64)
        return z, z
    return np.concatenate(out_a), np.concatenate(out_b)


def _close_pairs(pi, pj, r2u, bucket):
    a, b = _candidate_pairs(pi, pj, bucket)
    di = pi[a] - pi[b]
    dj = pj[a] - pj[b]
    close = di * di + dj * dj <= r2u
    return a[close], b[close]


def geo_pairs(pi, pj, r2u, bucket):
    """Sorted pair keys ``u * n + v`` (u < v) with squared lattice distance <= r2u."""
    pi = np.asarray(pi, dtype=np.int64)
    pj = np.asarray(pj, dtype=np.int64)
    n = pi.size
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    a, b = _close_pairs(pi, pj, r2u, bucket)
    keys = np.minimum(a, b) * n + np.maximum(a, b)
    keys.sort()
    return keys


def geo_degrees(pi, pj, r2u, bucket):
    pi = np.asarray(pi, dtype=np.int64)
    pj = np.asarray(pj, dtype=np.int64)
    n = pi.size
    if n < 2:
        return np.zeros(n, dtype=np.int64)
    a, b = _close_pairs(pi, pj, r2u, bucket)
    return np.bincount(a, minlength=n) + np.bincount(b, minlength=n)


def geo_expand(pi, pj, informed, r2u, bucket):
    """Return I ∪ N(I) on the radius graph, I given as a boolean mask."""
    pi = np.asarray(pi, dtype=np.int64)
    pj = np.asarray(pj, dtype=np.int64)
    informed = np.asarray(informed, dtype=bool)
    out = informed.copy()
    if pi.size < 2 or informed.all() or not informed.any():
        return out
    a, b = _close_pairs(pi, pj, r2u, bucket)
    ia, ib = informed[a], informed[b]
    out[b[ia & ~ib]] = True
    out[a[ib & ~ia]] = True
    return out


def ipow(base, k):
    """base**k by square-and-multiply; the compiled kernel uses the same sequence."""
    result = 1.0
    k = int(k)
    while k:
        if k & 1:
            result *= base
        base *= base
        k >>= 1
    return result


def ipow_array(base, k):
    k = np.array(k, dtype=np.int64)
    result = np.ones(k.shape)
    b = np.full(k.shape, float(base))
    while np.any(k):
        odd = (k & 1).astype(bool)
        result[odd] *= b[odd]
        b *= b
        k >>= 1
    return result


def kstep_on_probability(p, q, k, start_on):
    p_hat = p / (p + q)
    r1 = ipow(1.0 - p - q, k)
    if start_on:
        return p_hat + (1.0 - p_hat) * r1
    return p_hat * (1.0 - r1)


class LazyFloodLedger:
    """Lazy edge-MEG state restricted to what flooding queries.

    Only edges between an informed node ``u`` and an uninformed node ``v``
    are ever examined.  For each uninformed ``v`` (ascending), informed
    nodes are tried in ascending order until the first present edge; every
    examined edge is recorded with its sampled state and time.  Entries
    whose endpoints are both informed can never be queried again and are
    dropped.
    """

    def __init__(self, n, p, q, seed, chunk_cells=1 << 22):
        self.n = int(n)
        self.p = float(p)
        self.q = float(q)
        self.seed = int(seed)
        self.p_hat = self.p / (self.p + self.q)
        self.queries = 0
        self._chunk_cells = chunk_cells
        self._keys = np.zeros(0, dtype=np.int64)
        self._state = np.zeros(0, dtype=bool)
        self._time = np.zeros(0, dtype=np.int64)
        self._lam = 1.0 - self.p - self.q

    @property
    def ledger_size(self):
        return int(self._keys.size)

    def _prob(self, keys, t):
        prob = np.full(keys.shape, self.p_hat)
        if self._keys.size == 0:
            return prob
        pos = np.minimum(np.searchsorted(self._keys, keys), self._keys.size - 1)
        found = self._keys[pos] == keys
        if found.any():
            hit = pos[found]
            r1 = ipow_array(self._lam, t - self._time[hit])
            prob[found] = np.where(
                self._state[hit],
                self.p_hat + (1.0 - self.p_hat) * r1,
                self.p_hat * (1.0 - r1),
            )
        return prob

    def step(self, informed, t):
        n = self.n
        informed = np.asarray(informed, dtype=bool)
        inf_idx = np.flatnonzero(informed)
        pending = np.flatnonzero(~informed)
        newly = np.zeros(n, dtype=bool)
        rec_keys, rec_state = [], []
        rows = max(1, self._chunk_cells // max(pending.size, 1))
        start = 0
        while start < inf_idx.size and pending.size:
            U = inf_idx[start:start + rows]
            start += rows
            lo = np.minimum(U[:, None], pending[None, :])
            hi = np.maximum(U[:, None], pending[None, :])
            keys = lo * n + hi
            u01 = hash_uniform_array(self.seed, keys.ravel(), t).reshape(keys.shape)
            x = u01 < self._prob(keys, t)
            hit = x.any(axis=0)
            first = np.where(hit, np.argmax(x, axis=0), U.size - 1)
            examined = np.arange(U.size)[:, None] <= first[None, :]
            self.queries += int(examined.sum())
            rec_keys.append(keys[examined])
            rec_state.append(x[examined])
            newly[pending[hit]] = True
            pending = pending[~hit]
        if rec_keys:
            nk = np.concatenate(rec_keys)
            ns = np.concatenate(rec_state)
            keys = np.concatenate([nk, self._keys])
            state = np.concatenate([ns, self._state])
            time = np.concatenate([np.full(nk.size, t, dtype=np.int64), self._time])
            # fresh records come first, so np.unique's first index keeps them
            keys, first_idx = np.unique(keys, return_index=True)
            state, time = state[first_idx], time[first_idx]
        else:
            keys, state, time = self._keys, self._state, self._time
        now = informed | newly
        alive = ~(now[keys // n] & now[keys % n])
        self._keys, self._state, self._time = keys[alive], state[alive], time[alive]
        return now

