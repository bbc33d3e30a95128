"""Edge-Markovian evolving graphs.

Every unordered pair is an independent two-state chain: an absent edge is
born with probability p, a present one dies with probability q.  The
stationary graph is the Erdős–Rényi graph G(n, p_hat), p_hat = p / (p + q).

Two representations are offered.  :class:`EdgeMEG` keeps the full set of
alive edges and steps it exactly (binomial birth counts, rejection placement
on absent pairs).  :class:`LazyEdgeMEG` never materialises the graph; it
samples an edge only when flooding looks at it, from the k-step law given
the edge's last observed state.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

from . import _kernels
from ._pykernels import ipow
from .core import EvolvingGraph, RngStream, Snapshot
from .rng import hash_uniform


@dataclass(frozen=True)
class EdgeParams:
    n: int
    p: float
    q: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not (0 < self.p < 1 and 0 < self.q < 1):
            raise ValueError("birth and death rates must lie strictly between 0 and 1")

    @property
    def p_hat(self) -> float:
        return self.p / (self.p + self.q)

    @property
    def pairs(self) -> int:
        return self.n * (self.n - 1) // 2

    @classmethod
    def from_p_hat(cls, n: int, p_hat: float, q: float) -> "EdgeParams":
        """Birth rate chosen so the stationary density is ``p_hat``."""
        if not 0 < p_hat < 1:
            raise ValueError("p_hat must lie strictly between 0 and 1")
        return cls(n, q * p_hat / (1.0 - p_hat), q)


def expansion_threshold(n: int, c: float = 20.0) -> float:
    """c log n / n, below which the expansion guarantees are not claimed."""
    return c * math.log(n) / n if n > 1 else 0.0


def warn_if_sparse(params: EdgeParams, c: float = 20.0) -> bool:
    """Warn (and return True) when p_hat is under the expansion threshold."""
    thr = expansion_threshold(params.n, c)
    if params.p_hat < thr:
        warnings.warn(
            f"p_hat={params.p_hat:.4g} below c*log(n)/n={thr:.4g} (c={c}); expansion is not guaranteed",
            stacklevel=2,
        )
        return True
    return False


# k-step law ----------------------------------------------------------------


def transition_matrix(p: float, q: float) -> np.ndarray:
    return np.array([[1.0 - p, p], [q, 1.0 - q]])


def kstep_edge_probability(p: float, q: float, k: int, start_on: bool) -> float:
    """P(edge on after k steps | start state), from the eigen-decomposition of M.

    With λ = 1 - p - q (possibly negative) the k-step on-probabilities are
    p_hat + (1 - p_hat) λ^k from on and p_hat (1 - λ^k) from off.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if not (0 < p < 1 and 0 < q < 1):
        raise ValueError("p and q must lie strictly between 0 and 1")
    p_hat = p / (p + q)
    r1 = ipow(1.0 - p - q, k)
    if start_on:
        return p_hat + (1.0 - p_hat) * r1
    return p_hat * (1.0 - r1)


# dense chains ----------------------------------------------------------------


def pair_keys_to_edges(keys: np.ndarray, n: int) -> np.ndarray:
    return np.stack([keys // n, keys % n], axis=1)


def _random_pair_keys(n: int, size: int, gen: np.random.Generator) -> np.ndarray:
    # ordered draws with u != v, then sorted; uniform on unordered pairs
    out = np.empty(0, dtype=np.int64)
    while out.size < size:
        m = int((size - out.size) * n / max(n - 1, 1)) + 8
        u = gen.integers(0, n, m)
        v = gen.integers(0, n, m)
        ok = u != v
        u, v = u[ok], v[ok]
        out = np.concatenate([out, np.minimum(u, v) * n + np.maximum(u, v)])
    return out[:size]


def _all_pair_keys(n: int) -> np.ndarray:
    u, v = np.triu_indices(n, 1)
    return u.astype(np.int64) * n + v


def _sample_absent(alive: np.ndarray, count: int, n: int, gen: np.random.Generator) -> np.ndarray:
    """``count`` distinct uniformly random pairs not in ``alive`` (sorted keys)."""
    total = n * (n - 1) // 2
    absent = total - alive.size
    if count > absent:
        raise ValueError("more births than absent pairs")
    if count == 0:
        return np.zeros(0, dtype=np.int64)
    if alive.size > total // 2 or count > absent // 2:
        pool = np.setdiff1d(_all_pair_keys(n), alive, assume_unique=True)
        return np.sort(gen.choice(pool, size=count, replace=False))
    chosen = np.zeros(0, dtype=np.int64)
    while chosen.size < count:
        need = count - chosen.size
        cand = _random_pair_keys(n, int(need * 1.1) + 16, gen)
        cand = cand[~np.isin(cand, alive, assume_unique=False)]
        cand = cand[~np.isin(cand, chosen)]
        _, first = np.unique(cand, return_index=True)
        cand = cand[np.sort(first)]
        chosen = np.concatenate([chosen, cand[:need]])
    return np.sort(chosen)


@dataclass
class EdgeChainState:
    params: EdgeParams
    alive: np.ndarray
    t: int = 0

    @property
    def density(self) -> float:
        return self.alive.size / self.params.pairs if self.params.pairs else 0.0

    def snapshot(self) -> Snapshot:
        return Snapshot.from_keys(self.params.n, self.alive)


@dataclass(frozen=True)
class EdgeEvent:
    t: int
    u: int
    v: int
    born: bool


def sample_stationary_edges(params: EdgeParams, rng: np.random.Generator | RngStream | int) -> EdgeChainState:
    """G(n, p_hat): binomial edge count, then that many distinct uniform pairs."""
    gen = _as_generator(rng)
    count = int(gen.binomial(params.pairs, params.p_hat)) if params.pairs else 0
    alive = _sample_absent(np.zeros(0, dtype=np.int64), count, params.n, gen)
    return EdgeChainState(params, alive, 0)


def step_edges(
    state: EdgeChainState,
    rng: np.random.Generator | RngStream | int,
    trace: list[EdgeEvent] | None = None,
) -> EdgeChainState:
    """One synchronous step of all pair chains."""
    gen = _as_generator(rng)
    p = state.params
    n = p.n
    alive = state.alive
    dies = gen.random(alive.size) < p.q
    survivors = alive[~dies]
    births = int(gen.binomial(p.pairs - alive.size, p.p)) if p.pairs > alive.size else 0
    born = _sample_absent(alive, births, n, gen)
    t1 = state.t + 1
    if trace is not None:
        for key in alive[dies].tolist():
            trace.append(EdgeEvent(t1, key // n, key % n, False))
        for key in born.tolist():
            trace.append(EdgeEvent(t1, key // n, key % n, True))
    new_alive = np.union1d(survivors, born)
    return EdgeChainState(p, new_alive, t1)


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return RngStream(int(rng)).generator()


class EdgeMEG(EvolvingGraph):
    """Dense stationary edge-MEG.

    ``pinned=True`` freezes the chain after the stationary draw (the p, q -> 0
    limit at fixed p_hat), giving a time-constant G(n, p_hat).
    """

    def __init__(
        self,
        params: EdgeParams,
        seed: int,
        trace: list[EdgeEvent] | None = None,
        pinned: bool = False,
    ):
        self.params = params
        self.pinned = pinned
        self.static = pinned
        self.n = params.n
        self.seed = seed
        self.trace = trace
        self._gen = RngStream(seed).generator()
        self.state = sample_stationary_edges(params, self._gen)
        self._snap: Snapshot | None = None

    @property
    def t(self) -> int:
        return self.state.t

    def step(self) -> None:
        if self.pinned:
            self.state = EdgeChainState(self.params, self.state.alive, self.state.t + 1)
            return
        self.state = step_edges(self.state, self._gen, self.trace)
        self._snap = None

    def snapshot(self) -> Snapshot:
        if self._snap is None:
            self._snap = self.state.snapshot()
        return self._snap


# lazy chains -----------------------------------------------------------------


@dataclass
class LazyEdgeState:
    """Memoised last-known state per queried edge.

    Queries must move forward in time per edge.  An edge's coin at time t
    is the counter-based uniform ``hash_uniform(seed, key, t)``, so answers
    do not depend on the order edges are asked about.
    """

    params: EdgeParams
    seed: int
    ledger: dict[int, tuple[bool, int]] = field(default_factory=dict)

    def query(self, u: int, v: int, t: int) -> bool:
        n = self.params.n
        if u == v or not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"({u}, {v}) is not a pair of distinct nodes")
        if t < 0:
            raise ValueError("time must be non-negative")
        key = min(u, v) * n + max(u, v)
        entry = self.ledger.get(key)
        if entry is None:
            prob = self.params.p_hat
        else:
            on, last = entry
            if t < last:
                raise ValueError(f"edge ({u}, {v}) already observed at t={last}; cannot query t={t}")
            prob = kstep_edge_probability(self.params.p, self.params.q, t - last, on)
        on = hash_uniform(self.seed, key, t) < prob
        self.ledger[key] = (on, t)
        return on


def lazy_edge_query(state: LazyEdgeState, edge: tuple[int, int], t: int) -> bool:
    return state.query(edge[0], edge[1], t)


class LazyEdgeMEG(EvolvingGraph):
    """Edge-MEG that samples only the informed-uninformed pairs flooding needs.

    Distributionally identical to :class:`EdgeMEG` for flooding.  Snapshots
    and degrees are not available because the graph is never built.
    """

    supports_snapshot = False

    def __init__(self, params: EdgeParams, seed: int):
        self.params = params
        self.n = params.n
        self.seed = seed
        self.t = 0
        self.ledger = _kernels.LazyFloodLedger(params.n, params.p, params.q, RngStream(seed).seed)

    def step(self) -> None:
        self.t += 1

    def expand(self, informed: np.ndarray) -> np.ndarray:
        return self.ledger.step(informed, self.t)

    def snapshot(self) -> Snapshot:
        raise NotImplementedError("lazy edge-MEG does not materialise snapshots")

    def max_degree(self) -> int:
        raise NotImplementedError("lazy edge-MEG does not track degrees")


# edge trace dump: "t u v b" lines, b = 1 birth, 0 death ------------------------


def write_edge_trace(fh: IO[str], events: Iterable[EdgeEvent]) -> None:
    for e in events:
        fh.write(f"{e.t} {e.u} {e.v} {int(e.born)}\n")


def read_edge_trace(lines: Iterable[str]) -> list[EdgeEvent]:
    out = []
    for raw in lines:
        raw = raw.strip()
        if not raw or raw.startswith("#"):
            continue
        t, u, v, b = (int(x) for x in raw.split())
        if b not in (0, 1):
            raise ValueError(f"bad event flag in {raw!r}")
        out.append(EdgeEvent(t, u, v, bool(b)))
    return out


def replay_edge_trace(initial: EdgeChainState, events: Iterable[EdgeEvent]) -> list[EdgeChainState]:
    """Rebuild the state sequence from an initial state and its event trace."""
    n = initial.params.n
    alive = set(initial.alive.tolist())
    states = [initial]
    by_t: dict[int, list[EdgeEvent]] = {}
    for e in events:
        by_t.setdefault(e.t, []).append(e)
    t = initial.t
    for t_next in sorted(by_t):
        while t < t_next - 1:
            t += 1
            states.append(EdgeChainState(initial.params, np.array(sorted(alive), dtype=np.int64), t))
        for e in by_t[t_next]:
            key = min(e.u, e.v) * n + max(e.u, e.v)
            if e.born:
                alive.add(key)
            else:
                alive.discard(key)
        t = t_next
        states.append(EdgeChainState(initial.params, np.array(sorted(alive), dtype=np.int64), t))
    return states
