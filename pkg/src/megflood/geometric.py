"""Geometric Markovian evolving graphs.

n nodes random-walk on the lattice ``{(i*eps, j*eps) : 0 <= i, j <= K}``
covering a square of side ``sqrt(n / delta)``.  At every step a node jumps
to a uniformly random lattice point within Euclidean distance r of its
current position (itself included, clipped at the square's border, no
wrap-around).  Two nodes are adjacent when their distance is at most R.

All geometry is done on integer lattice indices.  Squared distances are
compared against ``floor(radius**2 / eps**2)`` so a pair at distance
exactly R is always an edge, with no floating point noise at the boundary.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import IO, Iterable

import numpy as np

from . import _kernels
from .core import EvolvingGraph, RngStream, Snapshot

# slack when flooring radius**2 / eps**2; treats decimal inputs like 0.1 as exact
_ROUND_SLACK = 1e-9


def _units2(radius: float, eps: float) -> int:
    x = (radius / eps) ** 2
    return int(math.floor(x + _ROUND_SLACK * max(1.0, x)))


@dataclass(frozen=True)
class GeometricParams:
    n: int
    r: float
    R: float
    eps: float = 1.0
    delta: float = 1.0
    #: constant c in the density warning threshold R >= c * sqrt(log n / delta)
    c: float = 2.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not 0 < self.eps <= 1:
            raise ValueError("eps must satisfy 0 < eps <= 1")
        if not self.eps < self.R:
            raise ValueError("eps must be smaller than R")
        if self.r < 0:
            raise ValueError("r must be non-negative")
        if self.R > self.side * (1 + 1e-12):
            raise ValueError(f"R={self.R} exceeds the square side {self.side:.6g}")

    @property
    def side(self) -> float:
        return math.sqrt(self.n / self.delta)

    @property
    def K(self) -> int:
        """Largest lattice index along each axis."""
        return int(math.floor(self.side / self.eps + _ROUND_SLACK * max(1.0, self.side / self.eps)))

    @property
    def lattice_size(self) -> int:
        return (self.K + 1) ** 2

    @property
    def r2u(self) -> int:
        """Squared move radius in lattice units (floored)."""
        return _units2(self.r, self.eps)

    @property
    def R2u(self) -> int:
        """Squared transmission radius in lattice units (floored)."""
        return _units2(self.R, self.eps)

    @property
    def bucket(self) -> int:
        """Snapshot bucket side in lattice units; adjacent buckets cover radius R."""
        return max(1, math.isqrt(self.R2u))

    @property
    def density_threshold(self) -> float:
        return self.c * math.sqrt(math.log(self.n) / self.delta) if self.n > 1 else 0.0

    def with_(self, **changes) -> "GeometricParams":
        return replace(self, **changes)


LatticePoint = tuple[int, int]


def _disk_halfwidths(r2u: int) -> np.ndarray:
    """halfwidth[a + di] = max dj with di**2 + dj**2 <= r2u, for |di| <= a."""
    a = math.isqrt(r2u)
    return np.array([math.isqrt(r2u - di * di) for di in range(-a, a + 1)], dtype=np.int64)


def move_neighborhood(x: LatticePoint, params: GeometricParams) -> list[LatticePoint]:
    """All lattice points within distance r of ``x`` (x included), row-major."""
    i, j = x
    K = params.K
    if not (0 <= i <= K and 0 <= j <= K):
        raise ValueError(f"{x} is not a lattice point")
    r2u = params.r2u
    a = math.isqrt(r2u)
    out = []
    for di in range(max(-a, -i), min(a, K - i) + 1):
        b = math.isqrt(r2u - di * di)
        for dj in range(max(-b, -j), min(b, K - j) + 1):
            out.append((i + di, j + dj))
    return out


@lru_cache(maxsize=65536)
def _weight_by_clip(r2u: int, up: int, down: int, left: int, right: int) -> int:
    # up/down/left/right: room to the border, already capped at the disk radius
    total = 0
    for di in range(-up, down + 1):
        b = math.isqrt(r2u - di * di)
        total += min(b, right) + min(b, left) + 1
    return total


def stationary_weight(x: LatticePoint, params: GeometricParams) -> int:
    """|Γ(x)|; the stationary law of one walker is proportional to it."""
    i, j = x
    K = params.K
    if not (0 <= i <= K and 0 <= j <= K):
        raise ValueError(f"{x} is not a lattice point")
    r2u = params.r2u
    a = math.isqrt(r2u)
    return _weight_by_clip(r2u, min(i, a), min(K - i, a), min(j, a), min(K - j, a))


def stationary_weights(params: GeometricParams) -> np.ndarray:
    """(K+1, K+1) table of |Γ(x)| (for small lattices and audits)."""
    K = params.K
    a = math.isqrt(params.r2u)
    idx = np.arange(K + 1)
    lo = np.minimum(idx, a)
    hi = np.minimum(K - idx, a)
    out = np.empty((K + 1, K + 1), dtype=np.int64)
    for i in range(K + 1):
        for j in range(K + 1):
            out[i, j] = _weight_by_clip(params.r2u, int(lo[i]), int(hi[i]), int(lo[j]), int(hi[j]))
    return out


def _propose_moves(pi, pj, K, r2u, gen):
    """One round of box-rejection proposals; returns (targets_i, targets_j, accepted)."""
    a = math.isqrt(r2u)
    lo_i = np.maximum(-a, -pi)
    hi_i = np.minimum(a, K - pi)
    lo_j = np.maximum(-a, -pj)
    hi_j = np.minimum(a, K - pj)
    di = lo_i + np.floor(gen.random(pi.size) * (hi_i - lo_i + 1)).astype(np.int64)
    dj = lo_j + np.floor(gen.random(pj.size) * (hi_j - lo_j + 1)).astype(np.int64)
    ok = di * di + dj * dj <= r2u
    return pi + di, pj + dj, ok


def _uniform_move(pi, pj, K, r2u, gen):
    """Each walker jumps to a uniform point of its clipped move disk.

    Offsets are drawn uniformly from the disk's bounding box intersected with
    the square and rejected outside the disk, which is exactly uniform on
    the clipped disk.
    """
    ni, nj = pi.copy(), pj.copy()
    todo = np.arange(pi.size)
    while todo.size:
        ti, tj, ok = _propose_moves(pi[todo], pj[todo], K, r2u, gen)
        done = todo[ok]
        ni[done], nj[done] = ti[ok], tj[ok]
        todo = todo[~ok]
    return ni, nj


def _stationary_draw(n, K, r2u, gen):
    """n independent positions with P(x) proportional to |Γ(x)|.

    Rejection: draw x uniform on the lattice and an offset uniform in the
    box [-a, a]^2; accept when x + offset is a lattice point within r.  The
    acceptance probability is |Γ(x)| / (2a+1)**2, so accepted x follow the
    stationary law exactly.
    """
    a = math.isqrt(r2u)
    if a == 0 or 2 * K * K <= r2u:
        # static walkers, or Γ(x) is the whole lattice: all weights equal
        return gen.integers(0, K + 1, n), gen.integers(0, K + 1, n)
    pi = np.empty(n, dtype=np.int64)
    pj = np.empty(n, dtype=np.int64)
    todo = np.arange(n)
    while todo.size:
        m = todo.size
        xi = gen.integers(0, K + 1, m)
        xj = gen.integers(0, K + 1, m)
        di = gen.integers(-a, a + 1, m)
        dj = gen.integers(-a, a + 1, m)
        yi, yj = xi + di, xj + dj
        ok = (di * di + dj * dj <= r2u) & (yi >= 0) & (yi <= K) & (yj >= 0) & (yj <= K)
        pi[todo[ok]] = xi[ok]
        pj[todo[ok]] = xj[ok]
        todo = todo[~ok]
    return pi, pj


@dataclass
class GeometricState:
    params: GeometricParams
    pi: np.ndarray
    pj: np.ndarray
    t: int = 0

    @property
    def positions(self) -> np.ndarray:
        """(n, 2) array of lattice indices."""
        return np.stack([self.pi, self.pj], axis=1)

    def coordinates(self) -> np.ndarray:
        return self.positions * self.params.eps

    def copy(self) -> "GeometricState":
        return GeometricState(self.params, self.pi.copy(), self.pj.copy(), self.t)


def sample_stationary_positions(params: GeometricParams, rng: np.random.Generator | RngStream | int) -> GeometricState:
    gen = _as_generator(rng)
    pi, pj = _stationary_draw(params.n, params.K, params.r2u, gen)
    return GeometricState(params, pi.astype(np.int64), pj.astype(np.int64), 0)


def step_positions(state: GeometricState, rng: np.random.Generator | RngStream | int) -> GeometricState:
    gen = _as_generator(rng)
    p = state.params
    if math.isqrt(p.r2u) == 0:
        return GeometricState(p, state.pi.copy(), state.pj.copy(), state.t + 1)
    pi, pj = _uniform_move(state.pi, state.pj, p.K, p.r2u, gen)
    return GeometricState(p, pi, pj, state.t + 1)


def build_geometric_snapshot(state: GeometricState) -> Snapshot:
    p = state.params
    keys = _kernels.geo_pairs(state.pi, state.pj, p.R2u, p.bucket)
    return Snapshot.from_keys(p.n, keys)


def brute_force_snapshot(state: GeometricState) -> Snapshot:
    """All-pairs O(n^2) radius graph; an independent check of the bucket grid."""
    p = state.params
    di = state.pi[:, None] - state.pi[None, :]
    dj = state.pj[:, None] - state.pj[None, :]
    u, v = np.nonzero(np.triu(di * di + dj * dj <= p.R2u, 1))
    return Snapshot(p.n, np.stack([u, v], axis=1))


@dataclass
class CellOccupancy:
    """Node counts over the m x m audit partition of the square."""

    m: int
    cell_side: float
    counts: np.ndarray
    expected_scale: float = field(repr=False)

    @property
    def min(self) -> int:
        return int(self.counts.min())

    @property
    def max(self) -> int:
        return int(self.counts.max())

    @property
    def ratio(self) -> float:
        return self.max / self.min if self.min > 0 else math.inf

    @property
    def lam(self) -> float:
        """Smallest λ with scale/λ <= N_ij <= λ*scale, scale = δR² (delta * R**2)."""
        lo = self.expected_scale / self.min if self.min > 0 else math.inf
        return max(self.max / self.expected_scale, lo, 1.0)


def audit_cells(params: GeometricParams) -> int:
    """m = ceil(sqrt(5) * side / R); equals ceil(sqrt(5n)/R) at density 1."""
    return max(1, math.ceil(math.sqrt(5.0) * params.side / params.R - 1e-12))


def cell_occupancy(state: GeometricState, m: int | None = None) -> CellOccupancy:
    p = state.params
    if p.n > 1 and p.R < p.density_threshold:
        warnings.warn(
            f"R={p.R:.4g} is below the density threshold c*sqrt(log n/delta)={p.density_threshold:.4g}; "
            "cell counts need not concentrate",
            stacklevel=2,
        )
    m = audit_cells(p) if m is None else m
    ell = p.side / m
    ci = np.minimum((state.pi * p.eps / ell).astype(np.int64), m - 1)
    cj = np.minimum((state.pj * p.eps / ell).astype(np.int64), m - 1)
    counts = np.bincount(ci * m + cj, minlength=m * m).reshape(m, m)
    return CellOccupancy(m, ell, counts, p.delta * p.R ** 2)


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return RngStream(int(rng)).generator()


class GeometricMEG(EvolvingGraph):
    """Stationary geometric-MEG: positions start from the product stationary law."""

    def __init__(self, params: GeometricParams, seed: int):
        self.params = params
        self.n = params.n
        self.seed = seed
        self._gen = RngStream(seed).generator()
        self.state = sample_stationary_positions(params, self._gen)
        self.initial = self.state.copy()
        self.static = math.isqrt(params.r2u) == 0
        self._snap: Snapshot | None = None

    @property
    def t(self) -> int:
        return self.state.t

    def step(self) -> None:
        self.state = step_positions(self.state, self._gen)
        self._snap = None

    def snapshot(self) -> Snapshot:
        if self._snap is None:
            self._snap = build_geometric_snapshot(self.state)
        return self._snap

    def expand(self, informed: np.ndarray) -> np.ndarray:
        p = self.params
        return _kernels.geo_expand(self.state.pi, self.state.pj, informed, p.R2u, p.bucket)

    def max_degree(self) -> int:
        p = self.params
        deg = _kernels.geo_degrees(self.state.pi, self.state.pj, p.R2u, p.bucket)
        return int(deg.max()) if deg.size else 0


# positions dump: one "t u i j" line per node ---------------------------------


def write_positions(fh: IO[str], state: GeometricState) -> None:
    for u, (i, j) in enumerate(zip(state.pi.tolist(), state.pj.tolist())):
        fh.write(f"{state.t} {u} {i} {j}\n")


def read_positions(lines: Iterable[str], params: GeometricParams) -> list[GeometricState]:
    """Parse a positions dump back into one state per time step."""
    by_t: dict[int, dict[int, tuple[int, int]]] = {}
    for raw in lines:
        raw = raw.strip()
        if not raw or raw.startswith("#"):
            continue
        t, u, i, j = (int(x) for x in raw.split())
        by_t.setdefault(t, {})[u] = (i, j)
    states = []
    for t in sorted(by_t):
        rows = by_t[t]
        if sorted(rows) != list(range(params.n)):
            raise ValueError(f"time {t}: expected positions for nodes 0..{params.n - 1}")
        pi = np.array([rows[u][0] for u in range(params.n)], dtype=np.int64)
        pj = np.array([rows[u][1] for u in range(params.n)], dtype=np.int64)
        states.append(GeometricState(params, pi, pj, t))
    return states
