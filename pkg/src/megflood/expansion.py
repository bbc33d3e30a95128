"""(h, k)-expansion audits, expansion schedules and the flooding-time bound.

A graph is an (h, k)-expander when every node set I with |I| <= h has
|N(I)| >= k |I|.  The exact checker enumerates subsets (exponential, capped
by a budget); the sampled estimator proposes adversarial-ish sets and only
ever yields an upper bound on the true minimum expansion.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from math import comb
from typing import Callable

import numpy as np

from .core import NodeSet, Snapshot

DEFAULT_BUDGET = 10**7
DEFAULT_ALPHA = 0.05
DEFAULT_BETA = 0.05
DEFAULT_C = 20.0


class BudgetExceeded(RuntimeError):
    """Exhaustive enumeration would exceed the configured subset budget."""


# exact -------------------------------------------------------------------------


def enumeration_cost(n: int, h: float) -> int:
    return sum(comb(n, j) for j in range(1, min(int(math.floor(h)), n) + 1))


def _walk_subsets(G: Snapshot, hmax: int, visit: Callable[[int, int, int], bool]) -> None:
    """Visit non-empty subsets of size <= hmax in lexicographic order.

    ``visit(size, set_bits, neighbour_union_bits)`` returns True to stop.
    """
    adj = G.adjacency_bits
    n = G.n

    def rec(start: int, size: int, ibits: int, ubits: int) -> bool:
        for v in range(start, n):
            nb = ibits | (1 << v)
            nu = ubits | adj[v]
            if visit(size + 1, nb, nu):
                return True
            if size + 1 < hmax and rec(v + 1, size + 1, nb, nu):
                return True
        return False

    rec(0, 0, 0, 0)


def _bits_to_nodeset(n: int, bits: int) -> NodeSet:
    return NodeSet.of(n, [v for v in range(n) if bits >> v & 1])


@dataclass
class ExpansionVerdict:
    h: float
    k: float
    passed: bool
    witness: NodeSet | None = None
    checked: int = 0
    mode: str = "exact"
    min_ratio: float = math.inf

    def to_json(self) -> dict:
        out = {
            "mode": self.mode,
            "h": self.h,
            "k": self.k,
            "verdict": "pass" if self.passed else "fail",
            "samples": self.checked,
            "minRatio": self.min_ratio if math.isfinite(self.min_ratio) else None,
        }
        if self.witness is not None:
            out["witness"] = self.witness.indices().tolist()
        return out


def is_expander_exact(G: Snapshot, h: float, k: float, budget: int = DEFAULT_BUDGET) -> ExpansionVerdict:
    """Exhaustive check of every set of size <= h; returns a witness on failure."""
    hmax = min(int(math.floor(h)), G.n)
    cost = enumeration_cost(G.n, h)
    if cost > budget:
        raise BudgetExceeded(f"{cost} subsets exceed the budget of {budget}; use sampled mode")
    found: list[int] = []
    checked = 0
    low = math.inf

    # full walk so minRatio is exact; the witness is the first violating set
    def visit(size: int, ibits: int, ubits: int) -> bool:
        nonlocal checked, low
        checked += 1
        b = (ubits & ~ibits).bit_count()
        low = min(low, b / size)
        if not found and b < k * size:
            found.append(ibits)
        return False

    if hmax >= 1:
        _walk_subsets(G, hmax, visit)
    if found:
        return ExpansionVerdict(h, k, False, _bits_to_nodeset(G.n, found[0]), checked, min_ratio=low)
    return ExpansionVerdict(h, k, True, None, checked, min_ratio=low)


def exact_min_expansion(G: Snapshot, h: float, budget: int = DEFAULT_BUDGET) -> tuple[float, NodeSet | None]:
    """min |N(I)|/|I| over 1 <= |I| <= h, with a minimising set."""
    hmax = min(int(math.floor(h)), G.n)
    if enumeration_cost(G.n, h) > budget:
        raise BudgetExceeded("subset budget exceeded; use sampled mode")
    best = [math.inf, 0]

    def visit(size: int, ibits: int, ubits: int) -> bool:
        ratio = (ubits & ~ibits).bit_count() / size
        if ratio < best[0]:
            best[0], best[1] = ratio, ibits
        return False

    if hmax >= 1:
        _walk_subsets(G, hmax, visit)
    witness = _bits_to_nodeset(G.n, best[1]) if best[1] else None
    return best[0], witness


def verify_witness(G: Snapshot, witness: NodeSet, h: float, k: float) -> bool:
    """True when ``witness`` really violates (h, k)-expansion on ``G``."""
    from .core import neighbors_of_set

    return 1 <= len(witness) <= h and len(neighbors_of_set(G, witness)) < k * len(witness)


# sampled -------------------------------------------------------------------------


@dataclass
class SampledSet:
    size: int
    boundary: int  # |N(I)|
    kind: str

    @property
    def ratio(self) -> float:
        return self.boundary / self.size


@dataclass
class ExpansionEstimate:
    min_ratio: float
    witness: NodeSet | None
    samples: int
    sets: list[SampledSet] = field(repr=False, default_factory=list)

    def to_json(self, h: float) -> dict:
        return {"mode": "sampled", "h": h, "samples": self.samples, "minRatio": self.min_ratio}


def _stratified_sizes(hmax: int, samples: int, gen: np.random.Generator) -> np.ndarray:
    # half linear, half log-uniform strata over [1, hmax]
    m_lin = samples // 2
    m_log = samples - m_lin
    lin = 1 + np.floor((np.arange(m_lin) + gen.random(m_lin)) * hmax / max(m_lin, 1))
    log = np.floor(np.exp((np.arange(m_log) + gen.random(m_log)) * math.log(hmax + 1) / max(m_log, 1)))
    sizes = np.clip(np.concatenate([lin, log]), 1, hmax).astype(np.int64)
    gen.shuffle(sizes)
    return sizes


def _bfs_ball(G: Snapshot, size: int, gen: np.random.Generator) -> np.ndarray:
    n = G.n
    chosen = np.zeros(n, dtype=bool)
    out: list[np.ndarray] = []
    have = 0
    while have < size:
        roots = np.flatnonzero(~chosen)
        level = np.array([roots[gen.integers(roots.size)]])
        while level.size and have < size:
            if have + level.size > size:
                level = gen.choice(level, size - have, replace=False)
            chosen[level] = True
            out.append(level)
            have += level.size
            nxt = G.neighbors_of_indices(np.flatnonzero(chosen))
            level = nxt
    return np.concatenate(out)


def _disk_set(positions: np.ndarray, size: int, gen: np.random.Generator) -> np.ndarray:
    center = positions[gen.integers(positions.shape[0])]
    d2 = ((positions - center) ** 2).sum(axis=1)
    if size >= positions.shape[0]:
        return np.arange(positions.shape[0])
    return np.argpartition(d2, size - 1)[:size]


def sample_sets(
    G: Snapshot,
    h: float,
    samples: int,
    gen: np.random.Generator,
    positions: np.ndarray | None = None,
) -> list[tuple[np.ndarray, str]]:
    """Proposal node sets with sizes stratified over [1, h].

    Geometric snapshots (``positions`` given) get mostly spatially clustered
    sets, the nearest nodes to a random node; other graphs get BFS balls.
    A third of the proposals are uniformly random sets either way.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    hmax = max(1, min(int(math.floor(h)), G.n))
    out = []
    for i, s in enumerate(_stratified_sizes(hmax, samples, gen)):
        s = int(s)
        if i % 3 == 2:
            out.append((gen.choice(G.n, s, replace=False), "uniform"))
        elif positions is not None:
            out.append((_disk_set(positions, s, gen), "disk"))
        else:
            out.append((_bfs_ball(G, s, gen), "ball"))
    return out


def expansion_estimate(
    G: Snapshot,
    h: float,
    samples: int,
    rng: np.random.Generator | int,
    positions: np.ndarray | None = None,
) -> ExpansionEstimate:
    """Min |N(I)|/|I| over sampled sets; an upper bound on the true minimum."""
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    best = math.inf
    witness = None
    sets = []
    for nodes, kind in sample_sets(G, h, samples, gen, positions):
        b = int(G.neighbors_of_indices(nodes).size)
        rec = SampledSet(int(nodes.size), b, kind)
        sets.append(rec)
        if rec.ratio < best:
            best, witness = rec.ratio, nodes
    return ExpansionEstimate(best, NodeSet.of(G.n, witness.tolist()), samples, sets)


# schedules ---------------------------------------------------------------------


@dataclass
class ExpansionSchedule:
    """h = [h_0, h_1, ..., h_s] and k = [k_1, ..., k_s].

    Requires 1 = h_0 <= h_1 < ... < h_s and k_1 >= ... >= k_s > 0.
    """

    h: np.ndarray
    k: np.ndarray
    regime: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float)
        self.k = np.asarray(self.k, dtype=float)
        if self.h.size != self.k.size + 1 or self.k.size == 0:
            raise ValueError("need len(h) == len(k) + 1 >= 2")
        if self.h[0] != 1 or self.h[1] < self.h[0] or np.any(np.diff(self.h[1:]) <= 0):
            raise ValueError("h must satisfy 1 = h_0 <= h_1 < ... < h_s")
        if np.any(np.diff(self.k) > 0):
            raise ValueError("k must be non-increasing")

    def k_required(self, size: float) -> float:
        """Largest k the schedule claims for sets of this size (inf beyond h_s)."""
        i = int(np.searchsorted(self.h[1:], size, side="left"))
        return float(self.k[i]) if i < self.k.size else -math.inf


def _integer_h(n: int) -> np.ndarray:
    top = n / 2
    hs = np.arange(1, int(math.floor(top)) + 1, dtype=float)
    if hs.size == 0 or hs[-1] != top:
        hs = np.append(hs, top)
    return np.concatenate([[1.0], hs])


def geometric_k(h: float, R: float, alpha: float, beta: float) -> tuple[float, float]:
    """(alpha R^2 / h, beta R / sqrt(h)): first- and second-regime expansion at h."""
    return alpha * R * R / h, beta * R / math.sqrt(h)


def geometric_schedule(n: int, R: float, alpha: float = DEFAULT_ALPHA, beta: float = DEFAULT_BETA) -> ExpansionSchedule:
    """Two-regime schedule over integer h = 1 .. n/2.

    k = alpha R^2 / h up to h = alpha R^2, then beta R / sqrt(h).  If the
    second regime would jump above the first at the boundary, k is capped by
    a running minimum, which only weakens the claim.
    """
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    T = alpha * R * R
    if T > n / 2:
        raise ValueError(f"alpha R^2 = {T:.4g} exceeds n/2; the regime split is degenerate")
    h = _integer_h(n)
    hs = h[1:]
    first = hs <= T
    k = np.where(first, T / hs, beta * R / np.sqrt(hs))
    k = np.minimum.accumulate(k)
    return ExpansionSchedule(h, k, np.where(first, 1, 2), f"geometric(n={n}, R={R:.6g}, alpha={alpha}, beta={beta})")


def edge_k(h: float, n: int, p_hat: float, c: float) -> tuple[float, float]:
    """(n p_hat / c, n / (c h)): first- and second-regime expansion at h."""
    return n * p_hat / c, n / (c * h)


def edge_schedule(n: int, p_hat: float, c: float = DEFAULT_C) -> ExpansionSchedule:
    """k_i = n p_hat / c for i <= floor(1/p_hat), n / (c i) beyond."""
    if c <= 0 or not 0 < p_hat <= 1:
        raise ValueError("need c > 0 and 0 < p_hat <= 1")
    if n > 1 and p_hat < c * math.log(n) / n:
        warnings.warn(
            f"p_hat={p_hat:.4g} below c log n / n = {c * math.log(n) / n:.4g}; the schedule is not guaranteed",
            stacklevel=2,
        )
    h = _integer_h(n)
    hs = h[1:]
    first = hs <= math.floor(1.0 / p_hat)
    k = np.where(first, n * p_hat / c, n / (c * hs))
    k = np.minimum.accumulate(k)
    return ExpansionSchedule(h, k, np.where(first, 1, 2), f"edge(n={n}, p_hat={p_hat:.6g}, c={c})")


def lemma_bound(schedule: ExpansionSchedule) -> float:
    """sum_i log(h_i / h_{i-1}) / log(1 + k_i), without hidden constants.

    This covers growth to n/2 informed nodes; the symmetric second half is
    :func:`flooding_bound`.
    """
    k = schedule.k
    if np.any(k <= 0):
        raise ValueError("every k_i must be positive")
    h = schedule.h
    return float(np.sum(np.log(h[1:] / h[:-1]) / np.log1p(k)))


def flooding_bound(schedule: ExpansionSchedule) -> float:
    return 2.0 * lemma_bound(schedule)


# auditing against schedules -------------------------------------------------------


@dataclass
class RegimeAudit:
    regime: int
    sets: int
    min_ratio: float
    min_slack: float  # min over sets of ratio / k_required
    passed: bool

    def to_json(self) -> dict:
        return {
            "regime": self.regime,
            "sets": self.sets,
            "minRatio": self.min_ratio,
            "minSlack": self.min_slack,
            "verdict": "pass" if self.passed else "fail",
        }


def audit_schedule(
    G: Snapshot,
    schedule: ExpansionSchedule,
    samples: int,
    rng: np.random.Generator | int,
    positions: np.ndarray | None = None,
) -> list[RegimeAudit]:
    """Sampled audit of every (h_i, k_i) claim, summarised per regime."""
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    est = expansion_estimate(G, schedule.h[-1], samples, gen, positions)
    hs = schedule.h[1:]
    regimes = schedule.regime if schedule.regime is not None else np.ones(hs.size, dtype=int)
    per: dict[int, list[tuple[float, float]]] = {}
    for s in est.sets:
        i = int(np.searchsorted(hs, s.size, side="left"))
        if i >= hs.size:
            continue
        per.setdefault(int(regimes[i]), []).append((s.ratio, s.ratio / schedule.k[i]))
    out = []
    for reg in sorted(per):
        vals = per[reg]
        slack = min(v[1] for v in vals)
        out.append(RegimeAudit(reg, len(vals), min(v[0] for v in vals), slack, slack >= 1.0))
    return out


# fitting constants ------------------------------------------------------------------


def sampled_boundaries(
    G: Snapshot, h: float, samples: int, rng: np.random.Generator | int, positions: np.ndarray | None = None
) -> list[SampledSet]:
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return expansion_estimate(G, h, samples, gen, positions).sets


def fit_edge_c(sets: list[SampledSet], n: int, p_hat: float) -> float:
    """Smallest c for which every sampled set meets the edge schedule.

    A set of size s needs |N(I)|/s >= n p_hat / c when s <= floor(1/p_hat)
    and |N(I)| >= n / c otherwise; both are thresholds on c.
    """
    cut = math.floor(1.0 / p_hat)
    need = 0.0
    for s in sets:
        if s.boundary == 0:
            return math.inf
        c = n * p_hat / s.ratio if s.size <= cut else n / s.boundary
        need = max(need, c)
    return need


def fit_geometric_constants(sets: list[SampledSet], R: float, n: int, iters: int = 60) -> tuple[float, float]:
    """Largest (alpha, beta) passing the sampled sets.

    alpha is found by bisection: sets of size <= alpha R^2 must have
    |N(I)| >= alpha R^2, a condition monotone in alpha.  beta is then the
    smallest |N(I)| / (R sqrt|I|) over the remaining, larger sets.
    """

    def ok(alpha: float) -> bool:
        T = alpha * R * R
        return all(s.boundary >= T for s in sets if s.size <= T)

    lo, hi = 0.0, (n / 2) / (R * R)
    if ok(hi):
        lo = hi
    else:
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
    alpha = lo
    T = alpha * R * R
    rest = [s.boundary / (R * math.sqrt(s.size)) for s in sets if s.size > T]
    beta = min(rest) if rest else math.inf
    return alpha, beta


def audit_schedule_exact(G: Snapshot, schedule: ExpansionSchedule, budget: int = DEFAULT_BUDGET) -> ExpansionVerdict:
    """Exhaustive check of every (h_i, k_i) claim; the first violating set is the witness."""
    hmax = min(int(math.floor(schedule.h[-1])), G.n)
    if enumeration_cost(G.n, hmax) > budget:
        raise BudgetExceeded("subset budget exceeded; use sampled mode")
    need = [schedule.k_required(s) for s in range(hmax + 1)]
    found: list[int] = []
    checked = 0
    low = math.inf

    def visit(size: int, ibits: int, ubits: int) -> bool:
        nonlocal checked, low
        checked += 1
        b = (ubits & ~ibits).bit_count()
        low = min(low, b / size)
        if not found and b < need[size] * size:
            found.append(ibits)
        return False

    if hmax >= 1:
        _walk_subsets(G, hmax, visit)
    witness = _bits_to_nodeset(G.n, found[0]) if found else None
    return ExpansionVerdict(float(schedule.h[-1]), float(schedule.k[-1]), not found, witness, checked, min_ratio=low)


def fit_bound_constant(values: np.ndarray, predictors: np.ndarray) -> tuple[float, float]:
    """Single C minimising max |v - C f| / v; returns (C, that maximum).

    With ratios rho = v / f the optimum is the harmonic midpoint of min and
    max rho, where the two extreme relative residuals are equal.
    """
    v = np.asarray(values, dtype=float)
    f = np.asarray(predictors, dtype=float)
    rho = v / f
    C = 2.0 / (1.0 / rho.min() + 1.0 / rho.max())
    return float(C), float(np.max(np.abs(v - C * f) / v))
