"""Flooding on evolving graphs and per-run lower-bound certificates.

Step convention: at every tick the model is advanced first, then
``I_{t+1} = I_t ∪ N(I_t)`` is evaluated on the freshly produced snapshot.
The stationary G_0 therefore exists but carries no exchange; using G_0
instead would shift completion times by at most one step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import EvolvingGraph
from .geometric import GeometricState
from .rng import derive_seed

DEFAULT_MAX_STEPS = 1000


@dataclass
class FloodResult:
    source: int
    n: int
    trajectory: list[int]
    completion_time: int | None
    steps_simulated: int
    max_degrees: list[int] | None = None

    @property
    def completed(self) -> bool:
        return self.completion_time is not None

    @property
    def T(self) -> float:
        return float(self.completion_time) if self.completed else math.inf


def flood_once(
    model: EvolvingGraph,
    source: int,
    max_steps: int = DEFAULT_MAX_STEPS,
    record_degrees: bool = False,
) -> FloodResult:
    """Run flooding from ``source`` until everyone is informed or ``max_steps``.

    Exhausting ``max_steps`` yields a result with ``completion_time=None``
    rather than an exception.  Time-constant models stop early once the
    informed set stops growing.
    """
    n = model.n
    if not 0 <= source < n:
        raise ValueError(f"source {source} outside [0, {n})")
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    informed = np.zeros(n, dtype=bool)
    informed[source] = True
    traj = [1]
    degrees: list[int] | None = [] if record_degrees else None
    if n == 1:
        return FloodResult(source, n, traj, 0, 0, degrees)
    steps = 0
    while steps < max_steps:
        model.step()
        steps += 1
        if degrees is not None:
            degrees.append(model.max_degree())
        informed = model.expand(informed)
        m = int(np.count_nonzero(informed))
        traj.append(m)
        if m == n:
            return FloodResult(source, n, traj, steps, steps, degrees)
        if model.static and m == traj[-2]:
            break
    return FloodResult(source, n, traj, None, steps, degrees)


@dataclass
class FloodingStats:
    """T(s) over (seed, source) runs; incomplete runs count as +inf."""

    runs: list[tuple[int, int, float]] = field(default_factory=list)  # (seed, source, T)

    @property
    def times(self) -> np.ndarray:
        return np.array([r[2] for r in self.runs], dtype=float)

    @property
    def all_completed(self) -> bool:
        return bool(np.all(np.isfinite(self.times)))

    @property
    def max(self) -> float:
        return float(self.times.max())

    @property
    def median(self) -> float:
        return float(np.median(self.times))

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.times, q))

    def per_source(self) -> dict[int, list[float]]:
        out: dict[int, list[float]] = {}
        for _, s, T in self.runs:
            out.setdefault(s, []).append(T)
        return out

    def per_seed_max(self) -> dict[int, float]:
        """Flooding time proper: max over sources of T(s), for each seed."""
        out: dict[int, float] = {}
        for seed, _, T in self.runs:
            out[seed] = max(out.get(seed, -math.inf), T)
        return out


def flooding_time(
    factory: Callable[[int], EvolvingGraph],
    sources: Iterable[int] | str,
    seeds: Sequence[int],
    max_steps: int = DEFAULT_MAX_STEPS,
) -> FloodingStats:
    """Run ``flood_once`` on a fresh model for every (seed, source) pair.

    ``factory(seed)`` must return an independent stationary model; the seed
    passed is derived from both the run seed and the source so every pair
    gets its own chain.  ``sources="all"`` means every node.
    """
    stats = FloodingStats()
    for seed in seeds:
        if isinstance(sources, str):
            if sources != "all":
                raise ValueError(f"unknown source policy {sources!r}")
            n = factory(derive_seed(seed, "probe")).n
            src_list: Iterable[int] = range(n)
        else:
            src_list = sources
        for s in src_list:
            model = factory(derive_seed(seed, s))
            res = flood_once(model, s, max_steps)
            stats.runs.append((seed, s, res.T))
    return stats


def geometric_lower_certificate(state0: GeometricState, source: int, R: float | None = None, r: float | None = None) -> int:
    """ceil(d0 / (R + 2r)) with d0 the largest initial distance from the source.

    Informed nodes spread at most R + r per step while any node closes in by
    at most r, so no completed run can beat this value.
    """
    p = state0.params
    R = p.R if R is None else R
    r = p.r if r is None else r
    di = state0.pi - state0.pi[source]
    dj = state0.pj - state0.pj[source]
    d0 = math.sqrt(int(np.max(di * di + dj * dj))) * p.eps
    if d0 == 0:
        return 0
    return max(0, math.ceil(d0 / (R + 2 * r) - 1e-9))


def degree_lower_certificate(trajectory: Sequence[int], max_degrees: Sequence[int]) -> bool:
    """Check m_{t+1} <= m_t * (1 + Δ_{t+1}) at every recorded step.

    ``max_degrees[t]`` is the maximum degree of the snapshot used to go from
    ``trajectory[t]`` to ``trajectory[t + 1]``.
    """
    if len(max_degrees) < len(trajectory) - 1:
        raise ValueError("need one max degree per flooding step")
    for t in range(len(trajectory) - 1):
        if trajectory[t + 1] > trajectory[t] * (1 + max_degrees[t]):
            return False
    return True


def default_max_steps(upper_bound_estimate: float | None) -> int:
    """20x an analytic bound estimate, never below 1000."""
    if upper_bound_estimate is None or not math.isfinite(upper_bound_estimate):
        return DEFAULT_MAX_STEPS
    return max(DEFAULT_MAX_STEPS, int(math.ceil(20 * upper_bound_estimate)))
