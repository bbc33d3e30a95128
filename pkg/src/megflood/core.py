"""Graph snapshots, node sets and the evolving-graph stepping interface."""

from __future__ import annotations

from abc import ABC, abstractmethod
from functools import cached_property
from typing import Iterable, Iterator

import numpy as np

from .rng import RngStream

__all__ = [
    "NodeSet",
    "Snapshot",
    "EvolvingGraph",
    "StaticGraph",
    "neighbors_of_set",
    "snapshot_max_degree",
    "RngStream",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class NodeSet:
    """Immutable subset of ``range(n)`` stored as a boolean membership mask."""

    __slots__ = ("_mask",)

    def __init__(self, mask: np.ndarray):
        mask = np.array(mask, dtype=bool, copy=True)
        if mask.ndim != 1:
            raise ValueError("NodeSet mask must be one-dimensional")
        self._mask = _readonly(mask)

    @classmethod
    def of(cls, n: int, nodes: Iterable[int] = ()) -> "NodeSet":
        mask = np.zeros(n, dtype=bool)
        idx = np.fromiter((int(u) for u in nodes), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise ValueError(f"node index out of range [0, {n})")
        mask[idx] = True
        return cls(mask)

    @classmethod
    def empty(cls, n: int) -> "NodeSet":
        return cls(np.zeros(n, dtype=bool))

    @classmethod
    def full(cls, n: int) -> "NodeSet":
        return cls(np.ones(n, dtype=bool))

    @property
    def n(self) -> int:
        return self._mask.size

    @property
    def mask(self) -> np.ndarray:
        return self._mask

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self._mask)

    def _check(self, other: "NodeSet") -> None:
        if other.n != self.n:
            raise ValueError("NodeSets over different node counts")

    def __or__(self, other: "NodeSet") -> "NodeSet":
        self._check(other)
        return NodeSet(self._mask | other._mask)

    def __and__(self, other: "NodeSet") -> "NodeSet":
        self._check(other)
        return NodeSet(self._mask & other._mask)

    def __sub__(self, other: "NodeSet") -> "NodeSet":
        self._check(other)
        return NodeSet(self._mask & ~other._mask)

    def complement(self) -> "NodeSet":
        return NodeSet(~self._mask)

    def issubset(self, other: "NodeSet") -> bool:
        self._check(other)
        return not np.any(self._mask & ~other._mask)

    def __len__(self) -> int:
        return int(np.count_nonzero(self._mask))

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices().tolist())

    def __contains__(self, u: object) -> bool:
        return isinstance(u, (int, np.integer)) and 0 <= u < self.n and bool(self._mask[u])

    def __eq__(self, other: object) -> bool:
        return isinstance(other, NodeSet) and other.n == self.n and bool(np.array_equal(self._mask, other._mask))

    def __hash__(self) -> int:
        return hash((self.n, np.packbits(self._mask).tobytes()))

    def __repr__(self) -> str:
        members = self.indices()
        shown = ", ".join(map(str, members[:12].tolist()))
        more = ", ..." if members.size > 12 else ""
        return f"NodeSet(n={self.n}, {{{shown}{more}}})"


class Snapshot:
    """One time step's undirected simple graph on ``range(n)``.

    Edges are stored canonically as a sorted ``(m, 2)`` int64 array with
    ``u < v`` in every row.  Instances are immutable; derived structures
    (CSR adjacency, degrees) are computed once on demand.
    """

    def __init__(self, n: int, edges: np.ndarray | Iterable[tuple[int, int]] = ()):
        n = int(n)
        if n < 0:
            raise ValueError("node count must be non-negative")
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        if e.size == 0:
            e = np.zeros((0, 2), dtype=np.int64)
        if e.ndim != 2 or e.shape[1] != 2:
            raise ValueError("edges must be an (m, 2) array of node pairs")
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ValueError(f"edge endpoint out of range [0, {n})")
        lo = np.minimum(e[:, 0], e[:, 1])
        hi = np.maximum(e[:, 0], e[:, 1])
        if np.any(lo == hi):
            raise ValueError("self-loops are not allowed")
        keys = np.unique(lo * n + hi)
        self.n = n
        self.edges = _readonly(np.stack([keys // max(n, 1), keys % max(n, 1)], axis=1).astype(np.int64))

    @classmethod
    def from_keys(cls, n: int, keys: np.ndarray) -> "Snapshot":
        """Build from pair keys ``u * n + v`` (``u < v``, sorted, unique)."""
        snap = cls.__new__(cls)
        snap.n = int(n)
        keys = np.asarray(keys, dtype=np.int64)
        snap.edges = _readonly(np.stack([keys // max(n, 1), keys % max(n, 1)], axis=1))
        return snap

    # standard small graphs ------------------------------------------------
    @classmethod
    def complete(cls, n: int) -> "Snapshot":
        u, v = np.triu_indices(n, 1)
        return cls(n, np.stack([u, v], axis=1))

    @classmethod
    def path(cls, n: int) -> "Snapshot":
        u = np.arange(n - 1)
        return cls(n, np.stack([u, u + 1], axis=1))

    @classmethod
    def cycle(cls, n: int) -> "Snapshot":
        u = np.arange(n)
        return cls(n, np.stack([u, (u + 1) % n], axis=1))

    @classmethod
    def star(cls, n: int) -> "Snapshot":
        v = np.arange(1, n)
        return cls(n, np.stack([np.zeros_like(v), v], axis=1))

    @classmethod
    def empty(cls, n: int) -> "Snapshot":
        return cls(n)

    # structure -------------------------------------------------------------
    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def keys(self) -> np.ndarray:
        return _readonly(self.edges[:, 0] * self.n + self.edges[:, 1])

    @cached_property
    def _csr(self) -> tuple[np.ndarray, np.ndarray]:
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        order = np.lexsort((dst, src))
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.n), out=indptr[1:])
        return _readonly(indptr), _readonly(dst[order])

    @property
    def indptr(self) -> np.ndarray:
        return self._csr[0]

    @property
    def indices(self) -> np.ndarray:
        return self._csr[1]

    @cached_property
    def degrees(self) -> np.ndarray:
        return _readonly(np.diff(self.indptr))

    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        if u == v:
            return False
        a, b = min(u, v), max(u, v)
        nb = self.neighbors(a)
        i = np.searchsorted(nb, b)
        return bool(i < nb.size and nb[i] == b)

    def neighbor_mask(self, informed: np.ndarray) -> np.ndarray:
        """Boolean mask of N(I) for I given as a boolean mask."""
        informed = np.asarray(informed, dtype=bool)
        a, b = self.edges[:, 0], self.edges[:, 1]
        ia, ib = informed[a], informed[b]
        out = np.zeros(self.n, dtype=bool)
        out[b[ia & ~ib]] = True
        out[a[ib & ~ia]] = True
        return out

    def neighbors_of_indices(self, nodes: np.ndarray) -> np.ndarray:
        """Sorted array of N(I) for I given as an index array.

        Costs O(vol(I) log) rather than O(m), which is what sampled audits on
        large snapshots need.
        """
        nodes = np.unique(np.asarray(nodes, dtype=np.int64))
        if nodes.size == 0:
            return nodes
        starts = self.indptr[nodes]
        lens = self.indptr[nodes + 1] - starts
        total = int(lens.sum())
        if total == 0:
            return np.zeros(0, dtype=np.int64)
        offs = np.repeat(starts - np.concatenate([[0], np.cumsum(lens)[:-1]]), lens)
        nb = np.unique(self.indices[np.arange(total) + offs])
        return nb[~np.isin(nb, nodes, assume_unique=True)]

    @cached_property
    def adjacency_bits(self) -> tuple[int, ...]:
        """Per-node neighbour bitmasks as Python ints (for subset enumeration)."""
        bits = [0] * self.n
        for u, v in self.edges.tolist():
            bits[u] |= 1 << v
            bits[v] |= 1 << u
        return tuple(bits)

    # io --------------------------------------------------------------------
    def to_edge_list(self) -> str:
        lines = [f"# n={self.n}"] + [f"{u} {v}" for u, v in self.edges.tolist()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_list(cls, text: str, n: int | None = None) -> "Snapshot":
        """Parse ``u v`` lines; a ``# n=<count>`` header fixes the node count."""
        pairs = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip().replace(" ", "")
                if body.startswith("n=") and n is None:
                    n = int(body[2:])
                continue
            parts = line.split()
            if len(parts) < 2:
                raise ValueError(f"bad edge line: {raw!r}")
            pairs.append((int(parts[0]), int(parts[1])))
        if n is None:
            n = 1 + max((max(p) for p in pairs), default=-1)
        return cls(n, np.array(pairs, dtype=np.int64).reshape(-1, 2))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Snapshot) and self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self) -> int:
        return hash((self.n, self.edges.tobytes()))

    def __repr__(self) -> str:
        return f"Snapshot(n={self.n}, m={self.edge_count})"


def neighbors_of_set(G: Snapshot, I: NodeSet | Iterable[int]) -> NodeSet:
    """Out-neighbourhood N(I): nodes outside I adjacent to some node of I."""
    if not isinstance(I, NodeSet):
        I = NodeSet.of(G.n, I)
    if I.n != G.n:
        raise ValueError("node set and snapshot disagree on n")
    return NodeSet(G.neighbor_mask(I.mask))


def snapshot_max_degree(G: Snapshot) -> int:
    return G.max_degree()


class EvolvingGraph(ABC):
    """A graph sequence G_0, G_1, ... driven by a Markov chain.

    Subclasses initialise their chain from the stationary law in
    ``__init__(…, seed)``.  ``step`` advances one time unit; ``snapshot``
    returns the current G_t.  ``expand`` and ``max_degree`` have generic
    implementations via ``snapshot`` that models override with faster paths.
    """

    n: int
    t: int = 0
    #: True when the snapshot never changes; flooding may stop on stagnation.
    static: bool = False

    @abstractmethod
    def step(self) -> None: ...

    @abstractmethod
    def snapshot(self) -> Snapshot: ...

    def expand(self, informed: np.ndarray) -> np.ndarray:
        """I ∪ N(I) on the current snapshot, as a boolean mask."""
        return informed | self.snapshot().neighbor_mask(informed)

    def max_degree(self) -> int:
        return self.snapshot().max_degree()


class StaticGraph(EvolvingGraph):
    """The constant sequence G_t = G for every t."""

    static = True

    def __init__(self, graph: Snapshot):
        self.graph = graph
        self.n = graph.n
        self.t = 0

    def step(self) -> None:
        self.t += 1

    def snapshot(self) -> Snapshot:
        return self.graph
