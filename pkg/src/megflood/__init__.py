"""Flooding on stationary Markovian evolving graphs.

Geometric and edge-Markovian models, flooding with per-run certificates,
(h, k)-expansion audits and reproducible scaling sweeps.  Hot kernels come
from the compiled ``_ckernels`` extension when it is built, else from the
numpy fallback; ``BACKEND`` says which.
"""

from ._kernels import BACKEND
from .core import EvolvingGraph, NodeSet, Snapshot, StaticGraph, neighbors_of_set, snapshot_max_degree
from .edge_markov import EdgeMEG, EdgeParams, LazyEdgeMEG, kstep_edge_probability
from .expansion import (
    BudgetExceeded,
    ExpansionSchedule,
    edge_schedule,
    expansion_estimate,
    flooding_bound,
    geometric_schedule,
    is_expander_exact,
    lemma_bound,
)
from .flooding import degree_lower_certificate, flood_once, flooding_time, geometric_lower_certificate
from .geometric import GeometricMEG, GeometricParams
from .rng import RngStream, derive_seed

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BudgetExceeded", "EdgeMEG", "EdgeParams", "EvolvingGraph", "ExpansionSchedule",
    "GeometricMEG", "GeometricParams", "LazyEdgeMEG", "NodeSet", "RngStream", "Snapshot", "StaticGraph",
    "degree_lower_certificate", "derive_seed", "edge_schedule", "expansion_estimate", "flood_once",
    "flooding_bound", "flooding_time", "geometric_lower_certificate", "geometric_schedule",
    "is_expander_exact", "kstep_edge_probability", "lemma_bound", "neighbors_of_set", "snapshot_max_degree",
]
