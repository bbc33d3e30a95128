import networkx as nx
import numpy as np
import pytest

from megflood._kernels import available_backends
from megflood.core import Snapshot


@pytest.fixture(params=sorted(available_backends()))
def kernels(request):
    """Each available kernel backend in turn."""
    return available_backends()[request.param]


def to_networkx(G: Snapshot) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(range(G.n))
    g.add_edges_from(G.edges.tolist())
    return g


def random_snapshot(n: int, density: float, rng: np.random.Generator) -> Snapshot:
    u, v = np.triu_indices(n, 1)
    keep = rng.random(u.size) < density
    return Snapshot(n, np.stack([u[keep], v[keep]], axis=1))


# acceptance criteria report -------------------------------------------------

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(ok), detail)
    print(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
