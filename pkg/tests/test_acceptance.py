"""Exit criteria, each run at its stated scale and tolerance.

Every test records one PASS/FAIL line (shown in the terminal summary) before
asserting, including its wall time against the budget.
"""

import io
import itertools
import math
import time
import warnings
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from scipy import stats

from megflood.core import StaticGraph
from megflood.edge_markov import EdgeMEG, EdgeParams, LazyEdgeMEG, kstep_edge_probability
from megflood.expansion import (
    edge_schedule,
    exact_min_expansion,
    expansion_estimate,
    fit_bound_constant,
    fit_edge_c,
    geometric_schedule,
    is_expander_exact,
    lemma_bound,
    sampled_boundaries,
    verify_witness,
)
from megflood.flooding import degree_lower_certificate, flood_once, geometric_lower_certificate
from megflood.geometric import GeometricMEG, GeometricParams, brute_force_snapshot, build_geometric_snapshot
from megflood.harness import fit_scaling, parse_config, run_sweep, write_csv

from conftest import random_snapshot, record_criterion, to_networkx

pytestmark = pytest.mark.acceptance


def check(number, ok, elapsed, budget, detail):
    within = elapsed < budget
    record_criterion(number, ok and within, f"{detail}; {elapsed:.1f}s (budget {budget:g}s)")
    assert ok, detail
    assert within, f"took {elapsed:.1f}s, budget {budget}s"


def eccentricity_or_inf(G, s):
    dist = nx.single_source_shortest_path_length(to_networkx(G), s)
    return max(dist.values()) if len(dist) == G.n else math.inf


def test_c01_static_flooding_equals_bfs():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    mismatches = completed = 0
    for i in range(100):
        n = int(rng.integers(20, 501))
        if i % 2 == 0:
            # geometric with r < eps: walkers never move
            R = float(rng.uniform(1.2, 2.5)) * math.sqrt(math.log(n))
            model = GeometricMEG(GeometricParams(n, 0.5, R), int(rng.integers(2**31)))
        else:
            ph = float(rng.uniform(1.0, 3.0)) * math.log(n) / n
            model = EdgeMEG(EdgeParams.from_p_hat(n, min(ph, 0.9), 1e-9), int(rng.integers(2**31)), pinned=True)
        assert model.static
        G = model.snapshot()
        s = int(rng.integers(n))
        res = flood_once(model, s, max_steps=n + 1)
        assert model.snapshot() == G
        completed += res.completed
        mismatches += res.T != eccentricity_or_inf(G, s)
    check(1, mismatches == 0, time.perf_counter() - t0, 10,
          f"T(s) == BFS eccentricity on 100/100 time-constant instances ({completed} connected), mismatches={mismatches}")


def test_c02_edge_stationarity():
    t0 = time.perf_counter()
    n, p, q, steps, seeds = 200, 0.01, 0.03, 100, 50
    params = EdgeParams(n, p, q)
    dens = np.zeros((seeds, steps))
    for s in range(seeds):
        m = EdgeMEG(params, 2000 + s)
        for t in range(steps):
            m.step()
            dens[s, t] = m.state.density
    sigma = math.sqrt(0.25 * 0.75 / params.pairs)
    mean = dens.mean(axis=0)
    worst = float(np.abs(mean - 0.25).max())
    ok = worst < 4 * sigma / math.sqrt(seeds)
    check(2, ok, time.perf_counter() - t0, 30,
          f"per-step mean density over {seeds} seeds: max |mean - 0.25| = {worst:.2e} "
          f"< 4 sigma/sqrt(50) = {4 * sigma / math.sqrt(seeds):.2e} (sigma = {sigma:.2e})")


def _matrix_power(p, q, k):
    M = ((1 - Fraction(p), Fraction(p)), (Fraction(q), 1 - Fraction(q)))
    out = ((Fraction(1), Fraction(0)), (Fraction(0), Fraction(1)))

    def mul(A, B):
        return tuple(tuple(A[i][0] * B[0][j] + A[i][1] * B[1][j] for j in range(2)) for i in range(2))

    while k:
        if k & 1:
            out = mul(out, M)
        M = mul(M, M)
        k >>= 1
    return out


def test_c03_kstep_closed_form():
    t0 = time.perf_counter()
    grid = [0.001, 0.05, 0.2, 0.5, 0.7, 0.95, 0.999]
    worst = 0.0
    for p, q in itertools.product(grid, grid):
        for k in range(65):
            Mk = _matrix_power(p, q, k)
            worst = max(worst,
                        abs(kstep_edge_probability(p, q, k, True) - float(Mk[1][1])),
                        abs(kstep_edge_probability(p, q, k, False) - float(Mk[0][1])))
    rng = np.random.default_rng(303)
    spots = [(0.2, 0.3, 10, True), (0.9, 0.8, 7, False), (0.05, 0.1, 25, False), (0.6, 0.7, 3, True), (0.01, 0.02, 64, True)]
    z_max = 0.0
    m = 1_000_000
    for p, q, k, on0 in spots:
        on = np.full(m, on0)
        for _ in range(k):
            u = rng.random(m)
            on = np.where(on, u >= q, u < p)
        exact = kstep_edge_probability(p, q, k, on0)
        z_max = max(z_max, abs(on.mean() - exact) / math.sqrt(exact * (1 - exact) / m))
    ok = worst <= 1e-12 and z_max < 4
    check(3, ok, time.perf_counter() - t0, 60,
          f"max |closed form - M^k| = {worst:.1e} over 49 (p,q) incl. p+q>1, k<=64; Monte Carlo max |z| = {z_max:.2f} (5 cases, 1e6 chains)")


def test_c04_lazy_dense_equivalence():
    t0 = time.perf_counter()
    params = EdgeParams.from_p_hat(30, 0.08, 0.3)
    dense = [flood_once(EdgeMEG(params, 40_000 + s), 0, 10_000).T for s in range(500)]
    lazy = [flood_once(LazyEdgeMEG(params, 90_000 + s), 0, 10_000).T for s in range(500)]
    res = stats.ks_2samp(dense, lazy)
    ok = res.pvalue > 0.01 and all(map(math.isfinite, dense + lazy))
    check(4, ok, time.perf_counter() - t0, 60,
          f"KS two-sample p = {res.pvalue:.3f} (> 0.01); mean T dense {np.mean(dense):.2f}, lazy {np.mean(lazy):.2f}")


def test_c05_bucket_grid_exact():
    t0 = time.perf_counter()
    rng = np.random.default_rng(505)
    bad = 0
    for i in range(100):
        n = int(rng.integers(2, 257))
        eps = float(rng.choice([1.0, 0.5, 0.3]))
        R = float(rng.uniform(eps * 1.01, min(6.0, math.sqrt(n))))
        r = float(rng.uniform(0, R))
        model = GeometricMEG(GeometricParams(n, r, R, eps=eps), i)
        for _ in range(int(rng.integers(0, 3))):
            model.step()
        bad += build_geometric_snapshot(model.state) != brute_force_snapshot(model.state)
    check(5, bad == 0, time.perf_counter() - t0, 10, f"bucket grid == all-pairs graph on 100 instances (n <= 256), mismatches={bad}")


def test_c06_certificates():
    t0 = time.perf_counter()
    rng = np.random.default_rng(606)
    geo_viol = deg_viol_geo = deg_viol_edge = geo_done = 0
    for i in range(1000):
        n = int(rng.integers(64, 513))
        R = float(rng.uniform(1.5, 3.5)) * math.sqrt(math.log(n))
        r = float(rng.uniform(0, R))
        m = GeometricMEG(GeometricParams(n, r, R), 10_000 + i)
        s = int(rng.integers(n))
        res = flood_once(m, s, 1000, record_degrees=True)
        if res.completed:
            geo_done += 1
            geo_viol += geometric_lower_certificate(m.initial, s) > res.completion_time
        deg_viol_geo += not degree_lower_certificate(res.trajectory, res.max_degrees)
    for i in range(1000):
        n = int(rng.integers(32, 257))
        ph = float(rng.uniform(0.5, 4.0)) * math.log(n) / n
        q = float(rng.uniform(0.05, 0.95))
        m = EdgeMEG(EdgeParams.from_p_hat(n, min(ph, 0.9), q), 20_000 + i)
        res = flood_once(m, int(rng.integers(n)), 1000, record_degrees=True)
        deg_viol_edge += not degree_lower_certificate(res.trajectory, res.max_degrees)
    ok = geo_viol == deg_viol_geo == deg_viol_edge == 0 and geo_done > 0
    check(6, ok, time.perf_counter() - t0, 300,
          f"geometric certificate violations {geo_viol}/{geo_done} completed; degree certificate violations "
          f"{deg_viol_geo}/1000 geometric, {deg_viol_edge}/1000 edge")


GEOMETRIC_SWEEP = """
[experiment]
model = geometric
seeds = 20
master_seed = 2024
source = random
certificates = true

[grid]
n = 1024, 4096, 16384
R = 3 * sqrt(log(n))
r = R / 2
"""


def test_c07_geometric_scaling():
    t0 = time.perf_counter()
    res = run_sweep(parse_config(GEOMETRIC_SWEEP))
    rows = res.rows
    done = sum(r["completed"] for r in rows)
    fit = fit_scaling(rows, "sqrt(n)/R")
    medians = {n: float(np.median([r["T"] for r in rows if r["n"] == n])) for n in (1024, 4096, 16384)}
    ok = len(rows) == 60 and done == 60 and 0.8 <= fit.exponent <= 1.2 and fit.r2 >= 0.9
    check(7, ok, time.perf_counter() - t0, 900,
          f"exponent {fit.exponent:.3f} in [0.8, 1.2], R^2 {fit.r2:.3f} >= 0.9 (median T per n: {medians}; {done}/60 completed)")


def test_c08_edge_scaling():
    t0 = time.perf_counter()
    ns = (1024, 4096, 16384)
    q = 0.5
    text = (
        "[experiment]\nmodel = edge\nseeds = 20\nmaster_seed = 2024\nlazy = true\n"
        f"[grid]\nn = {', '.join(map(str, ns))}\np_hat = 8 * log(n) / n\nq = {q}\n"
    )
    rows = run_sweep(parse_config(text)).rows
    medians, bounds, within, total = {}, {}, 0, 0
    for n in ns:
        ph = 8 * math.log(n) / n
        Ts = [r["T"] for r in rows if r["n"] == n]
        medians[n] = float(np.median([math.inf if T is None else T for T in Ts]))
        cs = []
        for s in range(10):
            G = EdgeMEG(EdgeParams.from_p_hat(n, ph, q), 70_000 + s).snapshot()
            cs.append(fit_edge_c(sampled_boundaries(G, n / 2, 200, s), n, ph))
        c = float(np.quantile(cs, 0.95))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            bounds[n] = lemma_bound(edge_schedule(n, ph, c))
        within += sum(T is not None and T <= 3 * bounds[n] for T in Ts)
        total += len(Ts)
    meds = [medians[n] for n in ns]
    flat = all(b <= a + 1 for a, b in zip(meds, meds[1:])) and max(meds) - min(meds) <= 1
    pred = [math.log(n) / math.log(8 * math.log(n)) for n in ns]
    ok = flat and within >= 0.95 * total
    check(8, ok, time.perf_counter() - t0, 900,
          f"median T {dict(zip(ns, meds))} flat within 1 step while log n/log(n p_hat) = "
          f"{', '.join(f'{x:.2f}' for x in pred)}; T <= 3*lemma bound on {within}/{total} runs "
          f"(bounds {', '.join(f'{bounds[n]:.2f}' for n in ns)})")


def _naive_verdict(G, h, k):
    g = to_networkx(G)
    for size in range(1, min(h, G.n) + 1):
        for I in itertools.combinations(range(G.n), size):
            if len(set().union(*(set(g[u]) for u in I)) - set(I)) < k * size:
                return False
    return True


def test_c09_expander_auditor():
    t0 = time.perf_counter()
    rng = np.random.default_rng(909)
    disagree = bad_witness = 0
    for _ in range(200):
        n = int(rng.integers(2, 11))
        G = random_snapshot(n, float(rng.uniform(0.05, 0.95)), rng)
        h = int(rng.integers(1, n + 1))
        k = float(rng.choice([0.25, 0.5, 1.0, 1.5, 2.0, 3.0]))
        v = is_expander_exact(G, h, k)
        disagree += v.passed != _naive_verdict(G, h, k)
        if not v.passed:
            bad_witness += not verify_witness(G, v.witness, h, k)
    below = 0
    for i in range(60):
        n = int(rng.integers(4, 15))
        G = random_snapshot(n, float(rng.uniform(0.1, 0.8)), rng)
        h = max(1, n // 2)
        exact, _ = exact_min_expansion(G, h)
        est = expansion_estimate(G, h, 200, i)
        below += est.min_ratio < exact - 1e-12
    ok = disagree == bad_witness == below == 0
    check(9, ok, time.perf_counter() - t0, 300,
          f"exact vs naive enumeration disagreements {disagree}/200 (bad witnesses {bad_witness}); "
          f"sampled below exact {below}/60 (n <= 14)")


def test_c10_lemma_bound_numerics():
    t0 = time.perf_counter()
    parts, worst_all = [], 0.0
    for ab in (0.05, 0.1):
        values, preds = [], []
        for e in range(10, 21):
            n = 2**e
            R = 3 * math.sqrt(math.log(n))
            values.append(lemma_bound(geometric_schedule(n, R, ab, ab)))
            preds.append(math.sqrt(n) / R + math.log(math.log(R)))
        C, worst = fit_bound_constant(np.array(values), np.array(preds))
        worst_all = max(worst_all, worst)
        parts.append(f"alpha = beta = {ab}: C = {C:.2f}, max rel residual {worst:.2%}")
    check(10, worst_all <= 0.10, time.perf_counter() - t0, 10,
          f"{'; '.join(parts)} (<= 10%, n = 2^10..2^20)")


def test_c11_determinism():
    t0 = time.perf_counter()
    texts = {
        "geometric": "[experiment]\nmodel = geometric\nseeds = 4\nmaster_seed = 11\nwall_clock = false\n"
                     "[grid]\nn = 256, 1024\nR = auto\nr = R/2\n",
        "edge-lazy": "[experiment]\nmodel = edge\nseeds = 4\nmaster_seed = 11\nlazy = true\nwall_clock = false\n"
                     "[grid]\nn = 128, 512\np_hat = 8*log(n)/n\nq = 0.3\n",
        "edge-dense": "[experiment]\nmodel = edge\nseeds = 4\nmaster_seed = 11\nwall_clock = false\n"
                      "[grid]\nn = 128\np_hat = 0.1\nq = 0.3\n",
    }
    same = True
    for text in texts.values():
        outs = []
        for _ in range(2):
            buf = io.StringIO()
            write_csv(run_sweep(parse_config(text)).rows, buf)
            outs.append(buf.getvalue().encode())
        same &= outs[0] == outs[1]
    check(11, same, time.perf_counter() - t0, 120,
          f"byte-identical CSVs across two runs for {len(texts)} configs: {same}")
