"""Compare the compiled and numpy kernel backends on the same inputs.

    python3 benchmarks/bench_kernels.py [--n 16384] [--repeat 5]

Each kernel is timed per backend (best of ``--repeat``); outputs are checked
to be identical across backends before any number is printed.
"""

import argparse
import math
import time

import numpy as np

from megflood._kernels import available_backends
from megflood.geometric import GeometricParams, sample_stationary_positions


def best_of(fn, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def lazy_flood(mod, n, p, q, seed):
    ledger = mod.LazyFloodLedger(n, p, q, seed)
    informed = np.zeros(n, dtype=bool)
    informed[0] = True
    t = 0
    while not informed.all() and t < 1000:
        t += 1
        informed = ledger.step(informed, t)
    return t, ledger.queries


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=16384)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    n = args.n
    R = 3 * math.sqrt(math.log(n))
    params = GeometricParams(n, R / 2, R)
    state = sample_stationary_positions(params, args.seed)
    pi, pj = state.pi, state.pj
    informed = np.zeros(n, dtype=bool)
    informed[np.random.default_rng(args.seed).choice(n, n // 2, replace=False)] = True
    p_hat = 8 * math.log(n) / n
    q = 0.5
    p = q * p_hat / (1 - p_hat)

    cases = {
        "geo_pairs": lambda m: m.geo_pairs(pi, pj, params.R2u, params.bucket),
        "geo_degrees": lambda m: m.geo_degrees(pi, pj, params.R2u, params.bucket),
        "geo_expand": lambda m: m.geo_expand(pi, pj, informed, params.R2u, params.bucket),
        "lazy_flood": lambda m: lazy_flood(m, n, p, q, args.seed),
    }
    backends = available_backends()
    print(f"n={n} backends={','.join(backends)}")
    print(f"{'kernel':<12} " + " ".join(f"{b + ' [ms]':>14}" for b in backends) + f" {'speedup':>9}")
    for name, fn in cases.items():
        times, outs = {}, {}
        for b, mod in backends.items():
            times[b], outs[b] = best_of(lambda: fn(mod), args.repeat)
        ref = outs["python"]
        for b, o in outs.items():
            same = np.array_equal(o, ref) if isinstance(o, np.ndarray) else o == ref
            if not same:
                raise SystemExit(f"{name}: backend {b} disagrees with the numpy fallback")
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        cols = " ".join(f"{1000 * times[b]:>14.2f}" for b in backends)
        print(f"{name:<12} {cols} {speed:>8.1f}x")


if __name__ == "__main__":
    main()
