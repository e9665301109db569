"""Compare the compiled and numpy EM kernels on latent class workloads.

    python benchmarks/bench_em.py [--repeat 3] [--iters 200]

Each workload runs a fixed number of EM iterations (convergence disabled)
from identical starting responsibilities, so both kernels do the same work.
"""

import argparse
import time

import numpy as np

from lcavarsel import _backend
from lcavarsel.lca import compress_rows
from lcavarsel.simgen import ScenarioSpec, generate

WORKLOADS = [
    # (label, scenario, n, columns, g)
    ("scenario1 X1-X4, G=3", 1, 1000, [0, 1, 2, 3], 3),
    ("scenario1 all 12, G=5", 1, 1000, list(range(12)), 5),
    ("scenario1 all 12, G=5, N=10000", 1, 10000, list(range(12)), 5),
    ("scenario2 all 10, G=4", 2, 1500, list(range(10)), 4),
]


def prepare(scenario, n, cols, g, seed=0):
    d = generate(ScenarioSpec(scenario, n, seed=seed)).dataset
    ncat = [d.n_categories[j] for j in cols]
    patterns, weights, inverse = compress_rows(d.codes[:, cols], ncat)
    offsets = np.zeros(len(cols) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(ncat)
    idx = np.ascontiguousarray(patterns + offsets[:-1], dtype=np.int32)
    rng = np.random.default_rng(seed)
    resp = np.ascontiguousarray(rng.dirichlet(np.ones(g), size=len(weights)) * weights[:, None])
    return (idx, np.ascontiguousarray(weights), offsets, resp), len(weights)


def best_time(kernel, args, iters, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = kernel(*args, iters, 1e-300, 1e-10)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--iters", type=int, default=200)
    args = parser.parse_args()

    kernels = _backend.KERNELS
    print(f"kernels available: {', '.join(kernels)}; default backend: {_backend.BACKEND}")
    header = f"{'workload':34s} {'patterns':>8s} " + " ".join(f"{k + ' ms':>12s}" for k in kernels)
    if "cython" in kernels:
        header += f" {'speedup':>8s} {'max |dll|':>10s}"
    print(header)
    for label, scenario, n, cols, g in WORKLOADS:
        em_args, n_patterns = prepare(scenario, n, cols, g)
        results = {k: best_time(fn, em_args, args.iters, args.repeat) for k, fn in kernels.items()}
        line = f"{label:34s} {n_patterns:8d} " + " ".join(
            f"{results[k][0] * 1e3:12.1f}" for k in kernels
        )
        if "cython" in kernels:
            speedup = results["python"][0] / results["cython"][0]
            dll = np.max(np.abs(results["python"][1][3] - results["cython"][1][3]))
            line += f" {speedup:8.1f}x {dll:10.1e}"
        print(line)


if __name__ == "__main__":
    main()
