"""Time the numba and numpy ensemble kernels on the bundled manifest system.

    python benchmarks/bench_kernels.py [--runs 100] [--iterations 30000] [--repeat 3]
"""

import argparse
import time
from dataclasses import replace

import numpy as np

from nnlms_lab import _kernels
from nnlms_lab.manifest import bundled_manifest, parse_config
from nnlms_lab.montecarlo import run_streams


def bench(config, use, repeat):
    streams = [run_streams(config, r) for r in range(1, config.runs + 1)]
    inputs = np.stack([s[0] for s in streams])
    noise = np.stack([s[1] for s in streams])
    alg = config.algorithm
    args = (inputs, noise, config.system.true_weights, config.initial_weights, alg.kind.code, alg.step_size,
            alg.regularizer, alg.exponent, config.weight_bound)
    _kernels.run_batch(*(a[:1] if i < 2 else a for i, a in enumerate(args)), use=use)  # warm up / compile
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        out = _kernels.run_batch(*args, use=use)
        best = min(best, time.perf_counter() - start)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--runs", type=int, default=100)
    parser.add_argument("--iterations", type=int, default=30_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    manifest = parse_config(bundled_manifest())
    print(f"{'entry':<20}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max |diff|':>14}")
    for entry in manifest.entries:
        config = replace(entry.config, runs=args.runs, iterations=args.iterations)
        t_jit, a = bench(config, "numba", args.repeat)
        t_np, b = bench(config, "numpy", args.repeat)
        diff = np.nanmax(np.abs(a[0] - b[0]))
        print(f"{entry.name:<20}{t_jit:>12.3f}{t_np:>12.3f}{t_np / t_jit:>10.1f}{diff:>14.2e}")


if __name__ == "__main__":
    main()
