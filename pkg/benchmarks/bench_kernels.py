"""
Compiled versus numpy kernels on toy-model micro-bins.

    python benchmarks/bench_kernels.py [--micro-bins 2000] [--repeat 3]

Both paths are imported directly, so ``INFOFRONTIER_DISABLE_JIT`` does not
matter here. The first compiled call is timed separately as warm-up.
"""
import argparse
import time

import numpy as np

from infofrontier import AnalyticToy, kernels, micro_bins


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--micro-bins", type=int, default=2000)
    ap.add_argument("--groups", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    m = micro_bins(AnalyticToy(), args.micro_bins)
    a, b, N = m.class1, m.class2, m.N
    rng = np.random.default_rng(0)
    pos = np.sort(rng.uniform(0, N, (6000, args.groups - 1)), axis=1)
    z0 = (np.arange(N) * args.groups // N).astype(np.int64)

    cases = {
        "corner_dp": (lambda: kernels.corner_dp_jit(a, b, args.groups)[0],
                      lambda: kernels.corner_dp_numpy(a, b, args.groups)[0]),
        "eval_positions": (lambda: kernels.eval_positions_jit(a, b, pos)[1],
                           lambda: kernels.eval_positions_numpy(a, b, pos)[1]),
        "dib_greedy": (lambda: _greedy(kernels.dib_greedy_jit, a, b, z0, args.groups),
                       lambda: _greedy(kernels.dib_greedy_numpy, a, b, z0, args.groups)),
    }
    print(f"N={N}, groups={args.groups}, best of {args.repeat}")
    print(f"{'kernel':<16}{'warm-up':>10}{'jit':>10}{'numpy':>10}{'speedup':>10}  agree")
    for name, (jit_fn, np_fn) in cases.items():
        t0 = time.perf_counter()
        jit_fn()
        warm = time.perf_counter() - t0
        tj, oj = best_of(jit_fn, args.repeat)
        tn, on = best_of(np_fn, args.repeat)
        agree = np.allclose(oj, on, atol=1e-12)
        print(f"{name:<16}{warm:>9.3f}s{tj:>9.4f}s{tn:>9.4f}s{tn / tj:>9.1f}x  {agree}")


def _greedy(kernel, a, b, z0, groups):
    z = z0.copy()
    kernel(a, b, z, 0.02, groups, 1e-12, 10_000)
    return z


if __name__ == "__main__":
    main()
