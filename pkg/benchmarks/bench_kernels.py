"""Numba vs numpy timings for the frame kernels and an end-to-end limit run.

    python3 benchmarks/bench_kernels.py [--n 4] [--batch 1000 10000] [--repeat 5]

Times exclude JIT compilation (one warm-up call per kernel).
"""
import argparse
import time

import numpy as np

from flagmorse.flowlab import _kernels
from flagmorse.flowlab.flags import SplitElement, flow_to_limit_frames, random_frames


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--batch", type=int, nargs="+", default=[1000, 10000])
    ap.add_argument("--steps", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    if not _kernels.HAVE_NUMBA:
        print("numba is unavailable or disabled (FLAGMORSE_NUMBA=0); only numpy timings are shown")
    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    rng = np.random.default_rng(0)
    H = SplitElement.regular(args.n)
    factors = np.exp(0.1 * H.array)

    print(f"{'kernel':<24}{'batch':>8}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for batch in args.batch:
        frames = random_frames(args.n, batch, rng)
        mats = rng.standard_normal((batch, args.n, args.n))
        cases = {
            "scale_orthonormalize": lambda b: _kernels.scale_orthonormalize(frames, factors, args.steps, b),
            "orthonormalize": lambda b: _kernels.orthonormalize(mats, b),
            "flow_to_limit": lambda b: flow_to_limit_frames(H, (), frames, backend=b),
        }
        for name, fn in cases.items():
            row = {}
            for b in backends:
                fn(b)  # warm-up / compile
                row[b] = best_of(lambda: fn(b), args.repeat)
            speed = f"{row['numpy'] / row['numba']:>9.1f}x" if "numba" in row else f"{'-':>10}"
            print(f"{name:<24}{batch:>8}" + "".join(f"{row[b] * 1e3:>10.2f}ms" for b in backends) + speed)


if __name__ == "__main__":
    main()
