"""Benchmark the compiled vote/surface kernels against their numpy fallbacks.

Run from the repo root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --dims 163 193 146 --members 9

The first compiled-kernel call includes JIT compilation; a warmup pass runs
before timing so the table reports steady-state throughput.
"""

import argparse
import time

import numpy as np

from voxseg._accel import kernels_numpy

try:
    from voxseg._accel import kernels_numba
except ImportError:
    kernels_numba = None


def best_of(fn, repeats: int) -> float:
    fn()  # warmup (and JIT compile for the numba variants)
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dims", nargs=3, type=int, default=[160, 192, 144])
    parser.add_argument("--members", type=int, default=9)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    dims = tuple(args.dims)
    n_vox = int(np.prod(dims))
    member_idx = rng.integers(0, 4, size=(args.members, n_vox)).astype(np.uint8)
    mask = rng.random(dims) < 0.3

    workloads = [
        ("label_vote_counts",
         f"{args.members} members x {n_vox:,} voxels",
         lambda k: k.label_vote_counts(member_idx, 4)),
        ("surface_mask",
         f"{dims[0]}x{dims[1]}x{dims[2]} mask",
         lambda k: k.surface_mask(mask)),
    ]

    print(f"{'kernel':<20} {'workload':<28} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, desc, call in workloads:
        t_np = best_of(lambda: call(kernels_numpy), args.repeats)
        if kernels_numba is None:
            print(f"{name:<20} {desc:<28} {t_np * 1e3:>8.1f}ms {'n/a':>10} {'n/a':>8}")
            continue
        t_nb = best_of(lambda: call(kernels_numba), args.repeats)
        assert np.array_equal(call(kernels_numpy), call(kernels_numba))
        print(f"{name:<20} {desc:<28} {t_np * 1e3:>8.1f}ms {t_nb * 1e3:>8.1f}ms "
              f"{t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
