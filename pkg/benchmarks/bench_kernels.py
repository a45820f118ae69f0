"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py            # per-kernel timings
    python3 benchmarks/bench_kernels.py --sweep    # also a 200-sample sweep, both backends

The per-kernel part needs numba; the sweep part runs the package twice in
subprocesses, once with ``BELLINCOMPAT_DISABLE_JIT=1``.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from bellincompat import kernels
from bellincompat.sampling import haar_unitary, rng_stream


def timeit(fn, *args, repeat: int = 200) -> float:
    fn(*args)  # warm-up (and JIT compile)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat * 1e6


def cases(d: int):
    rng = rng_stream(12345, d)
    Us = [np.ascontiguousarray(haar_unitary(d, rng)) for _ in range(4)]
    P = [np.ascontiguousarray(kernels.rank1_projectors_np(U)) for U in Us]
    A = np.ascontiguousarray(np.stack(P[:2]))
    B = np.ascontiguousarray(np.stack(P[2:]))
    W = np.ascontiguousarray(kernels.cglmp_weights(d))
    n = 64
    As = np.ascontiguousarray(np.broadcast_to(A, (n,) + A.shape))
    Bs = np.ascontiguousarray(np.broadcast_to(B, (n,) + B.shape))
    return {
        "assemble_operator": (W, A, B),
        "chi_from_unitaries": (W, *Us),
        "batch_top_eigvals(64)": (W, As, Bs),
        "commutator_norms": (P[0], P[1], np.inf),
        "pair_sum_top": (P[0], P[1]),
        "rank1_incompat": (Us[0], Us[1], np.inf),
    }


def kernel_table(dims) -> None:
    if not kernels.HAVE_NUMBA:
        print("numba unavailable or disabled; nothing to compare")
        return
    print(f"{'kernel':<24}{'d':>3}{'numpy us':>12}{'numba us':>12}{'speedup':>9}")
    for d in dims:
        for name, args in cases(d).items():
            base = name.split("(")[0]
            t_np = timeit(getattr(kernels, base + "_np"), *args)
            t_nb = timeit(getattr(kernels, base + "_nb"), *args)
            print(f"{name:<24}{d:>3}{t_np:>12.1f}{t_nb:>12.1f}{t_np / t_nb:>9.1f}")


_SWEEP = (
    "import time; from bellincompat import RunConfig, run_sweep, backend;"
    "run_sweep(RunConfig(samples=5));"
    "t = time.perf_counter(); run_sweep(RunConfig(samples=200));"
    "print(backend(), time.perf_counter() - t)"
)


def sweep_compare() -> None:
    for flag in ("0", "1"):
        env = dict(os.environ, BELLINCOMPAT_DISABLE_JIT=flag)
        out = subprocess.run(
            [sys.executable, "-c", _SWEEP], env=env, capture_output=True, text=True, check=True
        ).stdout.split()
        print(f"sweep of 200 qutrit samples, {out[0]:>5} backend: {float(out[1]):.2f} s")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3, 5, 8])
    ap.add_argument("--sweep", action="store_true")
    args = ap.parse_args()
    kernel_table(args.dims)
    if args.sweep:
        sweep_compare()


if __name__ == "__main__":
    main()
