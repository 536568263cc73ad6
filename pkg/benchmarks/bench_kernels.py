"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5]

Both variants are called on identical inputs; the script also checks that
they agree before timing.  Run with CGPT_SENSE_DISABLE_JIT=1 and the numba
column simply repeats the numpy one.
"""

import argparse
import time

import numpy as np

from cgpt_sense import kernels


def best_of(fn, args, repeat):
    fn(*args)  # warm-up (and JIT compile)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def cases(rng):
    for n in (256, 512, 1024):
        t = 2 * np.pi * np.arange(n) / n
        pts = np.column_stack([np.cos(t), 0.6 * np.sin(t)])
        nrm = np.column_stack([0.6 * np.cos(t), np.sin(t)])
        nrm /= np.linalg.norm(nrm, axis=1)[:, None]
        yield "log_distance", n, (pts, pts)
        yield "normal_dipole", n, (pts, nrm, pts)
    for P, R, K in ((100, 128, 5), (500, 512, 5)):
        G = rng.standard_normal((P, R, 2 * K))
        V = rng.standard_normal((P, 2 * K))
        B = rng.standard_normal((P, R))
        yield "msr_forward", f"{P}x{R}", (G, V)
        yield "msr_adjoint", f"{P}x{R}", (G, B)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"backend: {kernels.BACKEND}")
    print(f"{'kernel':14s} {'size':>9s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}")
    for name, size, a in cases(rng):
        f_np = getattr(kernels, name + "_np")
        f_nb = getattr(kernels, name + "_nb")
        ref, got = f_np(*a), f_nb(*a)
        if not np.allclose(ref, got, rtol=1e-12, atol=1e-12):
            raise SystemExit(f"{name}: numpy and numba results disagree")
        t_np = best_of(f_np, a, args.repeat)
        t_nb = best_of(f_nb, a, args.repeat)
        print(f"{name:14s} {str(size):>9s} {1e3 * t_np:11.3f} {1e3 * t_nb:11.3f} {t_np / t_nb:8.2f}")


if __name__ == "__main__":
    main()
