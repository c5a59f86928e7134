"""Compiled kernels vs the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from levy_exchange import _fallback
from levy_exchange.gammapp import GammaPPParams, nb_cdf_table

try:
    from levy_exchange import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    # series length of a small-a VG++ price, and a sampler draw at the LS shape
    yield "psi_integer_sequence n=300000", lambda k: (lambda: k.psi_integer_sequence(3.0, 0.05, 300_000))
    for a, shape, n in ((0.3, 2.0, 1_000_000), (0.01, 864.0, 200_000)):
        p = GammaPPParams(a, shape, shape * (1.0 - a))
        cdf, w_last = nb_cdf_table(p.alpha, p.a)

        def make(k, p=p, cdf=cdf, w_last=w_last, n=n):
            rng = np.random.default_rng(0)
            return lambda: k.sample_gammapp(rng, p.a, p.alpha, p.beta, n, cdf, w_last)

        yield f"sample_gammapp a={a} shape={shape} n={n}", make


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'kernel':48s} {'python [s]':>11s} {'compiled [s]':>13s} {'speedup':>8s}")
    for name, make in cases():
        t_py = best_of(make(_fallback), args.repeat)
        if _kernels is None:
            print(f"{name:48s} {t_py:11.4f} {'n/a':>13s} {'n/a':>8s}")
            continue
        t_c = best_of(make(_kernels), args.repeat)
        print(f"{name:48s} {t_py:11.4f} {t_c:13.4f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
