"""Throughput comparison of the compiled and fallback MC kernels.

Times the fused transform+reduce inner loop on a synthetic workload for
both backends and reports trials/second plus the compiled/fallback
speedup. Numerical agreement is asserted along the way: the two
backends consume identical z draws, so per-trial results may differ
only at summation-order level.

Usage: python3 benchmarks/bench_kernels.py [--pairs N] [--trials N]
"""

import argparse
import time

import numpy as np

from rateblur._kernels import _fallback
from rateblur.dataio import DEFAULT_PROFILE, synthesize_tensor
from rateblur.engine import MetricKind, sample_metric
from rateblur.noisysim import optimal_recommender, rating_set_from_tensor
from rateblur.significance import sample_srmse
from rateblur.statmath import RandomSeed

try:
    from rateblur._kernels import _mckernels
except ImportError:
    _mckernels = None


def bench_raw(impl, name, pairs, trials, repeat=3):
    gen = np.random.default_rng(1)
    mu = gen.uniform(1.5, 4.5, pairs)
    sigma = gen.uniform(0.2, 1.0, pairs)
    pi = mu + gen.normal(0, 0.3, pairs)
    z = gen.standard_normal((trials, pairs))
    out = np.empty(trials)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        impl.metric_reduce(z, mu, sigma, pi, 0, out)
        best = min(best, time.perf_counter() - t0)
    rate = trials / best
    print(f"  {name:9s} metric_reduce: {best * 1e3:8.1f} ms "
          f"({rate / 1e6:6.2f}M trials/s)")
    return rate, out.copy()


def bench_pipeline(pairs_label, tensor, trials):
    ratings = rating_set_from_tensor(tensor)
    pred = optimal_recommender(tensor)
    for label, fn in (
        ("rmse", lambda: sample_metric(ratings, pred, MetricKind.RMSE,
                                       trials, RandomSeed(3))),
        ("srmse/cond", lambda: sample_srmse(ratings, pred, 0.05, trials,
                                            RandomSeed(3))),
    ):
        t0 = time.perf_counter()
        fn()
        dt = time.perf_counter() - t0
        print(f"  {pairs_label} {label:10s}: {dt * 1e3:8.1f} ms "
              f"({trials / dt / 1e3:7.1f}K trials/s)")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=2048)
    ap.add_argument("--trials", type=int, default=50000)
    args = ap.parse_args()

    print(f"raw kernel, {args.pairs} pairs x {args.trials} trials:")
    rate_fb, out_fb = bench_raw(_fallback, "fallback", args.pairs,
                                args.trials)
    if _mckernels is None:
        print("  compiled extension not built; skipping comparison")
    else:
        rate_ext, out_ext = bench_raw(_mckernels, "compiled", args.pairs,
                                      args.trials)
        worst = float(np.max(np.abs(out_fb - out_ext)))
        assert worst < 1e-9, f"backends disagree by {worst}"
        print(f"  speedup: {rate_ext / rate_fb:.2f}x "
              f"(max per-trial deviation {worst:.2e})")

    tensor = synthesize_tensor(DEFAULT_PROFILE, users=67, seed=RandomSeed(42))
    n_pairs = len(tensor.pairs)
    print(f"full pipeline, default tensor ({n_pairs} pairs), "
          f"{args.trials // 5} trials:")
    bench_pipeline(f"{n_pairs}p", tensor, args.trials // 5)


if __name__ == "__main__":
    main()
