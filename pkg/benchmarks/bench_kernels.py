"""Compare the compiled kernels against the NumPy fallback.

Run with ``python benchmarks/bench_kernels.py``. Each kernel is timed on
the same inputs under both backends and the outputs are cross-checked.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from mixpost._backend import _compiled, _fallback
from mixpost.sliced import _stack_projections, sample_directions
from mixpost.measures import MixingMeasure


def _random_measure(rng, K, d):
    w = rng.dirichlet(np.ones(K))
    A = rng.standard_normal((K, d, d))
    covs = A @ np.swapaxes(A, 1, 2) + 0.5 * np.eye(d)
    return MixingMeasure(w, rng.standard_normal((K, d)) * 3, covs)


def _time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(rng):
    x = np.sort(rng.standard_normal(2000))
    y = np.sort(rng.standard_normal(1500))
    a = rng.dirichlet(np.ones(2000))
    b = rng.dirichlet(np.ones(1500))
    yield "w1d_sorted n=2000/1500", lambda k: k.w1d_sorted(x, a, y, b, 2.0)

    measures = [_random_measure(rng, 20, 2) for _ in range(40)]
    dirs = sample_directions("mix_sw", 2, 100, 0)
    vals, wts, off = _stack_projections(measures, dirs)
    pairs = np.stack(np.triu_indices(40, 1), axis=1).astype(np.int64)
    yield "sliced_pairs M=40 K=20 L=100", lambda k: k.sliced_pairs(vals, wts, off, pairs, 2.0)

    C = rng.random((60, 60))
    ra = rng.dirichlet(np.ones(60))
    rb = rng.dirichlet(np.ones(60))
    yield "transport_simplex 60x60", lambda k: k.transport_simplex(C, ra, rb)[0]

    N, L = 2500, 50
    proj = rng.standard_normal((L, N))
    order = np.argsort(proj, axis=1, kind="stable")
    ps = np.take_along_axis(proj, order, axis=1)
    ref = rng.dirichlet(np.ones(N))
    others = rng.dirichlet(np.ones(N), size=4)
    yield "grid_sliced N=2500 L=50 R=4", lambda k: k.grid_sliced(ps, order, ref, others, 2.0)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _compiled is None:
        print("compiled extension not available; only the fallback can run")
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'compiled [s]':>13s} {'python [s]':>11s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, fn in cases(rng):
        tp, vp = _time(lambda: fn(_fallback), args.repeat)
        if _compiled is None:
            print(f"{name:32s} {'-':>13s} {tp:11.4f}")
            continue
        tc, vc = _time(lambda: fn(_compiled), args.repeat)
        diff = float(np.max(np.abs(np.asarray(vc) - np.asarray(vp))))
        print(f"{name:32s} {tc:13.5f} {tp:11.4f} {tp / tc:8.1f} {diff:11.2e}")


if __name__ == "__main__":
    main()
