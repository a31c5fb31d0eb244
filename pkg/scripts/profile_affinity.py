"""Time the factored affinity loss against the materialized-matrix route.

The factored route never forms the N x N similarity matrix, so one
evaluation costs O(N d) instead of O(N^2). Prints per-evaluation wall
times over a grid-size sweep at fixed feature dim.
"""

import argparse
import time

import numpy as np

from scribseg.affinity import build_graph
from scribseg.grids import FeatureField
from scribseg.losses import gsa_loss_flat


def best_of(fn, repeats=5):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def explicit_eval(s, matrix):
    # same value through the N^2 matrix, gradient included for parity
    ones = np.ones_like(s)
    total = 0.0
    grad = np.zeros_like(s)
    for a in (s, 1.0 - s):
        ma = matrix @ a
        m1 = matrix @ ones
        num = float(a @ ma)
        den = float(a @ m1)
        grad += -(2.0 * ma * den - num * m1) / (den * den)
        total += 1.0 - num / den
    return total, grad


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dim", type=int, default=384)
    ap.add_argument("--sides", type=int, nargs="+",
                    default=[8, 16, 24, 32, 40])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'side':>5s} {'n':>6s} {'factored_ms':>12s} "
          f"{'matrix_ms':>10s} {'speedup':>8s}")
    for side in args.sides:
        field = FeatureField(rng.standard_normal((side, side, args.dim)))
        graph = build_graph(field, materialize=True)
        matrix = graph.require_matrix()
        s = rng.random(graph.n)
        t_fac = best_of(lambda: gsa_loss_flat(s, graph))
        t_mat = best_of(lambda: explicit_eval(s, matrix))
        print(f"{side:5d} {graph.n:6d} {t_fac * 1e3:12.3f} "
              f"{t_mat * 1e3:10.3f} {t_mat / t_fac:8.1f}")


if __name__ == "__main__":
    main()
