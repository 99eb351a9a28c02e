"""Compare the compiled and pure-Python pivot kernels.

Usage::

    python benchmarks/bench_simplex.py [--repeats 3] [--seed 0]

Solves a fixed set of seeded problems with both kernels and prints
per-problem timings, the objective difference and whether the pivot traces
coincide.  Traces can legitimately diverge on degenerate problems: the two
kernels accumulate dot products in a different order, so near-ties in
pricing may resolve differently while reaching the same optimum.
"""
import argparse
import time

import numpy as np

from mmt.flow import assemble_flow_lp, random_flow_problem
from mmt.lp import LinearProgram, solve_lp
from mmt.norms import PolyhedralNorm


def random_lp(rng, n, p, q):
    A = rng.normal(size=(p, n))
    x0 = rng.uniform(0.0, 1.0, n)
    G = rng.normal(size=(q, n))
    d = G @ x0 + rng.uniform(0.1, 1.0, q)
    c = rng.normal(size=n)
    return LinearProgram(c, A, A @ x0, G, d, lower=np.zeros(n), upper=np.full(n, 2.0))


def problems(seed):
    rng = np.random.default_rng(seed)
    h = PolyhedralNorm.hexagonal()
    out = [(f"dense {n}x{p + q}", random_lp(rng, n, p, q)) for n, p, q in ((40, 10, 20), (120, 30, 60), (300, 60, 150))]
    for nodes in (20, 40, 80):
        prob = random_flow_problem(rng, h, nodes, 6)
        if nodes <= 40:
            out.append((f"flow-epigraph {nodes}", assemble_flow_lp(prob, form="epigraph")))
        out.append((f"flow-gauge {nodes}", assemble_flow_lp(prob, form="gauge")))
    return out


def best_time(lp, kernel, repeats):
    best, sol = np.inf, None
    for _ in range(repeats):
        t = time.perf_counter()
        sol = solve_lp(lp, method="primal", record_trace=True, kernel=kernel)
        best = min(best, time.perf_counter() - t)
    return best, sol


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    print(f"{'problem':22s} {'iters':>6s} {'compiled':>10s} {'python':>10s} {'speedup':>8s} {'|dobj|':>9s}  trace")
    for name, lp in problems(args.seed):
        tc, sc = best_time(lp, "compiled", args.repeats)
        tp, sp = best_time(lp, "python", args.repeats)
        same = "same" if sc.trace == sp.trace else "differs"
        dobj = abs(sc.objective - sp.objective)
        print(f"{name:22s} {sc.iterations:6d} {tc:10.4f} {tp:10.4f} {tp / tc:8.2f} {dobj:9.1e}  {same}")


if __name__ == "__main__":
    main()
