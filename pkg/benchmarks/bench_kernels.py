"""Compare the compiled kernels with the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--json PATH]

Both backends run the same inputs; the tree sums must agree exactly and
the jump simulation must produce identical statistics for the same seed.
"""

import argparse
import json
import time

import numpy as np

from treesurgeon import _backend
from treesurgeon.fixtures import biased_cycle, complete_rational_corpus, kite
from treesurgeon.polynomials import _integer_weights
from treesurgeon.simulate import _float_tables, horizon_for_jumps, make_rng
from treesurgeon.trees import NO_CONSTRAINT, csr_table, enumerate_rooted_trees, surgery_batch


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def tree_sums_case(k, g):
    starts, targets, slots = csr_table(g, 0, NO_CONSTRAINT)
    weights, _ = _integer_weights(g, slots)
    codes = [0] * len(slots)
    return lambda: k.tree_sums(g.n, 0, starts, targets, weights, codes, 1, True)


def gillespie_case(k, g, jumps):
    tables = _float_tables(g)
    horizon = horizon_for_jumps(g, jumps)

    def run():
        out = k.gillespie(*tables, g.pair_count, 0, horizon, 0.05 * horizon, 20, make_rng(7))
        return [np.asarray(x).tolist() if not isinstance(x, int) else x for x in out]

    return run


def surgery_case(backend, g):
    tx = list(enumerate_rooted_trees(g, 0))
    ty = list(enumerate_rooted_trees(g, 1))

    def run():
        out_y, out_x, flags, steps, _ = surgery_batch(g, tx, ty, backend)
        return [np.asarray(a).tolist() for a in (out_y, out_x, flags, steps)]

    return run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="also write the results here")
    args = ap.parse_args()

    py = _backend.get_kernels("python")
    try:
        cy = _backend.get_kernels("cython")
    except ImportError:
        print("compiled kernels are not built; nothing to compare")
        return
    cases = []
    for n in (6, 7):
        g = complete_rational_corpus(1, n, seed=n)[0]
        cases.append((f"tree_sums K{n}", tree_sums_case(py, g), tree_sums_case(cy, g)))
    g = complete_rational_corpus(1, 5, seed=5)[0]
    cases.append(("surgery_batch K5", surgery_case("python", g), surgery_case("cython", g)))
    for name, g in (("biased_cycle", biased_cycle()), ("kite", kite())):
        cases.append((f"gillespie {name} 2e5 jumps", gillespie_case(py, g, 2e5), gillespie_case(cy, g, 2e5)))

    rows = []
    print(f"{'case':32s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s}  same")
    for name, fpy, fcy in cases:
        tp, op = best_of(fpy, args.repeat)
        tc, oc = best_of(fcy, args.repeat)
        same = repr(op) == repr(oc)
        rows.append({"case": name, "python_s": tp, "cython_s": tc, "speedup": tp / tc, "identical": same})
        print(f"{name:32s} {tp:10.4f} {tc:10.4f} {tp / tc:8.1f}  {same}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
