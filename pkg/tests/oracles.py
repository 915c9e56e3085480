"""Slow, independent reference computations.

Nothing here touches the package's enumeration kernels, determinant code
or linear algebra.  Graphs are plain lists ``(u, v, rate_uv, rate_vu)``
over vertices ``0..n-1``.  Running this file regenerates
``data/oracle_values.json``; the tests compare both the package and this
module against that frozen file.
"""

import json
import sys
from fractions import Fraction
from itertools import combinations
from pathlib import Path

FROZEN = Path(__file__).parent / "data" / "oracle_values.json"


def oriented(pairs):
    """``(pair, sign, source, target, rate)`` for every present orientation."""
    out = []
    for k, (u, v, f, b) in enumerate(pairs):
        if f:
            out.append((k, 1, u, v, Fraction(f)))
        if b:
            out.append((k, -1, v, u, Fraction(b)))
    return out


def is_tree(n, root, edges):
    out = {}
    for e in edges:
        if e[2] in out or e[2] == root:
            return False
        out[e[2]] = e[3]
    if len(out) != n - 1:
        return False
    for v in range(n):
        seen = set()
        while v != root:
            if v in seen:
                return False
            seen.add(v)
            v = out[v]
    return True


def trees(n, pairs, root):
    """Every rooted tree, found by testing all ``(n - 1)``-subsets of oriented edges."""
    edges = oriented(pairs)
    return [set(s) for s in combinations(edges, n - 1) if is_tree(n, root, s)]


def weight(tree):
    w = Fraction(1)
    for e in tree:
        w *= e[4]
    return w


def status_of(tree, pinned):
    """Per pinned pair: 0 unused, 1 forward used, 2 backward used."""
    used = {(e[0], e[1]) for e in tree}
    return tuple(1 if (k, 1) in used else 2 if (k, -1) in used else 0 for k in pinned)


def tree_vector(n, pairs, root, pinned):
    """Map status tuple -> summed weight, by classifying every tree once."""
    out = {}
    for t in trees(n, pairs, root):
        s = status_of(t, pinned)
        out[s] = out.get(s, Fraction(0)) + weight(t)
    return out


def poly(n, pairs, root, avoid=(), require=()):
    """``avoid``/``require`` hold ``(pair, sign)`` keys."""
    total = Fraction(0)
    for t in trees(n, pairs, root):
        keys = {(e[0], e[1]) for e in t}
        if keys.isdisjoint(avoid) and set(require) <= keys:
            total += weight(t)
    return total


def contracted(n, pairs, k):
    """Tree polynomial of the graph with pair ``k`` merged, rooted at the merged vertex."""
    u, v = pairs[k][0], pairs[k][1]
    relabel = {}
    for x in range(n):
        if x == v:
            continue
        relabel[x] = len(relabel)
    relabel[v] = relabel[u]
    merged = {}
    for j, (a, b, f, r) in enumerate(pairs):
        if j == k:
            continue
        a2, b2 = relabel[a], relabel[b]
        if a2 == b2:
            continue
        key = (min(a2, b2), max(a2, b2))
        fw, bw = (f, r) if a2 < b2 else (r, f)
        old = merged.get(key, (0, 0))
        merged[key] = (old[0] + Fraction(fw), old[1] + Fraction(bw))
    small = [(a, b, f, r) for (a, b), (f, r) in merged.items()]
    if n - 1 == 1:
        return Fraction(1)
    return poly(n - 1, small, relabel[u])


def stationary(n, pairs):
    """Kernel of the rate matrix by Fraction Gauss-Jordan elimination."""
    q = [[Fraction(0)] * n for _ in range(n)]
    for _, _, s, t, r in oriented(pairs):
        q[s][t] += r
        q[s][s] -= r
    # Solve p Q = 0, sum p = 1: rows of Q^T plus a normalization row.
    a = [[q[j][i] for j in range(n)] for i in range(n)]
    a[-1] = [Fraction(1)] * n
    b = [Fraction(0)] * (n - 1) + [Fraction(1)]
    m = [row + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next(r for r in range(col, n) if m[r][col] != 0)
        m[col], m[piv] = m[piv], m[col]
        pv = m[col][col]
        m[col] = [x / pv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[i][n] for i in range(n)]


def currents(n, pairs):
    p = stationary(n, pairs)
    return [Fraction(f) * p[u] - Fraction(b) * p[v] for u, v, f, b in pairs]


# -- frozen corpus -----------------------------------------------------------------------

KITE = [(0, 1, 1, 1), (0, 2, 1, 1), (2, 3, 1, 1), (3, 1, 1, 1), (3, 0, 1, 1)]  # b=0 a=1 c=2 d=3
TRIANGLE = [(0, 1, 1, 1), (1, 2, 1, 1), (2, 0, 1, 1)]
BIASED = [(0, 1, 3, 1), (1, 2, 3, 1), (2, 0, 3, 1)]
SMALL = [
    (4, [(0, 1, "2/3", 5), (1, 2, 1, "7/2"), (2, 3, 4, "1/5"), (3, 0, "3/4", 2), (0, 2, 6, "5/3")]),
    (5, [(0, 1, 3, 2), (1, 2, "1/2", 1), (2, 3, 2, 5), (3, 4, "9/4", "2/7"), (4, 0, 1, 3), (1, 3, "4/3", "1/6"),
         (0, 2, 5, 1)]),
    (5, [(0, 1, 1, 2), (0, 2, 3, 1), (0, 3, 2, 2), (0, 4, "1/3", 4), (1, 2, 5, "2/5"), (3, 4, 7, 1)]),
]


def _s(x):
    return str(x)


def build():
    """All frozen reference values, as strings."""
    data = {"kite": {}, "triangle": {}, "biased_cycle": {}, "small": []}
    kite = data["kite"]
    kite["tree_counts"] = [len(trees(4, KITE, r)) for r in range(4)]
    kite["vectors"] = {r: [_s(tree_vector(4, KITE, r, [0]).get(s, 0)) for s in ((0,), (1,), (2,))]
                       for r in range(4)}
    # Trees that use c -> b, which is the backward orientation of pair 1.
    kite["vectors_require_cb"] = {}
    for r in range(4):
        vals = []
        for s in (0, 1, 2):
            tot = Fraction(0)
            for t in trees(4, KITE, r):
                keys = {(e[0], e[1]) for e in t}
                if (1, -1) in keys and status_of(t, [0]) == (s,):
                    tot += weight(t)
            vals.append(_s(tot))
        kite["vectors_require_cb"][r] = vals
    kite["contracted_pair0"] = _s(contracted(4, KITE, 0))
    kite["root_a_avoid_pair0"] = _s(poly(4, KITE, 1, avoid=[(0, 1), (0, -1)]))
    kite["root_b_require_ab"] = _s(poly(4, KITE, 0, avoid=[(0, 1)], require=[(0, -1)]))
    data["triangle"]["contracted_pair0"] = _s(contracted(3, TRIANGLE, 0))
    data["triangle"]["tree_counts"] = [len(trees(3, TRIANGLE, r)) for r in range(3)]
    data["biased_cycle"]["stationary"] = [_s(x) for x in stationary(3, BIASED)]
    data["biased_cycle"]["currents"] = [_s(x) for x in currents(3, BIASED)]
    for n, pairs in SMALL:
        entry = {"n": n, "pairs": [[u, v, _s(f), _s(b)] for u, v, f, b in pairs]}
        entry["tau"] = [_s(poly(n, pairs, r)) for r in range(n)]
        pinned = [0, 2]
        entry["pinned"] = pinned
        entry["vectors"] = []
        for r in range(n):
            tv = tree_vector(n, pairs, r, pinned)
            entry["vectors"].append({f"{a}{b}": _s(tv.get((a, b), 0)) for a in range(3) for b in range(3)})
        entry["contracted"] = [_s(contracted(n, pairs, k)) for k in range(len(pairs))]
        entry["stationary"] = [_s(x) for x in stationary(n, pairs)]
        entry["currents"] = [_s(x) for x in currents(n, pairs)]
        data["small"].append(entry)
    return data


def load_frozen():
    return json.loads(FROZEN.read_text())


if __name__ == "__main__":
    FROZEN.parent.mkdir(exist_ok=True)
    FROZEN.write_text(json.dumps(build(), indent=1) + "\n")
    sys.stdout.write(f"wrote {FROZEN}\n")
