"""Pure-Python kernels.

These are the reference versions of the loops in ``_kernels.pyx``; the
compiled module must produce identical results.  Graphs reach the kernels
as a CSR table of out-edges: vertex ``u`` owns edge slots
``starts[u] .. starts[u + 1] - 1`` and slot ``i`` points at ``targets[i]``.
"""

from math import log1p

import numpy as np

BACKEND = "python"
CHUNK = 65536


def iter_choices(n, root, starts, targets):
    """Yield every rooted spanning tree as a list ``choice[v] = slot``.

    Non-root vertices are assigned in increasing index order and slots are
    tried in increasing order, which fixes the enumeration order.  The root
    entry is ``-1``.
    """
    order = [v for v in range(n) if v != root]
    m = len(order)
    choice = [-1] * n
    if m == 0:
        yield list(choice)
        return
    assigned = [False] * n
    ptr = [0] * m
    level = 0
    ptr[0] = starts[order[0]]
    while level >= 0:
        u = order[level]
        assigned[u] = False
        end = starts[u + 1]
        found = False
        while ptr[level] < end:
            idx = ptr[level]
            ptr[level] += 1
            w = targets[idx]
            while w != u and w != root and assigned[w]:
                w = targets[choice[w]]
            if w == u:
                continue
            choice[u] = idx
            assigned[u] = True
            found = True
            break
        if not found:
            choice[u] = -1
            level -= 1
            continue
        if level == m - 1:
            yield list(choice)
            continue
        level += 1
        ptr[level] = starts[order[level]]


def tree_sums(n, root, starts, targets, weights, codes, nbuckets, want_marginals):
    """Weighted tree sums bucketed by an additive edge code.

    Every tree contributes the product of its slot weights to bucket
    ``sum(codes[slot])``.  With ``want_marginals`` the per-slot totals over
    trees containing that slot are returned as well.  Weights may be ints,
    floats or Fractions; they are only multiplied and added.
    """
    buckets = [0] * nbuckets
    marg = [0] * len(targets) if want_marginals else None
    order = [v for v in range(n) if v != root]
    m = len(order)
    if m == 0:
        buckets[0] = 1
        return buckets, marg
    choice = [-1] * n
    assigned = [False] * n
    ptr = [0] * m
    prod = [1] * (m + 1)
    code = [0] * (m + 1)
    level = 0
    ptr[0] = starts[order[0]]
    last = m - 1
    while level >= 0:
        u = order[level]
        assigned[u] = False
        end = starts[u + 1]
        found = False
        while ptr[level] < end:
            idx = ptr[level]
            ptr[level] += 1
            w = targets[idx]
            while w != u and w != root and assigned[w]:
                w = targets[choice[w]]
            if w == u:
                continue
            choice[u] = idx
            assigned[u] = True
            found = True
            break
        if not found:
            level -= 1
            continue
        p = prod[level] * weights[idx]
        c = code[level] + codes[idx]
        if level == last:
            buckets[c] += p
            if marg is not None:
                for v in order:
                    marg[choice[v]] += p
            continue
        prod[level + 1] = p
        code[level + 1] = c
        level += 1
        ptr[level] = starts[order[level]]
    return buckets, marg


def gillespie(starts, targets, rates, pair_of, sign_of, exit_rates, n_pairs,
              state, t_end, burn_in, n_batches, rng, chunk=CHUNK):
    """Exact-jump trajectory with statistics gathered on ``[burn_in, t_end)``.

    Two uniforms are drawn per jump (waiting time, then edge choice), in
    chunks of ``chunk`` from ``rng.random``.  Returns occupation times,
    signed crossings per pair, their per-batch splits and the jump count.
    """
    n = len(exit_rates)
    occ = [0.0] * n
    cross = [0] * n_pairs
    b_occ = [[0.0] * n for _ in range(n_batches)]
    b_cross = [[0] * n_pairs for _ in range(n_batches)]
    blen = (t_end - burn_in) / n_batches
    buf = rng.random(chunk)
    pos = 0
    t = 0.0
    jumps = 0
    last_batch = n_batches - 1
    while True:
        if pos + 2 > chunk:
            buf = rng.random(chunk)
            pos = 0
        u1 = buf[pos]
        u2 = buf[pos + 1]
        pos += 2
        total = exit_rates[state]
        t_next = t - log1p(-u1) / total
        a = t if t > burn_in else burn_in
        b = t_next if t_next < t_end else t_end
        if b > a:
            occ[state] += b - a
            k = int((a - burn_in) / blen)
            if k > last_batch:
                k = last_batch
            while a < b:
                edge = burn_in + (k + 1) * blen
                seg = b if (b < edge or k == last_batch) else edge
                b_occ[k][state] += seg - a
                a = seg
                k += 1
        if t_next >= t_end:
            break
        target = u2 * total
        i = starts[state]
        stop = starts[state + 1] - 1
        acc = rates[i]
        while acc <= target and i < stop:
            i += 1
            acc += rates[i]
        jumps += 1
        if t_next >= burn_in:
            k = int((t_next - burn_in) / blen)
            if k > last_batch:
                k = last_batch
            p = pair_of[i]
            s = sign_of[i]
            cross[p] += s
            b_cross[k][p] += s
        state = targets[i]
        t = t_next
    return (np.array(occ), np.array(cross, dtype=np.int64), np.array(b_occ),
            np.array(b_cross, dtype=np.int64), jumps)


def surgery_batch(sources, targets, trees_x, trees_y, x, y):
    """Surgery on every pair ``(trees_x[i], trees_y[j])``, on slot arrays.

    A tree is a row ``out[v] = slot`` over a table holding every oriented
    edge once (``sources[slot] -> targets[slot]``), with ``-1`` at the
    root.  Row ``i * len(trees_y) + j`` of the outputs holds the tree
    rooted at ``y`` and the tree rooted at ``x``.  ``flags`` is 1 where
    some step moved an edge onto the opposite root, and ``steps`` counts
    the exchanges.
    """
    trees_x = np.asarray(trees_x)
    trees_y = np.asarray(trees_y)
    m1, n = trees_x.shape
    m2 = trees_y.shape[0]
    out_y = np.empty((m1 * m2, n), dtype=np.intc)
    out_x = np.empty((m1 * m2, n), dtype=np.intc)
    flags = np.zeros(m1 * m2, dtype=np.int8)
    steps = np.zeros(m1 * m2, dtype=np.intc)
    for i in range(m1):
        for j in range(m2):
            row = i * m2 + j
            a, b, bad, count = _surgery_slots(sources, targets, trees_x[i].tolist(), trees_y[j].tolist(), x, y)
            out_y[row] = a
            out_x[row] = b
            flags[row] = bad
            steps[row] = count
    return out_y, out_x, flags, steps


def _surgery_slots(sources, targets, mo, fx, x, y):
    n = len(mo)
    z = y
    to_x = mo[y]      # branch edge that leads to x
    to_y = -1         # branch edge that leads to y (none at the start)
    mo = list(mo)
    fx = list(fx)
    bad = 0
    count = 0
    term = [0] * n
    while z != x:
        if count > n + 1 or to_x < 0:
            raise RuntimeError("surgery did not reach the target root")
        e = to_x
        mo[z] = to_y
        # Basin of x in the moving forest once e is gone.
        for v in range(n):
            w = v
            hops = 0
            while mo[w] >= 0 and w != x and hops <= n:
                w = targets[mo[w]]
                hops += 1
            term[v] = 1 if w == x else 0
        # Last basin-crossing edge on the path target(e) -> z in the fixed tree.
        f = -1
        v = targets[e]
        while v != z:
            d = fx[v]
            if d < 0:
                raise RuntimeError("fixed tree does not reach its root")
            if term[sources[d]] != term[targets[d]]:
                f = d
            v = targets[d]
        if f < 0:
            raise RuntimeError("no basin-crossing edge on the closed cycle")
        if targets[e] == y or targets[f] == x:
            bad = 1
        s = sources[f]
        fx[z] = e
        fx[s] = -1
        if term[s]:
            to_x, to_y = mo[s], f
        else:
            to_x, to_y = f, mo[s]
        mo[s] = -2  # placeholder; the branch keeps its edges in to_x / to_y
        z = s
        count += 1
    mo[x] = to_y
    mo[y] = -1
    return mo, fx, bad, count
