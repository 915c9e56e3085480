# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contracts as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log1p

cnp.import_array()

BACKEND = "cython"
CHUNK = 65536


def iter_choices(int n, int root, starts, targets):
    cdef int[::1] st = np.asarray(starts, dtype=np.intc)
    cdef int[::1] tg = np.asarray(targets, dtype=np.intc)
    cdef int[::1] order = np.array([v for v in range(n) if v != root], dtype=np.intc)
    cdef int m = order.shape[0]
    cdef int[::1] choice = np.full(n, -1, dtype=np.intc)
    cdef char[::1] assigned = np.zeros(n, dtype=np.int8)
    cdef int[::1] ptr = np.zeros(max(m, 1), dtype=np.intc)
    cdef int level, u, end, idx, w
    cdef bint found
    if m == 0:
        yield [-1] * n
        return
    level = 0
    ptr[0] = st[order[0]]
    while level >= 0:
        u = order[level]
        assigned[u] = 0
        end = st[u + 1]
        found = False
        while ptr[level] < end:
            idx = ptr[level]
            ptr[level] += 1
            w = tg[idx]
            while w != u and w != root and assigned[w]:
                w = tg[choice[w]]
            if w == u:
                continue
            choice[u] = idx
            assigned[u] = 1
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
        ptr[level] = st[order[level]]


def tree_sums(int n, int root, starts, targets, weights, codes, int nbuckets, bint want_marginals):
    cdef int[::1] st = np.asarray(starts, dtype=np.intc)
    cdef int[::1] tg = np.asarray(targets, dtype=np.intc)
    cdef int[::1] cd = np.asarray(codes, dtype=np.intc)
    cdef list wt = list(weights)
    cdef list buckets = [0] * nbuckets
    cdef list marg = [0] * len(wt) if want_marginals else None
    cdef int[::1] order = np.array([v for v in range(n) if v != root], dtype=np.intc)
    cdef int m = order.shape[0]
    if m == 0:
        buckets[0] = 1
        return buckets, marg
    cdef int[::1] choice = np.full(n, -1, dtype=np.intc)
    cdef char[::1] assigned = np.zeros(n, dtype=np.int8)
    cdef int[::1] ptr = np.zeros(m, dtype=np.intc)
    cdef int[::1] code = np.zeros(m + 1, dtype=np.intc)
    cdef list prod = [1] * (m + 1)
    cdef int level = 0, last = m - 1, u, end, idx = 0, w, c, j
    cdef bint found
    cdef object p
    ptr[0] = st[order[0]]
    while level >= 0:
        u = order[level]
        assigned[u] = 0
        end = st[u + 1]
        found = False
        while ptr[level] < end:
            idx = ptr[level]
            ptr[level] += 1
            w = tg[idx]
            while w != u and w != root and assigned[w]:
                w = tg[choice[w]]
            if w == u:
                continue
            choice[u] = idx
            assigned[u] = 1
            found = True
            break
        if not found:
            level -= 1
            continue
        p = prod[level] * wt[idx]
        c = code[level] + cd[idx]
        if level == last:
            buckets[c] = buckets[c] + p
            if want_marginals:
                for j in range(m):
                    w = choice[order[j]]
                    marg[w] = marg[w] + p
            continue
        prod[level + 1] = p
        code[level + 1] = c
        level += 1
        ptr[level] = st[order[level]]
    return buckets, marg


def gillespie(starts, targets, rates, pair_of, sign_of, exit_rates, int n_pairs,
              int state, double t_end, double burn_in, int n_batches, rng, int chunk=CHUNK):
    cdef int[::1] st = np.asarray(starts, dtype=np.intc)
    cdef int[::1] tg = np.asarray(targets, dtype=np.intc)
    cdef double[::1] rt = np.asarray(rates, dtype=np.float64)
    cdef int[::1] po = np.asarray(pair_of, dtype=np.intc)
    cdef int[::1] so = np.asarray(sign_of, dtype=np.intc)
    cdef double[::1] ex = np.asarray(exit_rates, dtype=np.float64)
    cdef Py_ssize_t n = ex.shape[0]
    occ_arr = np.zeros(n)
    cross_arr = np.zeros(n_pairs, dtype=np.int64)
    b_occ_arr = np.zeros((n_batches, n))
    b_cross_arr = np.zeros((n_batches, n_pairs), dtype=np.int64)
    cdef double[::1] occ = occ_arr
    cdef long long[::1] cross = cross_arr
    cdef double[:, ::1] b_occ = b_occ_arr
    cdef long long[:, ::1] b_cross = b_cross_arr
    cdef double blen = (t_end - burn_in) / n_batches
    cdef double[::1] buf = rng.random(chunk)
    cdef int pos = 0, k, i, stop, p, s, last_batch = n_batches - 1
    cdef long long jumps = 0
    cdef double t = 0.0, t_next, u1, u2, total, a, b, edge, seg, target, acc
    while True:
        if pos + 2 > chunk:
            buf = rng.random(chunk)
            pos = 0
        u1 = buf[pos]
        u2 = buf[pos + 1]
        pos += 2
        total = ex[state]
        t_next = t - log1p(-u1) / total
        a = t if t > burn_in else burn_in
        b = t_next if t_next < t_end else t_end
        if b > a:
            occ[state] += b - a
            k = <int>((a - burn_in) / blen)
            if k > last_batch:
                k = last_batch
            while a < b:
                edge = burn_in + (k + 1) * blen
                seg = b if (b < edge or k == last_batch) else edge
                b_occ[k, state] += seg - a
                a = seg
                k += 1
        if t_next >= t_end:
            break
        target = u2 * total
        i = st[state]
        stop = st[state + 1] - 1
        acc = rt[i]
        while acc <= target and i < stop:
            i += 1
            acc += rt[i]
        jumps += 1
        if t_next >= burn_in:
            k = <int>((t_next - burn_in) / blen)
            if k > last_batch:
                k = last_batch
            p = po[i]
            s = so[i]
            cross[p] += s
            b_cross[k, p] += s
        state = tg[i]
        t = t_next
    return occ_arr, cross_arr, b_occ_arr, b_cross_arr, int(jumps)


def surgery_batch(sources, targets, trees_x, trees_y, int x, int y):
    cdef int[::1] src = np.asarray(sources, dtype=np.intc)
    cdef int[::1] tg = np.asarray(targets, dtype=np.intc)
    cdef int[:, ::1] tx = np.ascontiguousarray(trees_x, dtype=np.intc)
    cdef int[:, ::1] ty = np.ascontiguousarray(trees_y, dtype=np.intc)
    cdef Py_ssize_t m1 = tx.shape[0], m2 = ty.shape[0], n = tx.shape[1]
    out_y_arr = np.empty((m1 * m2, n), dtype=np.intc)
    out_x_arr = np.empty((m1 * m2, n), dtype=np.intc)
    flags_arr = np.zeros(m1 * m2, dtype=np.int8)
    steps_arr = np.zeros(m1 * m2, dtype=np.intc)
    cdef int[:, ::1] out_y = out_y_arr
    cdef int[:, ::1] out_x = out_x_arr
    cdef signed char[::1] flags = flags_arr
    cdef int[::1] steps = steps_arr
    cdef int[::1] mo = np.empty(n, dtype=np.intc)
    cdef int[::1] fx = np.empty(n, dtype=np.intc)
    cdef char[::1] term = np.zeros(n, dtype=np.int8)
    cdef Py_ssize_t i, j, row, v
    cdef int z, to_x, to_y, e, f, d, s, w, hops, count
    cdef signed char bad
    for i in range(m1):
        for j in range(m2):
            row = i * m2 + j
            for v in range(n):
                mo[v] = tx[i, v]
                fx[v] = ty[j, v]
            z = y
            to_x = mo[y]
            to_y = -1
            bad = 0
            count = 0
            while z != x:
                if count > n + 1 or to_x < 0:
                    raise RuntimeError("surgery did not reach the target root")
                e = to_x
                mo[z] = to_y
                for v in range(n):
                    w = <int>v
                    hops = 0
                    while mo[w] >= 0 and w != x and hops <= n:
                        w = tg[mo[w]]
                        hops += 1
                    term[v] = 1 if w == x else 0
                f = -1
                w = tg[e]
                while w != z:
                    d = fx[w]
                    if d < 0:
                        raise RuntimeError("fixed tree does not reach its root")
                    if term[src[d]] != term[tg[d]]:
                        f = d
                    w = tg[d]
                if f < 0:
                    raise RuntimeError("no basin-crossing edge on the closed cycle")
                if tg[e] == y or tg[f] == x:
                    bad = 1
                s = src[f]
                fx[z] = e
                fx[s] = -1
                if term[s]:
                    to_x = mo[s]
                    to_y = f
                else:
                    to_x = f
                    to_y = mo[s]
                mo[s] = -2
                z = s
                count += 1
            mo[x] = to_y
            mo[y] = -1
            for v in range(n):
                out_y[row, v] = mo[v]
                out_x[row, v] = fx[v]
            flags[row] = bad
            steps[row] = count
    return out_y_arr, out_x_arr, flags_arr, steps_arr
