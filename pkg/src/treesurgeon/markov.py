"""Stationary distributions, currents and mutual-linearity coefficients.

The stationary probability of a vertex is proportional to its rooted
tree polynomial.  Currents are then ratios of polynomials in the rates of
any pinned pair; because no tree uses both orientations of a pair, those
polynomials are affine in each pinned rate separately and carry no
product of the two orientations.  Collecting coefficients turns the
linearity of every current in one (or two) input currents into a small
linear system whose solvability follows from the rank of the tree
vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .coplanarity import RankCertificate, _require_non_bridge, sigma_vector
from .errors import IdentityViolation, RankDeficient
from .graph import MINUS, PLUS, WeightedDigraph
from .linalg import FLOAT_RTOL, det, dot, rank_exact, rank_float, solve
from .polynomials import (
    AVOIDED,
    BACKWARD,
    FORWARD,
    check_pinned,
    decompose_all,
    status_order,
    tree_poly,
    values_agree,
)


# -- stationary state ----------------------------------------------------------------------


@dataclass(frozen=True)
class StationaryDistribution:
    probabilities: tuple
    backend: str
    cross_checked: bool

    def __getitem__(self, v):
        return self.probabilities[v]

    def __len__(self):
        return len(self.probabilities)

    def __iter__(self):
        return iter(self.probabilities)


@dataclass(frozen=True)
class CurrentVector:
    """Stationary current of every pair, along its forward orientation."""

    values: tuple
    errors: tuple | None = None

    def __getitem__(self, pair):
        return self.values[pair]

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


def generator_matrix(g: WeightedDigraph) -> list[list]:
    """Rate matrix: off-diagonal ``[x][y]`` is the rate of ``x -> y``; rows sum to zero."""
    q = [[g.zero() for _ in range(g.n)] for _ in range(g.n)]
    for e in g.edges():
        r = g.rate(e)
        q[e.source][e.target] += r
        q[e.source][e.source] -= r
    return q


def generator_kernel(g: WeightedDigraph) -> list:
    """Normalized left null vector of the rate matrix, by a direct linear solve."""
    q = generator_matrix(g)
    n = g.n
    a = [[q[j][i] for j in range(n)] for i in range(n)]
    a[-1] = [g.one()] * n
    b = [g.zero()] * n
    b[-1] = g.one()
    return solve(a, b)


def _tree_weights(g: WeightedDigraph, backend: str) -> tuple[list, str]:
    values = [tree_poly(g, x, backend=backend) for x in range(g.n)]
    return [v.value for v in values], values[0].backend


def stationary(g: WeightedDigraph, backend: str = "auto", cross_check: bool = True) -> StationaryDistribution:
    """Stationary probabilities from rooted tree polynomials.

    With ``cross_check`` the result is compared with the kernel of the
    rate matrix (exact equality for exact graphs) and
    :class:`IdentityViolation` is raised on a mismatch.
    """
    weights, backend = _tree_weights(g, backend)
    total = sum(weights[1:], weights[0])
    p = tuple(w / total for w in weights)
    if cross_check:
        other = generator_kernel(g)
        if not all(values_agree(a, b) for a, b in zip(p, other)):
            raise IdentityViolation(f"tree weights give {p}, the rate-matrix kernel gives {tuple(other)}")
    return StationaryDistribution(p, backend, cross_check)


def currents(g: WeightedDigraph, p: Sequence | None = None, backend: str = "auto") -> CurrentVector:
    """``j = r(+e) p[s(+e)] - r(-e) p[s(-e)]`` for every pair ``e``."""
    if p is None:
        p = stationary(g, backend).probabilities
    out = []
    for k in range(g.pair_count):
        u, v = g.ends(k)
        fwd, bwd = g.rates(k)
        out.append(fwd * p[u] - bwd * p[v])
    return CurrentVector(tuple(out))


def currents_direct(g: WeightedDigraph) -> CurrentVector:
    """Currents from the rate-matrix kernel, without any tree polynomial."""
    return currents(g, generator_kernel(g))


def vertex_balance(g: WeightedDigraph, j: Sequence) -> list:
    """Net current out of every vertex; all zero in a stationary state."""
    net = [g.zero() for _ in range(g.n)]
    for k in range(g.pair_count):
        u, v = g.ends(k)
        net[u] += j[k]
        net[v] -= j[k]
    return net


# -- detailed balance -------------------------------------------------------------------


def fundamental_cycles(g: WeightedDigraph) -> list[list[tuple[int, int]]]:
    """One cycle per non-tree pair of a BFS spanning tree.

    Each cycle is a list of ``(pair, sign)`` steps traversed in order.
    """
    parent = {0: None}
    order = [0]
    adj = [[] for _ in range(g.n)]
    for k in range(g.pair_count):
        u, v = g.ends(k)
        adj[u].append((k, PLUS, v))
        adj[v].append((k, MINUS, u))
    tree_pairs = set()
    i = 0
    while i < len(order):
        u = order[i]
        i += 1
        for k, sign, w in adj[u]:
            if w not in parent:
                parent[w] = (k, sign, u)
                tree_pairs.add(k)
                order.append(w)

    def path_to_root(v):
        steps = []
        while parent[v] is not None:
            k, sign, u = parent[v]
            steps.append((k, -sign, v))  # step v -> u
            v = u
        return steps

    cycles = []
    for k in range(g.pair_count):
        if k in tree_pairs:
            continue
        u, v = g.ends(k)
        up_v = path_to_root(v)
        up_u = path_to_root(u)
        # u -> v along the pair, v up to the root, root down to u.
        cyc = [(k, PLUS)] + [(p, s) for p, s, _ in up_v] + [(p, -s) for p, s, _ in reversed(up_u)]
        cycles.append(_cancel_backtracks(cyc))
    return cycles


def _cancel_backtracks(steps):
    out = []
    for p, s in steps:
        if out and out[-1] == (p, -s):
            out.pop()
        else:
            out.append((p, s))
    while len(out) > 1 and out[0] == (out[-1][0], -out[-1][1]):
        out = out[1:-1]
    return out


def cycle_affinity_ratio(g: WeightedDigraph, cycle) -> object:
    """Product of rates around ``cycle`` over the product against it."""
    num, den = g.one(), g.one()
    for k, sign in cycle:
        num *= g.rate(g.edge(k, sign))
        den *= g.rate(g.edge(k, -sign))
    if den == 0:
        return math.inf
    return num / den


def is_detailed_balanced(g: WeightedDigraph) -> bool:
    """Kolmogorov criterion on a fundamental cycle basis."""
    for k in range(g.pair_count):
        fwd, bwd = g.rates(k)
        if (fwd == 0) != (bwd == 0):
            return False
    return all(values_agree(cycle_affinity_ratio(g, c), g.one()) for c in fundamental_cycles(g))


# -- coefficient vectors over the pinned rates -------------------------------------------------


def _rescaled_vectors(g: WeightedDigraph, pinned: tuple, backend: str) -> list[list]:
    """Per-root tree vectors divided by the pinned rates each status uses.

    Entry ``s`` of root ``x`` becomes the coefficient of the monomial of
    pinned rates selected by ``s`` in the tree polynomial of ``x``; none of
    these coefficients depends on a pinned rate.
    """
    order = status_order(len(pinned))
    out = []
    for vec in decompose_all(g, pinned, backend=backend):
        row = []
        for status, value in zip(order, vec.entries):
            for k, c in zip(pinned, status):
                if c:
                    value = value / g.rates(k)[0 if c == FORWARD else 1]
            row.append(value)
        out.append(row)
    return out


def _shift(status, j, c):
    """Multiply the monomial of ``status`` by the rate of orientation ``c`` of pinned pair ``j``."""
    if status[j] == AVOIDED:
        return status[:j] + (c,) + status[j + 1:]
    return None  # would create a square or a product of both orientations


def linear_forms(g: WeightedDigraph, pinned: Sequence[int], backend: str = "auto") -> tuple[list, dict]:
    """Coefficient vectors of the current numerators and their common denominator.

    Returns ``(w0, {pair: w_pair})`` with vectors indexed by
    :func:`status_order`.  ``j_e = (w_e . m) / (w0 . m)`` where ``m`` holds
    the monomials of the pinned rates.  For a pinned pair the products of
    its two orientations are collected and must cancel exactly;
    :class:`IdentityViolation` is raised otherwise.
    """
    pinned = check_pinned(g, pinned)
    order = status_order(len(pinned))
    index = {s: i for i, s in enumerate(order)}
    rows = _rescaled_vectors(g, pinned, backend)
    zero = g.zero()
    w0 = [sum((row[i] for row in rows), zero) for i in range(len(order))]
    place = {k: j for j, k in enumerate(pinned)}
    forms = {}
    for e in range(g.pair_count):
        u, v = g.ends(e)
        fwd, bwd = g.rates(e)
        if e not in place:
            forms[e] = [fwd * a - bwd * b for a, b in zip(rows[u], rows[v])]
            continue
        j = place[e]
        vec = [zero] * len(order)
        leftover = {}
        scale = 0.0
        for sign, root, coef in ((FORWARD, u, 1), (BACKWARD, v, -1)):
            for s, value in zip(order, rows[root]):
                if value == 0:
                    continue
                scale = max(scale, abs(float(value)))
                t = _shift(s, j, sign)
                if t is None:
                    # r(+e) times a term through -e meets r(-e) times a term through +e.
                    canon = s[:j] + (AVOIDED,) + s[j + 1:]
                    leftover[canon] = leftover.get(canon, zero) + coef * value
                else:
                    vec[index[t]] += coef * value
        tol = 0 if g.exact else FLOAT_RTOL * scale
        if any(abs(x) > tol for x in leftover.values()):
            raise IdentityViolation(f"products of both orientations of pair {g.pair_label(e)} do not cancel")
        forms[e] = vec
    return w0, forms


# -- one input pair ----------------------------------------------------------------------------


@dataclass
class ZVectors:
    """Coefficients of the current numerators/denominator in ``(1, r(+1), r(-1))``."""

    input_pair: int
    z0: tuple
    z1: tuple
    ze: dict

    def current(self, pair: int, fwd, bwd):
        z = self.ze[pair]
        num = z[0] + z[1] * fwd + z[2] * bwd
        den = self.z0[0] + self.z0[1] * fwd + self.z0[2] * bwd
        return num / den


def z_vectors(g: WeightedDigraph, pair: int, backend: str = "auto") -> ZVectors:
    """Explicit coefficient formulas for one input pair.

    With ``T0`` the trees avoiding the pair and ``D+``/``D-`` the trees
    through one orientation divided by its rate::

        z0 = (sum T0, sum D+, sum D-)
        z1 = (0, T0[s(+1)], -T0[s(-1)])
        ze = r(+e) * v[s(+e)] - r(-e) * v[s(-e)],  v = (T0, D+, D-)
    """
    check_pinned(g, [pair])
    _require_non_bridge(g, [pair])
    rows = _rescaled_vectors(g, (pair,), backend)
    zero = g.zero()
    z0 = tuple(sum((row[i] for row in rows), zero) for i in range(3))
    u, v = g.ends(pair)
    z1 = (zero, rows[u][0], -rows[v][0])
    ze = {}
    for e in range(g.pair_count):
        if e == pair:
            ze[e] = z1
            continue
        a, b = g.ends(e)
        fwd, bwd = g.rates(e)
        ze[e] = tuple(fwd * x - bwd * y for x, y in zip(rows[a], rows[b]))
    return ZVectors(pair, z0, z1, ze)


@dataclass
class LinearityCoefficients:
    """Affine coefficients of every current in the input current(s)."""

    input_pairs: tuple
    coefficients: dict
    arithmetic: str
    determinants: dict = field(default_factory=dict)
    left_null: tuple | None = None
    certificate: RankCertificate | None = None
    subsystem_rows: tuple | None = None

    def predict(self, pair: int, inputs: Sequence):
        c = self.coefficients[pair]
        return c[0] + sum(ci * x for ci, x in zip(c[1:], inputs))

    def to_dict(self, g: WeightedDigraph) -> dict:
        names = ("lambda" if len(self.input_pairs) == 1 else "mu")
        out = {
            "input_pairs": [g.pair_label(k) for k in self.input_pairs],
            "arithmetic": self.arithmetic,
            "coefficients": [
                {"pair": g.pair_label(k), **{f"{names}{i}": str(c) for i, c in enumerate(cs)}}
                for k, cs in self.coefficients.items()
            ],
        }
        if self.determinants:
            out["determinants"] = {g.pair_label(k): str(v) for k, v in self.determinants.items()}
        if self.left_null is not None:
            out["left_null"] = [str(x) for x in self.left_null]
        if self.subsystem_rows is not None:
            out["subsystem_rows"] = list(self.subsystem_rows)
        return out


def lambda_coefficients(g: WeightedDigraph, pair: int, backend: str = "auto",
                        check: bool = True) -> LinearityCoefficients:
    """``j_e = lambda0_e + lambda1_e * j_input`` for every pair ``e``.

    Solves the upper 2x2 block of the coefficient system.  With ``check``
    the determinant ``det(z0, z1, ze)`` must vanish for every ``e`` and the
    rescaled sigma-vector must be a left null vector of all of them;
    :class:`IdentityViolation` is raised otherwise.
    """
    z = z_vectors(g, pair, backend)
    z0, z1 = z.z0, z.z1
    denom = z0[0] * z1[1]
    coefs, dets = {}, {}
    sig = sigma_vector(g, pair, backend=backend)
    fwd, bwd = g.rates(pair)
    # Sigma in the rescaled coordinates (T0, D+, D-), divided by r(+1) r(-1).
    nu = (sig.empty / (fwd * bwd), sig.minus / bwd, sig.plus / fwd)
    for e, ze in z.ze.items():
        coefs[e] = (z1[1] * ze[0] / denom, (z0[0] * ze[1] - z0[1] * ze[0]) / denom)
        dets[e] = det([[z0[i], z1[i], ze[i]] for i in range(3)])
    if check:
        exact = g.exact
        for e, ze in z.ze.items():
            for vec in (z0, z1, ze):
                r = dot(nu, vec)
                scale = max(abs(float(x)) for x in vec) * max(abs(float(x)) for x in nu) or 1.0
                if (r != 0) if exact else abs(r) > 1e-9 * scale:
                    raise IdentityViolation(f"sigma is not a left null vector for pair {g.pair_label(e)}")
            d = dets[e]
            scale = max(abs(float(x)) for x in z0 + z1 + ze) ** 3 or 1.0
            if (d != 0) if exact else abs(d) > 1e-9 * scale:
                raise IdentityViolation(f"det(z0, z1, ze) = {d} for pair {g.pair_label(e)}")
    return LinearityCoefficients((pair,), coefs, "exact" if g.exact else "float", dets, nu)


def _with_pair_rates(g: WeightedDigraph, settings: dict) -> WeightedDigraph:
    updates = {}
    for k, (fwd, bwd) in settings.items():
        updates[g.edge(k, PLUS)] = fwd
        updates[g.edge(k, MINUS)] = bwd
    return g.with_rates(updates, check_irreducible=True)


def _residuals(values, exact):
    if exact:
        return max((abs(x) for x in values), default=Fraction(0)), sum(map(abs, values), Fraction(0)) / max(len(values), 1)
    values = [abs(float(x)) for x in values]
    return max(values, default=0.0), (sum(values) / len(values) if values else 0.0)


def verify_linearity(g: WeightedDigraph, pair: int, samples: Iterable[tuple],
                     coefficients: LinearityCoefficients | None = None, backend: str = "auto") -> dict:
    """Recompute currents from scratch at each input-rate sample and test the affine law.

    Currents come from the rate-matrix kernel, not from tree polynomials.
    Residuals are absolute in exact mode and relative to the largest
    current magnitude in float mode.
    """
    if coefficients is None:
        coefficients = lambda_coefficients(g, pair, backend)
    res = []
    for fwd, bwd in samples:
        h = _with_pair_rates(g, {pair: (fwd, bwd)})
        j = currents_direct(h)
        scale = 1 if h.exact else max(max(abs(float(x)) for x in j), 1e-300)
        for e in range(g.pair_count):
            r = j[e] - coefficients.predict(e, [j[pair]])
            res.append(r if h.exact else abs(float(r)) / scale)
    worst, mean = _residuals(res, g.exact)
    ok = worst == 0 if g.exact else worst < FLOAT_RTOL
    return {"max_residual": worst, "mean_residual": mean, "samples": len(res) // max(g.pair_count, 1), "ok": ok}


def quadratic_term_check(g: WeightedDigraph, pair: int, points: Sequence, backend: str = "auto") -> list:
    """Mixed second differences in ``(r(+1), r(-1))`` of every current numerator and the denominator.

    ``points`` holds ``(a, a2, b, b2)`` tuples; for each, the difference
    ``F(a,b) - F(a2,b) - F(a,b2) + F(a2,b2)`` is returned for the
    denominator followed by every pair's numerator.  All vanish when
    nothing depends on the product of the two rates.
    """
    def parts(fwd, bwd):
        h = _with_pair_rates(g, {pair: (fwd, bwd)})
        w, _ = _tree_weights(h, backend)
        nums = []
        for e in range(h.pair_count):
            u, v = h.ends(e)
            rf, rb = h.rates(e)
            nums.append(rf * w[u] - rb * w[v])
        return [sum(w[1:], w[0])] + nums

    out = []
    for a, a2, b, b2 in points:
        f = [parts(a, b), parts(a2, b), parts(a, b2), parts(a2, b2)]
        out.append([f[0][i] - f[1][i] - f[2][i] + f[3][i] for i in range(len(f[0]))])
    return out


# -- two input pairs --------------------------------------------------------------------


def _rank(rows, exact):
    return rank_exact(rows)[0] if exact else rank_float(rows)[0]


def mu_coefficients(g: WeightedDigraph, pair1: int, pair2: int, backend: str = "auto") -> LinearityCoefficients:
    """``j_e = mu0 + mu1 * j_1 + mu2 * j_2`` for every pair ``e``.

    Uses the coefficient vectors of :func:`linear_forms`.  The subsystem
    solved is the first full-rank 3x3 row selection in row order; the full
    9-row system is then checked.  Raises :class:`RankDeficient` with the
    certificate when ``(w0, w1, w2)`` or the augmented matrix does not
    have rank 3.
    """
    pinned = check_pinned(g, [pair1, pair2])
    _require_non_bridge(g, pinned)
    w0, forms = linear_forms(g, pinned, backend)
    cols = [w0, forms[pair1], forms[pair2]]
    rows = [[c[i] for c in cols] for i in range(9)]
    exact = g.exact
    base_rank = _rank(rows, exact)
    cert = RankCertificate(pinned, 9, base_rank, [], "exact" if exact else "float",
                           None if exact else FLOAT_RTOL, None, g.n)
    if base_rank < 3:
        raise RankDeficient(f"(w0, w1, w2) has rank {base_rank}", cert)
    chosen = None
    for sel in combinations(range(9), 3):
        sub = [rows[i] for i in sel]
        d = det(sub)
        if (d != 0) if exact else abs(d) > FLOAT_RTOL * max(abs(float(x)) for r in sub for x in r) ** 3:
            chosen = sel
            break
    coefs = {}
    for e in range(g.pair_count):
        we = forms[e]
        if _rank([r + [we[i]] for i, r in enumerate(rows)], exact) > 3:
            cert.notes["augmented_pair"] = g.pair_label(e)
            raise RankDeficient(f"augmented matrix for pair {g.pair_label(e)} has rank 4", cert)
        mu = solve([rows[i] for i in chosen], [we[i] for i in chosen])
        for i in range(9):
            r = dot(rows[i], mu) - we[i]
            if (r != 0) if exact else abs(r) > 1e-8 * (max(abs(float(x)) for x in we) or 1.0):
                raise IdentityViolation(f"row {i} of the mu system fails for pair {g.pair_label(e)}")
        coefs[e] = tuple(mu)
    cert.rank = 3
    return LinearityCoefficients(pinned, coefs, "exact" if exact else "float",
                                 certificate=cert, subsystem_rows=chosen)


def verify_mu_linearity(g: WeightedDigraph, pair1: int, pair2: int, samples: Iterable[tuple],
                        coefficients: LinearityCoefficients | None = None, backend: str = "auto") -> dict:
    """From-scratch check of the three-coefficient law at ``(r+1, r-1, r+2, r-2)`` samples."""
    if coefficients is None:
        coefficients = mu_coefficients(g, pair1, pair2, backend)
    res = []
    for a, b, c, d in samples:
        h = _with_pair_rates(g, {pair1: (a, b), pair2: (c, d)})
        j = currents_direct(h)
        scale = 1 if h.exact else max(max(abs(float(x)) for x in j), 1e-300)
        for e in range(g.pair_count):
            r = j[e] - coefficients.predict(e, [j[pair1], j[pair2]])
            res.append(r if h.exact else abs(float(r)) / scale)
    worst, mean = _residuals(res, g.exact)
    ok = worst == 0 if g.exact else worst < FLOAT_RTOL
    return {"max_residual": worst, "mean_residual": mean, "samples": len(res) // max(g.pair_count, 1), "ok": ok}


# -- fixtures ------------------------------------------------------------------------------


def detailed_balance_graph(n: int, density: float = 0.6, seed: int = 0, top: int = 20) -> WeightedDigraph:
    """Random exact graph obeying detailed balance.

    Rates are ``k_uv / pi_u`` with symmetric ``k`` and vertex weights
    ``pi``, so ``pi_u r(u->v) = pi_v r(v->u)`` on every pair.
    """
    from .graph import random_graph

    rng = np.random.default_rng(seed)
    shape = random_graph(n, density, "unit", seed)
    pi = [Fraction(int(rng.integers(1, top + 1)), int(rng.integers(1, top + 1))) for _ in range(n)]
    pairs = []
    for u, v, _, _ in shape.pair_list():
        k = Fraction(int(rng.integers(1, top + 1)), int(rng.integers(1, top + 1)))
        pairs.append((u, v, k / pi[u], k / pi[v]))
    return WeightedDigraph(shape.labels, pairs)


def balanced_at_stall(n: int, density: float = 0.6, seed: int = 0) -> tuple[WeightedDigraph, int]:
    """Graph that obeys detailed balance once one chosen pair is switched off.

    Returns the graph and that pair; its own rates are arbitrary, so the
    full graph carries currents.
    """
    g = detailed_balance_graph(n, density, seed)
    rng = np.random.default_rng(seed + 1)
    candidates = [k for k in range(g.pair_count) if _stays(g, k)]
    k = candidates[int(rng.integers(0, len(candidates)))]
    u, v = g.ends(k)
    fwd = Fraction(int(rng.integers(1, 50)), int(rng.integers(1, 50)))
    bwd = Fraction(int(rng.integers(1, 50)), int(rng.integers(1, 50)))
    return g.with_rates({g.edge(k, PLUS): fwd, g.edge(k, MINUS): bwd}, check_irreducible=True), k


def _stays(g, k):
    from .graph import stays_connected_without

    return stays_connected_without(g, [k])
