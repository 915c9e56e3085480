"""Conditioned rooted spanning-tree polynomials.

Two independent backends evaluate the same quantities:

``enum``
    Backtracking enumeration of every qualifying tree (see
    :mod:`treesurgeon.trees`).  Each tree is classified by an additive code
    over the pinned pairs, so a single pass fills every status of a
    decomposition at once.
``det``
    Matrix-tree determinant of the reduced out-degree Laplacian.  Avoided
    edges get rate zero; required edges and pinned statuses are extracted
    from evaluations at rate 0 and rate 1, which is exact because the
    polynomial is affine in every single rate.

Exact graphs are evaluated over the integers after clearing a common
denominator, so results are :class:`fractions.Fraction` with no rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from ._backend import kernels
from .errors import (
    BackendDisagreement,
    ConstraintMentionsPinned,
    MissingReverseEdge,
    UnknownEdge,
    ZeroRequiredRate,
)
from .graph import MINUS, PLUS, OrientedEdge, WeightedDigraph
from .linalg import FLOAT_RTOL, bareiss_det
from .trees import NO_CONSTRAINT, TreeConstraint, csr_table

BACKENDS = ("auto", "enum", "det", "both")
# Largest vertex count for which "auto" picks enumeration.
ENUM_AUTO_LIMIT = 8

AVOIDED, FORWARD, BACKWARD = 0, 1, 2
STATUS_SYMBOLS = ("0", "+", "-")


# -- statuses ----------------------------------------------------------------------


def status_order(n: int) -> list[tuple[int, ...]]:
    """All ``3**n`` statuses in canonical order.

    Statuses with fewer required edges come first; ties are broken by
    comparing the last pinned pair first.  For two pairs this yields
    ``00, +0, -0, 0+, 0-, ++, -+, +-, --``.
    """
    return sorted(product(range(3), repeat=n),
                  key=lambda s: (sum(1 for c in s if c), tuple(reversed(s))))


def status_label(status: Sequence[int]) -> str:
    return "".join(STATUS_SYMBOLS[c] for c in status)


def parse_status(text: str) -> tuple[int, ...]:
    try:
        return tuple(STATUS_SYMBOLS.index(ch) for ch in text)
    except ValueError:
        raise ValueError(f"status must use the symbols 0, + and -, got {text!r}") from None


def status_constraint(g: WeightedDigraph, pinned: Sequence[int], status: Sequence[int]) -> TreeConstraint:
    """Avoid/require sets selecting the trees of one status."""
    avoid, require = set(), set()
    for k, c in zip(pinned, status):
        fwd, bwd = g.edge(k, PLUS), g.edge(k, MINUS)
        if c == AVOIDED:
            avoid |= {fwd, bwd}
        elif c == FORWARD:
            require.add(fwd)
            avoid.add(bwd)
        else:
            require.add(bwd)
            avoid.add(fwd)
    return TreeConstraint(avoid, require)


def check_pinned(g: WeightedDigraph, pinned: Iterable[int]) -> tuple[int, ...]:
    """Validate a pinned set: distinct, existing, rate in both directions."""
    pinned = tuple(pinned)
    if len(set(pinned)) != len(pinned):
        raise ValueError(f"pinned pairs must be distinct, got {pinned}")
    for k in pinned:
        fwd, bwd = g.rates(k)
        if fwd == 0 or bwd == 0:
            raise MissingReverseEdge(f"pinned pair {g.pair_label(k)} needs a rate in both directions")
    return pinned


# -- values ------------------------------------------------------------------------------


@dataclass(frozen=True)
class TreePolyValue:
    """A polynomial value and the backend that produced it."""

    value: object
    backend: str

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class TreeVector:
    """Deletion-constriction decomposition of the trees rooted at ``root``.

    ``entries[i]`` belongs to ``statuses[i]``; statuses run over
    :func:`status_order` of the pinned pairs.
    """

    root: int
    pinned: tuple
    statuses: tuple
    entries: tuple
    backend: str

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, status):
        if isinstance(status, str):
            status = parse_status(status)
        return self.entries[self.statuses.index(tuple(status))]

    @property
    def total(self):
        return sum(self.entries[1:], self.entries[0])

    def as_list(self) -> list:
        return list(self.entries)

    def to_dict(self, g: WeightedDigraph) -> dict:
        from .graph import format_rate

        return {
            "root": g.labels[self.root],
            "pinned": [g.pair_label(k) for k in self.pinned],
            "entries": [{"status": status_label(s), "value": format_rate(v)}
                        for s, v in zip(self.statuses, self.entries)],
            "total": format_rate(self.total),
            "backend": self.backend,
        }


# -- enumeration backend ---------------------------------------------------------


def _integer_weights(g: WeightedDigraph, slots):
    """Slot weights as integers (exact mode) plus the scale that was applied."""
    rates = [g.rate(e) for e in slots]
    if not g.exact:
        return rates, None
    d = 1
    for r in rates:
        d = math.lcm(d, r.denominator)
    return [int(r * d) for r in rates], d


def _unscale(value, scale, degree):
    if scale is None:
        return float(value)
    return Fraction(value, scale ** degree)


def _enum_grid(g: WeightedDigraph, root: int, pinned: tuple, extra: TreeConstraint) -> list:
    """Values for every status (indexed by base-3 code) by enumeration."""
    size = 3 ** len(pinned)
    table = csr_table(g, root, extra)
    if table is None:
        return [g.zero()] * size
    starts, targets, slots = table
    place = {k: 3 ** j for j, k in enumerate(pinned)}
    codes = [place[e.pair] * (FORWARD if e.sign == PLUS else BACKWARD) if e.pair in place else 0
             for e in slots]
    weights, scale = _integer_weights(g, slots)
    buckets, _ = kernels.tree_sums(g.n, root, starts, targets, weights, codes, size, False)
    return [_unscale(b, scale, g.n - 1) for b in buckets]


def edge_marginals(g: WeightedDigraph, root: int, c: TreeConstraint = NO_CONSTRAINT) -> dict:
    """For every usable edge ``e``, the polynomial of trees obeying ``c`` that contain ``e``.

    One enumeration pass; the first-order split ``tau = tau(without e) +
    tau(through e)`` follows by subtracting from the plain total.
    """
    table = csr_table(g, root, c)
    if table is None:
        return {}
    starts, targets, slots = table
    weights, scale = _integer_weights(g, slots)
    _, marg = kernels.tree_sums(g.n, root, starts, targets, weights, [0] * len(slots), 1, True)
    return {e: _unscale(m, scale, g.n - 1) for e, m in zip(slots, marg)}


# -- determinant backend -------------------------------------------------------------


def _laplacian_det(g: WeightedDigraph, root: int, override: dict):
    """Reduced out-degree Laplacian determinant with some rates replaced."""
    keep = [v for v in range(g.n) if v != root]
    m = len(keep)
    if m == 0:
        return g.one()
    pos = {v: i for i, v in enumerate(keep)}
    entries = []
    for k in range(g.pair_count):
        for sign in (PLUS, MINUS):
            e = g.edge(k, sign)
            r = override.get(e, g.rate(e))
            if r != 0 and e.source != root:
                entries.append((pos[e.source], pos.get(e.target), r))
    if g.exact:
        d = 1
        for _, _, r in entries:
            d = math.lcm(d, Fraction(r).denominator)
        lap = [[0] * m for _ in range(m)]
        for i, j, r in entries:
            w = int(Fraction(r) * d)
            lap[i][i] += w
            if j is not None:
                lap[i][j] -= w
        return Fraction(bareiss_det(lap), d ** m)
    lap = np.zeros((m, m))
    for i, j, r in entries:
        lap[i, i] += r
        if j is not None:
            lap[i, j] -= r
    return float(np.linalg.det(lap))


def _det_grid(g: WeightedDigraph, root: int, pinned: tuple, extra: TreeConstraint) -> list:
    """Values for every status (indexed by base-3 code) from determinants."""
    required = sorted(extra.require)
    base = {e: 0 for e in extra.avoid}
    shape = (2,) * len(required) + (3,) * len(pinned)
    grid = np.empty(shape, dtype=object)
    settings = ((0, 0), (1, 0), (0, 1))
    for idx in np.ndindex(*shape):
        override = dict(base)
        for e, bit in zip(required, idx):
            override[e] = bit
        for k, s in zip(pinned, idx[len(required):]):
            override[g.edge(k, PLUS)], override[g.edge(k, MINUS)] = settings[s]
        grid[idx] = _laplacian_det(g, root, override)
    # Each required edge: coefficient of its rate, times the rate.
    for e in required:
        grid = g.rate(e) * (grid[1] - grid[0])
    # Each pinned pair: constant term, then the two linear terms.
    for j, k in enumerate(pinned):
        fwd, bwd = g.rates(k)
        a0, a1, a2 = (np.take(grid, s, axis=j) for s in range(3))
        grid = np.stack([a0, fwd * (a1 - a0), bwd * (a2 - a0)], axis=j)
    grid = np.asarray(grid, dtype=object)
    out = [g.zero()] * (3 ** len(pinned))
    for status in product(range(3), repeat=len(pinned)):
        code = sum(c * 3 ** j for j, c in enumerate(status))
        out[code] = grid[status] if pinned else grid[()]
    return out


# -- shared driver ---------------------------------------------------------------------------


def _resolve_backend(g: WeightedDigraph, backend: str) -> str:
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")
    if backend == "auto":
        return "enum" if g.n <= ENUM_AUTO_LIMIT else "det"
    return backend


def values_agree(a, b, rtol: float = FLOAT_RTOL) -> bool:
    if isinstance(a, float) or isinstance(b, float):
        scale = max(abs(float(a)), abs(float(b)))
        return abs(float(a) - float(b)) <= rtol * scale + 1e-300
    return a == b


def _grid(g, root, pinned, extra, backend):
    backend = _resolve_backend(g, backend)
    if backend == "enum":
        return _enum_grid(g, root, pinned, extra), "enum"
    if backend == "det":
        return _det_grid(g, root, pinned, extra), "det"
    a = _enum_grid(g, root, pinned, extra)
    b = _det_grid(g, root, pinned, extra)
    for code, (x, y) in enumerate(zip(a, b)):
        if not values_agree(x, y):
            raise BackendDisagreement(
                f"root {g.labels[root]}, status code {code}: enumeration gives {x}, determinant gives {y}")
    return a, "both"


def _check_root(g, root):
    if not 0 <= root < g.n:
        raise UnknownEdge(f"root {root} is not a vertex")


# -- public operations ------------------------------------------------------------------


def tree_poly(g: WeightedDigraph, root: int, c: TreeConstraint = NO_CONSTRAINT,
              backend: str = "auto") -> TreePolyValue:
    """Sum over trees rooted at ``root`` obeying ``c`` of the product of their rates."""
    _check_root(g, root)
    values, used = _grid(g, root, (), c, backend)
    return TreePolyValue(values[0], used)


def tree_poly_det(g: WeightedDigraph, root: int, c: TreeConstraint = NO_CONSTRAINT) -> TreePolyValue:
    return tree_poly(g, root, c, backend="det")


def tree_poly_enum(g: WeightedDigraph, root: int, c: TreeConstraint = NO_CONSTRAINT) -> TreePolyValue:
    return tree_poly(g, root, c, backend="enum")


def rescaled_poly(g: WeightedDigraph, root: int, c: TreeConstraint = NO_CONSTRAINT,
                  backend: str = "auto") -> TreePolyValue:
    """Conditioned polynomial divided by the rates of the required edges."""
    denom = g.one()
    for e in c.require:
        r = g.rate(e)
        if r == 0:
            raise ZeroRequiredRate(f"required edge {g.edge_label(e)} has rate zero")
        denom = denom * r
    value = tree_poly(g, root, c, backend)
    return TreePolyValue(value.value / denom, value.backend)


def contract_pair(g: WeightedDigraph, pair: int) -> tuple[WeightedDigraph, int]:
    """Merge the two ends of ``pair`` into one vertex and drop the pair.

    Pairs that become parallel after the merge are combined by adding the
    rates of equally oriented edges.  Returns the contracted graph and the
    index of the merged vertex.
    """
    u, v = g.ends(pair)
    keep = [w for w in range(g.n) if w != v]
    new_id = {w: i for i, w in enumerate(keep)}
    new_id[v] = new_id[u]
    labels = [g.labels[w] if w != u else f"{g.labels[u]}+{g.labels[v]}" for w in keep]
    rate = {}
    for k, (a, b, fwd, bwd) in enumerate(g.pair_list()):
        if k == pair:
            continue
        a, b = new_id[a], new_id[b]
        for s, t, r in ((a, b, fwd), (b, a, bwd)):
            rate[(s, t)] = rate.get((s, t), g.zero()) + r
    pairs = []
    for s, t in sorted({(min(s, t), max(s, t)) for s, t in rate}):
        pairs.append((s, t, rate.get((s, t), g.zero()), rate.get((t, s), g.zero())))
    return WeightedDigraph(labels, pairs, check_irreducible=False), new_id[u]


def contracted_root_poly(g: WeightedDigraph, pair: int, backend: str = "auto") -> TreePolyValue:
    """Tree polynomial of the contracted graph, rooted at the merged vertex."""
    fwd, bwd = g.rates(pair)
    if fwd == 0 or bwd == 0:
        raise MissingReverseEdge(f"pair {g.pair_label(pair)} needs a rate in both directions")
    h, merged = contract_pair(g, pair)
    return tree_poly(h, merged, NO_CONSTRAINT, backend)


def decompose(g: WeightedDigraph, root: int, pinned: Iterable[int],
              extra: TreeConstraint = NO_CONSTRAINT, backend: str = "auto") -> TreeVector:
    """Split the trees rooted at ``root`` by how they use each pinned pair.

    Every tree falls into exactly one status: it avoids the pair, uses its
    forward orientation, or uses its backward orientation.  ``extra``
    conditions all entries further and must not mention a pinned pair.
    """
    _check_root(g, root)
    pinned = check_pinned(g, pinned)
    if extra.pairs & set(pinned):
        raise ConstraintMentionsPinned("extra constraint mentions a pinned pair")
    values, used = _grid(g, root, pinned, extra, backend)
    order = status_order(len(pinned))
    entries = tuple(values[sum(c * 3 ** j for j, c in enumerate(s))] for s in order)
    return TreeVector(root, pinned, tuple(order), entries, used)


def decompose_all(g: WeightedDigraph, pinned: Iterable[int], extra: TreeConstraint = NO_CONSTRAINT,
                  backend: str = "auto") -> list[TreeVector]:
    pinned = tuple(pinned)
    return [decompose(g, x, pinned, extra, backend) for x in range(g.n)]


def edge_constraint(g: WeightedDigraph, avoid: Iterable[OrientedEdge] = (),
                    require: Iterable[OrientedEdge] = ()) -> TreeConstraint:
    """Constraint from edge iterables, checking the edges belong to ``g``."""
    avoid, require = list(avoid), list(require)
    for e in avoid + require:
        if g.edge(e.pair, e.sign) != e:
            raise UnknownEdge(f"edge {e!r} does not belong to this graph")
    return TreeConstraint(frozenset(avoid), frozenset(require))
