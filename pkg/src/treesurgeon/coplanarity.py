"""Orthogonal sigma-vectors, second-order identities and rank certificates.

For one pinned pair the tree vectors of all roots live in a
three-dimensional space indexed by (avoid pair, use forward, use
backward).  A single sigma-vector built from tree polynomials rooted at
the pair's endpoints is orthogonal to every one of them, so they span at
most a plane.  With ``n`` pinned pairs the vectors have ``3**n`` entries
and the expected span is ``n + 1``.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

from .errors import (
    BridgePinned,
    ConstraintMentionsPinned,
    DisconnectedWithoutPins,
    TooFewVertices,
)
from .graph import MINUS, PLUS, WeightedDigraph, stays_connected_without
from .linalg import FLOAT_RTOL, det, dot, rank_exact, rank_float, transpose
from .polynomials import (
    AVOIDED,
    BACKWARD,
    FORWARD,
    check_pinned,
    contracted_root_poly,
    decompose_all,
    status_constraint,
    status_label,
    status_order,
    tree_poly,
    values_agree,
)
from .trees import NO_CONSTRAINT, TreeConstraint

MODES = ("exact", "float")


@dataclass(frozen=True)
class SigmaVector:
    """Normal vector of the plane of tree vectors for one pinned pair.

    ``empty`` is minus both pinned rates times the contracted polynomial;
    ``plus``/``minus`` are the pinned rate times the polynomial rooted at
    that orientation's source with the pair avoided.  Every value carries
    the extra constraint.
    """

    pair: int
    extra: TreeConstraint
    empty: object
    plus: object
    minus: object

    @property
    def entries(self) -> tuple:
        """``(empty, plus, minus)`` in naming order."""
        return self.empty, self.plus, self.minus

    def as_vector(self) -> tuple:
        """Components aligned with a tree vector ``(avoid, use +, use -)``.

        The tree count through ``+pair`` pairs with the ``minus`` term and
        vice versa; that is what makes the dot product vanish.
        """
        return self.empty, self.minus, self.plus

    def dot(self, tree_vector) -> object:
        return dot(self.as_vector(), list(tree_vector))


@dataclass
class RankCertificate:
    """Rank of the tree vectors of every root for a pinned set."""

    pinned: tuple
    vector_dim: int
    rank: int
    basis_roots: list
    arithmetic: str
    tolerance: float | None = None
    singular_values: list | None = None
    vertex_count: int = 0
    orthogonal: bool | None = None
    max_residual: object = None
    notes: dict = field(default_factory=dict)

    @property
    def expected_rank(self) -> int:
        return len(self.pinned) + 1

    def to_dict(self, g: WeightedDigraph | None = None) -> dict:
        label = (lambda v: g.labels[v]) if g is not None else (lambda v: v)
        pin = (lambda k: g.pair_label(k)) if g is not None else (lambda k: k)
        out = {
            "pinned": [pin(k) for k in self.pinned],
            "vector_dim": self.vector_dim,
            "vertex_count": self.vertex_count,
            "rank": self.rank,
            "expected_rank": self.expected_rank,
            "basis_roots": [label(v) for v in self.basis_roots],
            "arithmetic": self.arithmetic,
            "tolerance": self.tolerance,
            "singular_values": self.singular_values,
            "orthogonal": self.orthogonal,
            "max_residual": None if self.max_residual is None else str(self.max_residual),
        }
        out.update(self.notes)
        return out


# -- helpers ------------------------------------------------------------------------


def _require_non_bridge(g: WeightedDigraph, pairs: Sequence[int]):
    if not stays_connected_without(g, pairs):
        names = ", ".join(g.pair_label(k) for k in pairs)
        if len(pairs) > 1:
            raise DisconnectedWithoutPins(f"removing {names} disconnects the graph")
        raise BridgePinned(f"pair {names} is a bridge")


def _graph_for_mode(g: WeightedDigraph, mode: str | None) -> tuple[WeightedDigraph, str]:
    if mode is None:
        mode = "exact" if g.exact else "float"
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "exact" and not g.exact:
        raise ValueError("exact mode needs integer or p/q rates")
    return (g if mode == "exact" else g.to_float()), mode


def _rank(rows: list[list], mode: str) -> tuple[int, list[int], list | None]:
    if mode == "exact":
        r, basis = rank_exact(rows)
        return r, basis, None
    r, s = rank_float(rows)
    # Independent rows for float mode: greedy over the same threshold.
    basis = []
    for i in range(len(rows)):
        if rank_float([rows[j] for j in basis + [i]])[0] > len(basis):
            basis.append(i)
        if len(basis) == r:
            break
    return r, basis, [float(x) for x in s]


def _is_zero(x) -> bool:
    return x == 0


def _scale_of(vectors) -> float:
    return max((abs(float(x)) for v in vectors for x in v), default=0.0)


# -- sigma vectors -------------------------------------------------------------------


def sigma_vector(g: WeightedDigraph, pair: int, extra: TreeConstraint = NO_CONSTRAINT,
                 backend: str = "auto") -> SigmaVector:
    """Sigma-vector of ``pair``, conditioned further by ``extra``.

    Without extra constraints the first entry uses the contracted graph.
    With them it uses the equal quantity ``r(+pair)`` times the trees
    rooted at the source of ``+pair`` that contain ``-pair``, which carries
    the constraint naturally.
    """
    check_pinned(g, [pair])
    if pair in extra.pairs:
        raise ConstraintMentionsPinned(f"extra constraint mentions pinned pair {g.pair_label(pair)}")
    fwd, bwd = g.rates(pair)
    plus_edge, minus_edge = g.edge(pair, PLUS), g.edge(pair, MINUS)
    avoid_pair = extra.merged(TreeConstraint({plus_edge, minus_edge}, ()))
    plus = fwd * tree_poly(g, plus_edge.source, avoid_pair, backend).value
    minus = bwd * tree_poly(g, minus_edge.source, avoid_pair, backend).value
    if extra:
        through = extra.merged(TreeConstraint({plus_edge}, {minus_edge}))
        empty = -fwd * tree_poly(g, plus_edge.source, through, backend).value
    else:
        empty = -fwd * bwd * contracted_root_poly(g, pair, backend).value
    return SigmaVector(pair, extra, empty, plus, minus)


def contraction_identity(g: WeightedDigraph, pair: int, extra: TreeConstraint = NO_CONSTRAINT,
                         backend: str = "auto") -> tuple:
    """The three equal quantities of the contraction identity.

    Returns ``(r+ * trees at s(+) through -, r- * trees at s(-) through +,
    r+ * r- * contracted)``; the last is ``None`` when ``extra`` is set.
    """
    fwd, bwd = g.rates(pair)
    plus_edge, minus_edge = g.edge(pair, PLUS), g.edge(pair, MINUS)
    a = fwd * tree_poly(g, plus_edge.source, extra.merged(TreeConstraint({plus_edge}, {minus_edge})),
                        backend).value
    b = bwd * tree_poly(g, minus_edge.source, extra.merged(TreeConstraint({minus_edge}, {plus_edge})),
                        backend).value
    c = None if extra else fwd * bwd * contracted_root_poly(g, pair, backend).value
    return a, b, c


def check_second_order(g: WeightedDigraph, pair: int, extra: TreeConstraint = NO_CONSTRAINT,
                       backend: str = "auto") -> list:
    """Left side minus right side of the second-order identity, for every root.

    For each root ``x``::

        r+ r- contracted * T0(x)  -  r+ T0(s+) T-(x)  -  r- T0(s-) T+(x)

    where ``T0`` avoids the pair and ``T+``/``T-`` use one orientation.
    All entries are zero in exact arithmetic.
    """
    _require_non_bridge(g, [pair])
    sigma = sigma_vector(g, pair, extra, backend)
    out = []
    for vec in decompose_all(g, [pair], extra, backend):
        t0, tp, tm = vec.entries
        lhs = -sigma.empty * t0
        rhs = sigma.plus * tm + sigma.minus * tp
        out.append(lhs - rhs)
    return out


def check_coplanarity(g: WeightedDigraph, pair: int, mode: str | None = None,
                      extra: TreeConstraint = NO_CONSTRAINT, backend: str = "auto") -> RankCertificate:
    """Rank of the one-pair tree vectors of all roots, plus the sigma test."""
    g, mode = _graph_for_mode(g, mode)
    _require_non_bridge(g, [pair])
    vectors = [v.as_list() for v in decompose_all(g, [pair], extra, backend)]
    r, basis, s = _rank(vectors, mode)
    sigma = sigma_vector(g, pair, extra, backend)
    residuals = [sigma.dot(v) for v in vectors]
    if mode == "exact":
        orthogonal = all(_is_zero(x) for x in residuals)
        worst = max((abs(x) for x in residuals), default=0)
        tol = None
    else:
        worst = max((abs(x) for x in residuals), default=0.0)
        scale = _scale_of(vectors) * max(abs(float(x)) for x in sigma.entries)
        orthogonal = worst <= FLOAT_RTOL * scale
        tol = FLOAT_RTOL
    notes = {"sigma": [str(x) for x in sigma.as_vector()]}
    if s is not None and s:
        notes["singular_ratio"] = s[-1] / s[0] if s[0] else 0.0
    return RankCertificate((pair,), 3, r, basis, mode, tol, s, g.n, orthogonal, worst, notes)


def plane_points(g: WeightedDigraph, pair: int, extra: TreeConstraint = NO_CONSTRAINT,
                 backend: str = "auto") -> tuple[list, SigmaVector]:
    """Per-root 3-vectors and the sigma normal, for plotting the plane."""
    vectors = decompose_all(g, [pair], extra, backend)
    return [(v.root, v.as_list()) for v in vectors], sigma_vector(g, pair, extra, backend)


# -- several pinned pairs ---------------------------------------------------------------


def embedded_sigma(g: WeightedDigraph, pinned: Sequence[int], k: int, others_status: Sequence[int],
                   backend: str = "auto") -> tuple[list, SigmaVector]:
    """Sigma-vector of ``pinned[k]`` conditioned on the other pairs' statuses.

    The three components are placed in the ``3**n`` layout at the statuses
    that agree with ``others_status`` on the other pairs.
    """
    pinned = tuple(pinned)
    others = pinned[:k] + pinned[k + 1:]
    extra = status_constraint(g, others, others_status)
    sigma = sigma_vector(g, pinned[k], extra, backend)
    order = status_order(len(pinned))
    vec = [g.zero()] * len(order)
    for own, value in zip((AVOIDED, FORWARD, BACKWARD), sigma.as_vector()):
        full = list(others_status[:k]) + [own] + list(others_status[k:])
        vec[order.index(tuple(full))] = value
    return vec, sigma


# Columns of the two-pair sigma matrix: (pinned index, status of the other pair).
TWO_EDGE_COLUMNS = ((0, AVOIDED), (1, AVOIDED), (0, BACKWARD), (1, BACKWARD), (0, FORWARD), (1, FORWARD))
# Positions (row, column) of the named entries A..L of the rescaled matrix.
NAMED_POSITIONS = {
    "A": (1, 0), "B": (2, 0), "C": (3, 1), "D": (4, 1),
    "E": (5, 4), "F": (5, 5), "G": (6, 3), "H": (6, 4),
    "I": (7, 2), "J": (7, 5), "K": (8, 2), "L": (8, 3),
}
CONSISTENCY = {
    "EC-FA": lambda n: n["E"] * n["C"] - n["F"] * n["A"],
    "HC-GB": lambda n: n["H"] * n["C"] - n["G"] * n["B"],
    "ID-JA": lambda n: n["I"] * n["D"] - n["J"] * n["A"],
    "KD-LB": lambda n: n["K"] * n["D"] - n["L"] * n["B"],
}


@dataclass
class TwoEdgeSigmaMatrix:
    """The six conditioned sigma-vectors for two pinned pairs, as 9-vectors."""

    columns: list
    labels: list
    rescaled: list
    named: dict
    omega: list
    rank: int

    def to_dict(self) -> dict:
        return {
            "labels": self.labels,
            "columns": [[str(x) for x in col] for col in self.columns],
            "named": {k: str(v) for k, v in self.named.items()},
            "omega": [str(x) for x in self.omega],
            "rank": self.rank,
        }


def _column_label(g, pinned, k, other_status):
    other = pinned[1 - k]
    cond = {AVOIDED: f"avoid {g.pair_label(other)}",
            FORWARD: f"through +{g.pair_label(other)}",
            BACKWARD: f"through -{g.pair_label(other)}"}[other_status]
    return f"sigma {g.pair_label(pinned[k])} | {cond}"


def two_edge_sigma_matrix(g: WeightedDigraph, pinned: Sequence[int], mode: str = "exact",
                          backend: str = "auto") -> TwoEdgeSigmaMatrix:
    pinned = tuple(pinned)
    columns, labels = [], []
    for k, other_status in TWO_EDGE_COLUMNS:
        vec, _ = embedded_sigma(g, pinned, k, [other_status], backend)
        columns.append(vec)
        labels.append(_column_label(g, pinned, k, other_status))
    # Scale every column so its first nonzero entry (the contracted term) is 1.
    rescaled_cols = []
    for col in columns:
        lead = next((x for x in col if x != 0), None)
        rescaled_cols.append([x / lead for x in col] if lead else list(col))
    rescaled = transpose(rescaled_cols)
    named = {name: rescaled[i][j] for name, (i, j) in NAMED_POSITIONS.items()}
    omega = [1, -1, named["D"], -named["B"], named["C"], -named["A"]]
    r, _, _ = _rank(transpose(columns), mode) if columns else (0, [], None)
    return TwoEdgeSigmaMatrix(columns, labels, rescaled, named, omega, r)


def two_edge_analysis(g: WeightedDigraph, pair1: int, pair2: int, mode: str | None = None,
                      backend: str = "auto"):
    """Rank certificate, sigma matrix and the four consistency expressions.

    Returns ``(certificate, sigma_matrix, report)``.  ``report`` holds the
    values of the four expressions that would all vanish if the six
    sigma-vectors were dependent through the null vector ``omega``, the
    lower 3x3 block determinant and the orthogonality verdict.
    """
    g, mode = _graph_for_mode(g, mode)
    pinned = check_pinned(g, [pair1, pair2])
    _require_non_bridge(g, pinned)
    tree_vectors = decompose_all(g, pinned, NO_CONSTRAINT, backend)
    rows = [v.as_list() for v in tree_vectors]
    r, basis, s = _rank(rows, mode)
    sig = two_edge_sigma_matrix(g, pinned, mode, backend)
    residuals = [dot(col, row) for col in sig.columns for row in rows]
    worst = max((abs(x) for x in residuals), default=0)
    if mode == "exact":
        orthogonal = all(_is_zero(x) for x in residuals)
    else:
        scale = _scale_of(rows) * _scale_of(sig.columns)
        orthogonal = worst <= FLOAT_RTOL * scale
    # Lower block of the tree vectors rooted at s(+1), s(-1), s(+2).
    roots = (g.edge(pinned[0], PLUS).source, g.edge(pinned[0], MINUS).source, g.edge(pinned[1], PLUS).source)
    block = [[rows[x][i] for x in roots] for i in range(6, 9)]
    lower_det = det(block)
    consistency = {name: f(sig.named) for name, f in CONSISTENCY.items()}
    report = {
        "lower_block_roots": [g.labels[x] for x in roots],
        "lower_block_det": lower_det,
        "lower_block_positive": lower_det > 0,
        "sigma_rank": sig.rank,
        "orthogonal": orthogonal,
        "consistency": consistency,
        "any_consistency_vanishes": any(values_agree(v, 0 * v) if mode == "float" else v == 0
                                        for v in consistency.values()),
    }
    notes = {"statuses": [status_label(st) for st in status_order(2)]}
    cert = RankCertificate(pinned, 9, r, basis, mode, None if mode == "exact" else FLOAT_RTOL, s, g.n,
                           orthogonal, worst, notes)
    return cert, sig, report


def sigma_candidates(g: WeightedDigraph, pinned: Sequence[int], backend: str = "auto") -> list:
    """Every embedded sigma-vector: one per pinned pair and status of the others.

    There are ``n * 3**(n - 1)`` of them.  Returns ``(pinned index,
    others' status, vector)`` triples.
    """
    pinned = tuple(pinned)
    out = []
    for k in range(len(pinned)):
        for others in product(range(3), repeat=len(pinned) - 1):
            vec, _ = embedded_sigma(g, pinned, k, others, backend)
            out.append((k, others, vec))
    return out


def conjecture_test(g: WeightedDigraph, pinned: Iterable[int], mode: str | None = None,
                    backend: str = "auto", with_sigma: bool = True) -> RankCertificate:
    """Rank of the ``3**n`` tree vectors over all roots, against ``n + 1``.

    Also counts how many sigma candidates annihilate every tree vector,
    how many distinct nonzero candidates there are, and their joint rank.
    """
    g, mode = _graph_for_mode(g, mode)
    pinned = check_pinned(g, pinned)
    n = len(pinned)
    _require_non_bridge(g, pinned)
    if g.n < n + 2:
        warnings.warn(f"{g.n} vertices cannot exhibit a rank above {n + 1}", TooFewVertices, stacklevel=2)
    start = time.perf_counter()
    rows = [v.as_list() for v in decompose_all(g, pinned, NO_CONSTRAINT, backend)]
    r, basis, s = _rank(rows, mode)
    notes = {"matches_conjecture": r == n + 1}
    orthogonal = None
    worst = None
    if with_sigma:
        cands = sigma_candidates(g, pinned, backend)
        scale = _scale_of(rows)
        ok = 0
        worst = 0
        for _, _, vec in cands:
            res = [dot(vec, row) for row in rows]
            w = max(abs(x) for x in res)
            worst = max(worst, w)
            if mode == "exact":
                ok += all(x == 0 for x in res)
            else:
                ok += w <= FLOAT_RTOL * scale * _scale_of([vec])
        distinct = {tuple(v) for _, _, v in cands if any(x != 0 for x in v)}
        cand_rank = _rank([list(v) for v in distinct], mode)[0] if distinct else 0
        orthogonal = ok == len(cands)
        notes.update({
            "sigma_candidates": len(cands),
            "sigma_orthogonal": ok,
            "sigma_distinct_nonzero": len(distinct),
            "sigma_rank": cand_rank,
        })
    notes["elapsed_ms"] = round(1000 * (time.perf_counter() - start), 3)
    return RankCertificate(pinned, 3 ** n, r, basis, mode, None if mode == "exact" else FLOAT_RTOL, s,
                           g.n, orthogonal, worst, notes)
