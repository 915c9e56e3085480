"""Identity suite over the bundled fixtures.

Each check returns a dict with ``name``, ``graph``, ``ok`` and a
``detail`` value.  ``fault=True`` corrupts one rate on the right-hand
side of the second-order identity, which must make that check fail; it
exists to exercise the failure path end to end.
"""

from __future__ import annotations

from fractions import Fraction

from .coplanarity import check_coplanarity, sigma_vector
from .fixtures import complete_unit, kite, six_vertex
from .graph import PLUS, WeightedDigraph, stays_connected_without
from .linalg import FLOAT_RTOL
from .markov import currents, lambda_coefficients, stationary, verify_linearity, vertex_balance
from .polynomials import ENUM_AUTO_LIMIT, decompose_all, tree_poly, values_agree


def _close(a, b, exact: bool) -> bool:
    return a == b if exact else values_agree(a, b)


def _first_free_pair(g: WeightedDigraph) -> int | None:
    return next((k for k in range(g.pair_count) if stays_connected_without(g, [k])), None)


def _corrupted(g: WeightedDigraph, pair: int) -> WeightedDigraph:
    k = next(k for k in range(g.pair_count) if k != pair)
    e = g.edge(k, PLUS)
    return g.with_rates({e: g.rate(e) * 2})


def check_graph(name: str, g: WeightedDigraph, fault: bool = False) -> list[dict]:
    exact = g.exact
    out = []

    def add(check, ok, detail=None):
        out.append({"name": check, "graph": name, "ok": bool(ok), "detail": detail})

    pair = _first_free_pair(g)
    pinned = [pair] if pair is not None else [0]
    vecs = decompose_all(g, pinned)
    sums_ok = all(_close(v.total, tree_poly(g, v.root).value, exact) for v in vecs)
    add("decomposition_sum", sums_ok)

    if g.n <= ENUM_AUTO_LIMIT:
        agree = all(
            _close(a, b, exact)
            for v in range(g.n)
            for a, b in zip(decompose_all(g, pinned, backend="enum")[v],
                            decompose_all(g, pinned, backend="det")[v])
        )
        add("backend_agreement", agree)

    if pair is not None:
        sig = sigma_vector(_corrupted(g, pair) if fault else g, pair)
        res = [-sig.empty * v.entries[0] - sig.plus * v.entries[2] - sig.minus * v.entries[1] for v in vecs]
        worst = max(abs(float(r)) for r in res)
        scale = max(abs(float(x)) for v in vecs for x in v.entries) ** 2 * max(abs(float(x)) for x in sig.entries)
        add("second_order_identity", all(r == 0 for r in res) if exact else worst <= FLOAT_RTOL * scale,
            worst)
        cert = check_coplanarity(g, pair)
        add("coplanarity", cert.rank <= 2 and cert.orthogonal, {"rank": cert.rank})

    p = stationary(g, cross_check=True)
    add("stationary_cross_check", p.cross_checked)
    j = currents(g, p)
    bal = vertex_balance(g, j.values)
    add("current_balance", all(b == 0 for b in bal) if exact else max(abs(float(b)) for b in bal) < 1e-12)

    if pair is not None:
        lam = lambda_coefficients(g, pair)
        fwd, bwd = g.rates(pair)
        samples = [(fwd * 2, bwd), (fwd, bwd * 3), (fwd / 2, bwd * 2)]
        if exact:
            samples = [(Fraction(a), Fraction(b)) for a, b in samples]
        rep = verify_linearity(g, pair, samples, lam)
        add("current_linearity", rep["ok"], rep["max_residual"])
    return out


def bundled_graphs() -> list[tuple[str, WeightedDigraph]]:
    graphs = [("kite", kite()), ("six_vertex", six_vertex())]
    graphs += [(f"complete_unit_{n}", complete_unit(n)) for n in (3, 4, 5)]
    return graphs


def run_selftest(fault: bool = False) -> list[dict]:
    checks = []
    for name, g in bundled_graphs():
        checks += check_graph(name, g, fault)
    return checks
