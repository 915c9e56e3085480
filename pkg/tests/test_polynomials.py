from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import graphs_with_free_pair, rational_graphs
from treesurgeon.errors import BackendDisagreement, ConstraintMentionsPinned, MissingReverseEdge, ZeroRequiredRate
from treesurgeon.graph import MINUS, PLUS, WeightedDigraph, complete_graph, parse_graph
from treesurgeon.polynomials import (
    contract_pair,
    contracted_root_poly,
    decompose,
    decompose_all,
    edge_marginals,
    rescaled_poly,
    status_order,
    tree_poly,
    tree_poly_det,
    tree_poly_enum,
)
from treesurgeon.trees import TreeConstraint, enumerate_rooted_trees


def small_graph(entry):
    pairs = [(u, v, Fraction(f), Fraction(b)) for u, v, f, b in entry["pairs"]]
    return WeightedDigraph([f"v{i}" for i in range(entry["n"])], pairs)


def F(x):
    return Fraction(x)


# -- frozen oracle values ---------------------------------------------------------------


def test_kite_vectors_match_oracle(kite, frozen):
    for r in range(4):
        v = decompose(kite, r, [0])
        assert [str(x) for x in v.entries] == frozen["kite"]["vectors"][str(r)]
        assert v.total == 8


def test_kite_root_a_vector_has_zero_last_entry(kite):
    v = decompose(kite, kite.vertex("a"), [0])
    assert v[(2,)] == 0 and v["0"] == 3 and v["+"] == 5


def test_kite_named_values(kite, frozen):
    a, b = kite.vertex("a"), kite.vertex("b")
    both = TreeConstraint({kite.edge(0, PLUS), kite.edge(0, MINUS)}, ())
    assert str(tree_poly_det(kite, a, both).value) == frozen["kite"]["root_a_avoid_pair0"]
    through = TreeConstraint({kite.edge(0, PLUS)}, {kite.edge(0, MINUS)})
    assert str(tree_poly(kite, b, through).value) == frozen["kite"]["root_b_require_ab"]
    assert str(contracted_root_poly(kite, 0).value) == frozen["kite"]["contracted_pair0"]


@pytest.mark.parametrize("index", [0, 1, 2])
def test_small_graphs_match_oracle(frozen, index):
    entry = frozen["small"][index]
    g = small_graph(entry)
    for r in range(g.n):
        for backend in ("enum", "det"):
            assert str(tree_poly(g, r, backend=backend).value) == entry["tau"][r]
            v = decompose(g, r, entry["pinned"], backend=backend)
            for key, want in entry["vectors"][r].items():
                assert str(v[(int(key[0]), int(key[1]))]) == want
    for k in range(g.pair_count):
        assert str(contracted_root_poly(g, k).value) == entry["contracted"][k]


# -- closed forms ------------------------------------------------------------------------


def test_cayley_k5():
    g = complete_graph(5, "unit")
    for r in range(5):
        assert tree_poly_det(g, r).value == 125
        assert tree_poly_enum(g, r).value == 125


def test_triangle_contraction():
    g = parse_graph("a b 1 1\nb c 1 1\nc a 1 1")
    assert contracted_root_poly(g, 0).value == 2
    h, merged = contract_pair(g, 0)
    assert h.n == 2 and h.pair_count == 1 and h.rates(0) == (2, 2)


def test_two_vertex_contraction_is_one():
    g = parse_graph("a b 2 5")
    assert contracted_root_poly(g, 0).value == 1


def test_contraction_needs_both_directions():
    g = parse_graph("a b 1 0\nb c 1 1\nc a 1 1")
    with pytest.raises(MissingReverseEdge):
        contracted_root_poly(g, 0)


@given(rational_graphs(2, 6), st.data())
def test_require_both_orientations_is_zero(g, data):
    # Constraint objects refuse this shape, so evaluate the determinant's
    # mixed coefficient in the two rates of one pair directly.
    from treesurgeon.polynomials import _laplacian_det

    k = data.draw(st.integers(0, g.pair_count - 1))
    root = data.draw(st.integers(0, g.n - 1))
    plus, minus = g.edge(k, PLUS), g.edge(k, MINUS)

    def at(a, b):
        return _laplacian_det(g, root, {plus: a, minus: b})

    assert at(1, 1) - at(1, 0) - at(0, 1) + at(0, 0) == 0
    for t in enumerate_rooted_trees(g, root):
        assert {plus, minus} - set(t.edges)


def test_rescaled_two_vertex():
    g = parse_graph("a b 7/3 5")
    root = g.edge(0, MINUS).source
    assert rescaled_poly(g, root, TreeConstraint((), {g.edge(0, PLUS)})).value == 1


def test_rescaled_without_requirements_is_plain(kite):
    assert rescaled_poly(kite, 1).value == tree_poly(kite, 1).value


def test_rescaled_zero_rate():
    g = parse_graph("a b 1 0\nb c 1 1\nc a 1 1")
    with pytest.raises(ZeroRequiredRate):
        rescaled_poly(g, 0, TreeConstraint((), {g.edge(0, MINUS)}))


@settings(max_examples=25)
@given(graphs_with_free_pair(3, 6), st.integers(1, 40), st.integers(1, 40))
def test_rescaled_ignores_pinned_rates(gp, p, q):
    g, k = gp
    plus, minus = g.edge(k, PLUS), g.edge(k, MINUS)
    c = TreeConstraint({plus}, {minus})
    h = g.with_rates({plus: F(p), minus: F(q)})
    for r in range(g.n):
        assert rescaled_poly(g, r, c).value == rescaled_poly(h, r, c).value


# -- identities ------------------------------------------------------------------------------


@given(rational_graphs(2, 7), st.data())
def test_backends_agree(g, data):
    root = data.draw(st.integers(0, g.n - 1))
    edges = g.edges()
    chosen = data.draw(st.lists(st.sampled_from(edges), max_size=3, unique=True))
    avoid = {e for i, e in enumerate(chosen) if i % 2 == 0}
    require = {e for i, e in enumerate(chosen) if i % 2 == 1 and e.reversed() not in avoid}
    c = TreeConstraint(avoid - require, require)
    assert tree_poly(g, root, c, backend="enum").value == tree_poly(g, root, c, backend="det").value
    assert tree_poly(g, root, c, backend="both").backend == "both"


def test_both_backend_flags_disagreement(monkeypatch, kite):
    import treesurgeon.polynomials as poly

    monkeypatch.setattr(poly, "_det_grid", lambda *a: [Fraction(99)])
    with pytest.raises(BackendDisagreement):
        tree_poly(kite, 0, backend="both")


@given(rational_graphs(3, 6), st.data())
def test_first_order_split(g, data):
    root = data.draw(st.integers(0, g.n - 1))
    marg = edge_marginals(g, root)
    total = tree_poly(g, root).value
    for e in g.edges():
        without = tree_poly(g, root, TreeConstraint({e}, ())).value
        assert without + marg.get(e, 0) == total


@given(rational_graphs(3, 7), st.data())
def test_three_way_split_and_classification(g, data):
    k = data.draw(st.integers(0, g.pair_count - 1))
    for root in range(g.n):
        v = decompose(g, root, [k])
        assert v.total == tree_poly(g, root).value
        assert all(x >= 0 for x in v.entries)


@settings(max_examples=25)
@given(rational_graphs(3, 7), st.data())
def test_decomposition_sums_to_total(g, data):
    m = min(3, g.pair_count)
    pinned = data.draw(st.lists(st.integers(0, g.pair_count - 1), min_size=1, max_size=m, unique=True))
    for v in decompose_all(g, pinned):
        assert len(v) == 3 ** len(pinned)
        assert v.total == tree_poly(g, v.root).value


def test_every_tree_has_exactly_one_status():
    g = complete_graph(5, "rational:20", seed=11)
    pinned = (0, 4)
    order = status_order(2)
    for root in range(g.n):
        counts = {s: 0 for s in order}
        for t in enumerate_rooted_trees(g, root):
            used = {(e.pair, e.sign) for e in t.edges}
            status = tuple(1 if (k, PLUS) in used else 2 if (k, MINUS) in used else 0 for k in pinned)
            counts[status] += 1
        assert sum(counts.values()) == len(list(enumerate_rooted_trees(g, root)))
        v = decompose(g, root, pinned, backend="det")
        for s, n in counts.items():
            assert (v[s] == 0) == (n == 0)


@given(rational_graphs(2, 7))
def test_contraction_double_identity(g):
    for k in range(g.pair_count):
        fwd, bwd = g.rates(k)
        if not fwd or not bwd:
            continue
        plus, minus = g.edge(k, PLUS), g.edge(k, MINUS)
        left = fwd * tree_poly(g, plus.source, TreeConstraint({plus}, {minus})).value
        right = bwd * tree_poly(g, minus.source, TreeConstraint({minus}, {plus})).value
        assert left == right == fwd * bwd * contracted_root_poly(g, k).value


def test_status_order_layout():
    assert status_order(1) == [(0,), (1,), (2,)]
    two = status_order(2)
    assert two[0] == (0, 0) and len(two) == 9 and set(two) == {(a, b) for a in range(3) for b in range(3)}


def test_extra_constraint_on_pinned_pair_rejected(kite):
    with pytest.raises(ConstraintMentionsPinned):
        decompose(kite, 0, [0], TreeConstraint({kite.edge(0, PLUS)}, ()))


def test_float_graph_backends_close():
    g = complete_graph(6, "uniform:0.5:3", seed=5)
    for r in range(6):
        a = tree_poly(g, r, backend="enum").value
        b = tree_poly(g, r, backend="det").value
        assert isinstance(a, float) and abs(a - b) <= 1e-9 * abs(a)
