import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rational_graphs
from oracles import trees as oracle_trees
from treesurgeon.errors import ConstraintMentionsPinned, InvalidConstraint, NotASwapConfiguration, SameRoot
from treesurgeon.graph import MINUS, PLUS, complete_graph, parse_graph
from treesurgeon.trees import (
    NO_CONSTRAINT,
    DoublyRootedTree,
    RootedTree,
    TreeConstraint,
    enumerate_rooted_trees,
    inverse_surgery,
    is_doubly_rooted_tree,
    is_rooted_tree,
    slots_tree,
    surgery,
    surgery_batch,
    surgery_respects_constraints,
    swap_step,
)


def edge_keys(tree):
    return frozenset((e.pair, e.sign) for e in tree.edges)


def oracle_keys(g, root):
    return {frozenset((e[0], e[1]) for e in t) for t in oracle_trees(g.n, g.pair_list(), root)}


def test_triangle_has_three_trees():
    g = parse_graph("a b 1 1\nb c 1 1\nc a 1 1")
    assert len(list(enumerate_rooted_trees(g, 0))) == 3


def test_kite_tree_counts(kite, frozen):
    for r in range(4):
        assert len(list(enumerate_rooted_trees(kite, r))) == frozen["kite"]["tree_counts"][r] == 8


def test_kite_root_c_require_cb_is_empty(kite):
    c, b = kite.vertex("c"), kite.vertex("b")
    cons = TreeConstraint((), {kite.find_edge(c, b)})
    assert list(enumerate_rooted_trees(kite, c, cons)) == []


def test_enumeration_order_is_deterministic(kite):
    first = [t.edges for t in enumerate_rooted_trees(kite, 1)]
    assert first == [t.edges for t in enumerate_rooted_trees(kite, 1)]


@given(rational_graphs(2, 6), st.data())
def test_enumeration_matches_subset_oracle(g, data):
    root = data.draw(st.integers(0, g.n - 1))
    found = list(enumerate_rooted_trees(g, root))
    keys = [edge_keys(t) for t in found]
    assert len(set(keys)) == len(keys)
    assert set(keys) == oracle_keys(g, root)
    for t in found:
        assert len(t.edges) == g.n - 1
        assert is_rooted_tree(t.edges, g.n, root)
        assert len({e.pair for e in t.edges}) == len(t.edges)


@given(rational_graphs(3, 6), st.data())
def test_constrained_equals_filtered(g, data):
    root = data.draw(st.integers(0, g.n - 1))
    edges = g.edges()
    chosen = data.draw(st.lists(st.sampled_from(edges), max_size=3, unique=True))
    avoid, require = set(), set()
    for e in chosen:
        if data.draw(st.booleans()) and e.reversed() not in require:
            require.add(e)
        else:
            avoid.add(e)
    c = TreeConstraint(avoid, require)
    got = {t.edges for t in enumerate_rooted_trees(g, root, c)}
    want = {t.edges for t in enumerate_rooted_trees(g, root) if c.admits(t.edges)}
    assert got == want


def test_constraint_validation(kite):
    e = kite.edge(0, PLUS)
    with pytest.raises(InvalidConstraint):
        TreeConstraint({e}, {e})
    with pytest.raises(InvalidConstraint):
        TreeConstraint((), {e, e.reversed()})


def test_two_vertex_single_step():
    g = parse_graph("a b 2 3")
    t_a = RootedTree(0, frozenset({g.edge(0, MINUS)}))
    t_b = RootedTree(1, frozenset({g.edge(0, PLUS)}))
    moving, fixed = swap_step(DoublyRootedTree.from_rooted(t_a, 1), t_b)
    assert moving.is_terminal
    out_b, out_a = surgery(t_a, t_b)
    assert out_b.root == 1 and out_a.root == 0
    assert out_b.weight(g) * out_a.weight(g) == t_a.weight(g) * t_b.weight(g)


def test_swap_step_rejects_terminal_and_wrong_root(kite):
    trees = list(enumerate_rooted_trees(kite, 0))
    other = list(enumerate_rooted_trees(kite, 1))[0]
    done = DoublyRootedTree((0, 1), 0, trees[0].edges)
    with pytest.raises(NotASwapConfiguration):
        swap_step(done, other)
    with pytest.raises(NotASwapConfiguration):
        swap_step(DoublyRootedTree.from_rooted(trees[0], 1), trees[1])


def test_same_root_rejected(kite):
    t = next(enumerate_rooted_trees(kite, 0))
    with pytest.raises(SameRoot):
        surgery(t, t)


def check_all_pairs(g):
    """Exhaustive surgery checks; returns the number of pairs examined."""
    by_root = [list(enumerate_rooted_trees(g, r)) for r in range(g.n)]
    count = 0
    for x in range(g.n):
        for y in range(g.n):
            if x == y:
                continue
            images = set()
            for tx in by_root[x]:
                for ty in by_root[y]:
                    trace = []
                    a, b = surgery(tx, ty, trace)
                    assert a.root == y and b.root == x
                    assert is_rooted_tree(a.edges, g.n, y) and is_rooted_tree(b.edges, g.n, x)
                    assert a.weight(g) * b.weight(g) == tx.weight(g) * ty.weight(g)
                    for e, f in trace:
                        assert e.target != y and f.target != x
                    assert inverse_surgery(a, b) == (tx, ty)
                    images.add((a.edges, b.edges))
                    count += 1
            assert len(images) == len(by_root[x]) * len(by_root[y])
    return count


def test_surgery_exhaustive_kite(kite):
    assert check_all_pairs(kite) == 12 * 64


def test_surgery_exhaustive_k4_unit():
    check_all_pairs(complete_graph(4, "unit"))


@settings(max_examples=15)
@given(rational_graphs(3, 5))
def test_surgery_exhaustive_random(g):
    check_all_pairs(g)


def test_surgery_is_not_self_inverse_on_k4():
    # Surgery applied twice does not always give back the inputs; the
    # explicit inverse does.
    g = complete_graph(4, "unit")
    t0 = list(enumerate_rooted_trees(g, 0))
    t1 = list(enumerate_rooted_trees(g, 1))
    misses = 0
    for a in t0:
        for b in t1:
            ya, xb = surgery(a, b)
            if surgery(xb, ya)[::-1] != (a, b):
                misses += 1
    assert misses > 0


def test_constraints_preserved_kite(kite):
    c, b = kite.vertex("c"), kite.vertex("b")
    cons = TreeConstraint((), {kite.find_edge(c, b)})
    for x in range(4):
        for y in range(4):
            if x == y:
                continue
            for tx in enumerate_rooted_trees(kite, x, cons):
                for ty in enumerate_rooted_trees(kite, y, cons):
                    assert surgery_respects_constraints(tx, ty, cons, [0])


def test_constraint_on_pinned_rejected(kite):
    t0 = next(enumerate_rooted_trees(kite, 0))
    t1 = next(enumerate_rooted_trees(kite, 1))
    with pytest.raises(ConstraintMentionsPinned):
        surgery_respects_constraints(t0, t1, TreeConstraint({kite.edge(0, PLUS)}, ()), [0])


def test_empty_constraint_trivial(kite):
    t0 = next(enumerate_rooted_trees(kite, 0))
    t1 = next(enumerate_rooted_trees(kite, 1))
    assert surgery_respects_constraints(t0, t1, NO_CONSTRAINT, [0])


@settings(max_examples=20)
@given(rational_graphs(3, 5), st.integers(0, 10 ** 6))
def test_random_constraints_preserved(g, seed):
    rng = random.Random(seed)
    pinned = {rng.randrange(g.pair_count)}
    free = [e for e in g.edges() if e.pair not in pinned]
    picks = rng.sample(free, min(len(free), 2))
    require = {picks[0]} if picks else set()
    avoid = set(picks[1:]) - {e.reversed() for e in require}
    cons = TreeConstraint(avoid, require)
    x, y = rng.sample(range(g.n), 2)
    for tx in enumerate_rooted_trees(g, x, cons):
        for ty in enumerate_rooted_trees(g, y, cons):
            assert surgery_respects_constraints(tx, ty, cons, pinned)


def test_doubly_rooted_validation(kite):
    t = next(enumerate_rooted_trees(kite, 0))
    assert is_doubly_rooted_tree(t.edges, 4, (0, 1), 1)


def test_intermediate_states_are_doubly_rooted(kite):
    g = complete_graph(5, "rational:9", seed=6)
    for tx in list(enumerate_rooted_trees(g, 0))[:40]:
        for ty in list(enumerate_rooted_trees(g, 3))[:40]:
            moving, fixed = DoublyRootedTree.from_rooted(tx, 3), ty
            while not moving.is_terminal:
                moving, fixed = swap_step(moving, fixed)
                assert is_doubly_rooted_tree(moving.edges, g.n, (0, 3), moving.branch)
                assert is_rooted_tree(fixed.edges, g.n, fixed.root)


@pytest.mark.parametrize("backend", ["python", "auto"])
@settings(max_examples=10)
@given(rational_graphs(3, 5), st.data())
def test_batch_surgery_matches_reference(backend, g, data):
    x, y = data.draw(st.lists(st.integers(0, g.n - 1), min_size=2, max_size=2, unique=True))
    tx = list(enumerate_rooted_trees(g, x))
    ty = list(enumerate_rooted_trees(g, y))
    out_y, out_x, flags, steps, edges = surgery_batch(g, tx, ty, backend)
    row = 0
    for a in tx:
        for b in ty:
            trace = []
            want_y, want_x = surgery(a, b, trace)
            assert slots_tree(out_y[row], y, edges) == want_y
            assert slots_tree(out_x[row], x, edges) == want_x
            assert steps[row] == len(trace) and flags[row] == 0
            row += 1
