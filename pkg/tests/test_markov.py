import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import graphs_with_free_pair, rational_graphs
from treesurgeon.errors import BridgePinned, IdentityViolation, RankDeficient
from treesurgeon.fixtures import biased_cycle, complete_rational_corpus, kite, load_fixture
from treesurgeon.graph import parse_graph
from treesurgeon.linalg import det
from treesurgeon.markov import (
    _with_pair_rates,
    balanced_at_stall,
    currents,
    currents_direct,
    detailed_balance_graph,
    fundamental_cycles,
    generator_kernel,
    is_detailed_balanced,
    lambda_coefficients,
    mu_coefficients,
    quadratic_term_check,
    stationary,
    verify_linearity,
    verify_mu_linearity,
    vertex_balance,
    z_vectors,
)

F = Fraction


def rate_samples(rng, count, top=30):
    return [(F(rng.randint(1, top), rng.randint(1, top)), F(rng.randint(1, top), rng.randint(1, top)))
            for _ in range(count)]


def test_two_state():
    g = load_fixture("two_state")
    p = stationary(g)
    assert p.probabilities == (F(1, 3), F(2, 3))
    assert p.cross_checked
    assert currents(g).values == (0,)


def test_biased_cycle_matches_oracle(frozen):
    g = biased_cycle()
    assert [str(x) for x in stationary(g)] == frozen["biased_cycle"]["stationary"]
    assert [str(x) for x in currents(g)] == frozen["biased_cycle"]["currents"]
    assert not is_detailed_balanced(g)


@pytest.mark.parametrize("index", [0, 1, 2])
def test_small_graphs_stationary_oracle(frozen, index):
    from test_polynomials import small_graph

    entry = frozen["small"][index]
    g = small_graph(entry)
    assert [str(x) for x in stationary(g)] == entry["stationary"]
    assert [str(x) for x in currents(g)] == entry["currents"]


@given(rational_graphs(2, 8))
def test_matrix_tree_equals_kernel(g):
    p = stationary(g, cross_check=False)
    assert list(p) == generator_kernel(g)
    assert sum(p) == 1 and all(x > 0 for x in p)


@given(rational_graphs(2, 8))
def test_vertex_balance_exact(g):
    j = currents(g)
    assert all(b == 0 for b in vertex_balance(g, j.values))
    assert j.values == currents_direct(g).values


@settings(max_examples=20)
@given(st.integers(3, 7), st.integers(0, 10 ** 6))
def test_detailed_balance_has_no_current(n, seed):
    g = detailed_balance_graph(n, 0.7, seed)
    assert is_detailed_balanced(g)
    assert all(x == 0 for x in currents(g))


def test_detailed_balance_closed_form():
    g = detailed_balance_graph(5, 1.0, seed=9)
    # Weights propagated along a spanning path from vertex 0 by rate ratios.
    w = {0: F(1)}
    frontier = [0]
    while frontier:
        u = frontier.pop()
        for k in range(g.pair_count):
            a, b = g.ends(k)
            fwd, bwd = g.rates(k)
            if a == u and b not in w:
                w[b] = w[u] * fwd / bwd
                frontier.append(b)
            elif b == u and a not in w:
                w[a] = w[u] * bwd / fwd
                frontier.append(a)
    total = sum(w.values())
    assert list(stationary(g)) == [w[v] / total for v in range(g.n)]


def test_fundamental_cycles():
    assert len(fundamental_cycles(kite())) == 2
    assert len(fundamental_cycles(biased_cycle())) == 1


def test_kite_random_rates_cross_check():
    rng = random.Random(1)
    g = kite()
    g = g.with_rates({e: F(rng.randint(1, 20), rng.randint(1, 20)) for e in g.edges()})
    assert stationary(g).cross_checked


# -- one input pair --------------------------------------------------------------------------


@settings(max_examples=30)
@given(graphs_with_free_pair(3, 7))
def test_z_vector_signs(gp):
    g, k = gp
    z = z_vectors(g, k)
    assert z.z1[0] == 0
    assert z.z0[0] > 0 and z.z0[1] > 0 and z.z0[2] > 0
    assert z.z1[1] > 0 and z.z1[2] < 0


def test_z_vectors_reproduce_currents_kite():
    rng = random.Random(7)
    g = kite()
    g = g.with_rates({e: F(rng.randint(1, 20), rng.randint(1, 20)) for e in g.edges()})
    z = z_vectors(g, 0)
    for fwd, bwd in rate_samples(rng, 5):
        h = _with_pair_rates(g, {0: (fwd, bwd)})
        j = currents_direct(h)
        for e in range(g.pair_count):
            assert z.current(e, fwd, bwd) == j[e]


@settings(max_examples=25)
@given(graphs_with_free_pair(3, 7), st.integers(0, 10 ** 6))
def test_linearity_exact(gp, seed):
    g, k = gp
    lam = lambda_coefficients(g, k)
    assert lam.coefficients[k] == (0, 1)
    rep = verify_linearity(g, k, rate_samples(random.Random(seed), 5), lam)
    assert rep["ok"] and rep["max_residual"] == 0 and rep["samples"] == 5


@settings(max_examples=20)
@given(graphs_with_free_pair(3, 7))
def test_determinant_vanishes(gp):
    g, k = gp
    z = z_vectors(g, k)
    for ze in z.ze.values():
        assert det([[z.z0[i], z.z1[i], ze[i]] for i in range(3)]) == 0


@settings(max_examples=15)
@given(graphs_with_free_pair(3, 6), st.integers(1, 9), st.integers(1, 9))
def test_lambda_independent_of_input_rates(gp, a, b):
    g, k = gp
    base = lambda_coefficients(g, k).coefficients
    for scale in (F(a), F(1, b), F(a, b)):
        fwd, bwd = g.rates(k)
        h = _with_pair_rates(g, {k: (fwd * scale, bwd * F(b))})
        assert lambda_coefficients(h, k).coefficients == base


@settings(max_examples=15)
@given(graphs_with_free_pair(3, 6))
def test_lambda0_is_current_at_stall(gp):
    g, k = gp
    lam = lambda_coefficients(g, k)
    stalled = _with_pair_rates(g, {k: (0, 0)})
    j0 = currents_direct(stalled)
    z = z_vectors(g, k)
    for e in range(g.pair_count):
        assert lam.coefficients[e][0] == j0[e] == z.ze[e][0] / z.z0[0]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_lambda0_vanishes_when_balanced_at_stall(seed):
    g, k = balanced_at_stall(6, seed=seed)
    assert any(x != 0 for x in currents(g))
    assert all(c[0] == 0 for c in lambda_coefficients(g, k).coefficients.values())


def test_joint_scaling_samples():
    g = complete_rational_corpus(1, 5, seed=3)[0]
    fwd, bwd = g.rates(0)
    samples = [(fwd * c, bwd * c) for c in (F(1, 2), F(2), F(7, 3))]
    assert verify_linearity(g, 0, samples)["max_residual"] == 0


def test_float_linearity():
    g = load_fixture("six_vertex")
    rep = verify_linearity(g, 0, [(0.7, 1.9), (2.5, 0.6), (1.1, 1.1)])
    assert rep["ok"] and rep["max_residual"] < 1e-9


@settings(max_examples=10)
@given(graphs_with_free_pair(3, 6), st.integers(0, 10 ** 6))
def test_no_quadratic_term(gp, seed):
    g, k = gp
    rng = random.Random(seed)
    (a, b), (a2, b2) = rate_samples(rng, 2)
    for diffs in quadratic_term_check(g, k, [(a, a2, b, b2)]):
        assert all(d == 0 for d in diffs)


def test_identity_violation_detected(monkeypatch):
    import treesurgeon.markov as markov

    g = complete_rational_corpus(1, 5, seed=8)[0]
    real = markov.sigma_vector

    def skewed(*args, **kwargs):
        s = real(*args, **kwargs)
        return type(s)(s.pair, s.extra, s.empty * 2, s.plus, s.minus)

    monkeypatch.setattr(markov, "sigma_vector", skewed)
    with pytest.raises(IdentityViolation):
        lambda_coefficients(g, 0)


def test_bridge_input_rejected():
    g = parse_graph("a b 1 1\nb c 1 1\nc a 1 1\nc d 2 3")
    with pytest.raises(BridgePinned):
        lambda_coefficients(g, 3)


# -- two input pairs --------------------------------------------------------------------------


@pytest.fixture(scope="module")
def k9():
    return complete_rational_corpus(1, 9, seed=23)[0]


def test_mu_identity_for_input(k9):
    mu = mu_coefficients(k9, 0, 35, backend="det")
    assert mu.coefficients[0] == (0, 1, 0)
    assert mu.coefficients[35] == (0, 0, 1)
    assert mu.certificate.rank == 3
    assert mu.subsystem_rows is not None


def test_mu_linearity_k9(k9):
    rng = random.Random(5)
    samples = [a + b for a, b in zip(rate_samples(rng, 4), rate_samples(rng, 4))]
    mu = mu_coefficients(k9, 0, 35, backend="det")
    rep = verify_mu_linearity(k9, 0, 35, samples, mu, backend="det")
    assert rep["ok"] and rep["max_residual"] == 0 and rep["samples"] == 4


def test_mu_small_graph():
    g = complete_rational_corpus(1, 5, seed=4)[0]
    rng = random.Random(2)
    samples = [a + b for a, b in zip(rate_samples(rng, 3), rate_samples(rng, 3))]
    assert verify_mu_linearity(g, 0, 9, samples)["ok"]


def test_mu_rank_deficient_reports_certificate(monkeypatch):
    import treesurgeon.markov as markov

    g = complete_rational_corpus(1, 5, seed=4)[0]
    real = markov.linear_forms

    def degenerate(*args, **kwargs):
        w0, forms = real(*args, **kwargs)
        forms = dict(forms)
        forms[9] = [2 * x for x in forms[0]]
        return w0, forms

    monkeypatch.setattr(markov, "linear_forms", degenerate)
    with pytest.raises(RankDeficient) as info:
        mu_coefficients(g, 0, 9)
    assert info.value.certificate.rank == 2
    assert info.value.certificate.vector_dim == 9
