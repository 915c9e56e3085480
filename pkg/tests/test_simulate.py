import math

import numpy as np
import pytest

from treesurgeon.errors import NonfiniteRate, TooShort
from treesurgeon.fixtures import biased_cycle, kite, load_fixture
from treesurgeon.graph import parse_graph
from treesurgeon.markov import currents, detailed_balance_graph, stationary
from treesurgeon.simulate import (
    compare_currents,
    empirical_linearity,
    estimate_currents,
    estimate_occupation,
    horizon_for_jumps,
    mean_jump_rate,
    simulate,
    simulate_replicas,
)


def test_same_seed_same_statistics():
    g = biased_cycle()
    a = simulate(g, 2000.0, seed=11)
    b = simulate(g, 2000.0, seed=11)
    assert np.array_equal(a.occupation_time, b.occupation_time)
    assert np.array_equal(a.signed_crossings, b.signed_crossings)
    assert a.jumps == b.jumps
    c = simulate(g, 2000.0, seed=12)
    assert not np.array_equal(a.signed_crossings, c.signed_crossings)


def test_occupation_sums_to_total_time():
    s = simulate(kite(), 500.0, burn_in=50.0, seed=3)
    assert math.isclose(s.occupation_time.sum(), s.total_time, rel_tol=1e-12)
    assert math.isclose(s.batch_occupation.sum(), s.total_time, rel_tol=1e-12)
    assert s.batch_crossings.sum(axis=0).tolist() == s.signed_crossings.tolist()
    assert s.signed_crossings.dtype.kind == "i"
    assert s.n_batches == 20


def test_default_burn_in():
    s = simulate(kite(), 100.0, seed=0)
    assert s.burn_in == pytest.approx(5.0)


def test_two_state_occupation():
    g = load_fixture("two_state")
    s = simulate(g, horizon_for_jumps(g, 2e5), seed=5)
    frac, se = estimate_occupation(s)
    want = np.array([1 / 3, 2 / 3])
    assert np.all(np.abs(frac - want) < 5 * se)


def test_detailed_balance_no_net_crossing_rate():
    g = detailed_balance_graph(5, 0.8, seed=2)
    s = simulate(g, horizon_for_jumps(g, 2e5), seed=9)
    est = estimate_currents(s)
    assert all(abs(j) <= 5 * e for j, e in zip(est.values, est.errors))


def test_biased_cycle_current():
    g = biased_cycle()
    s = simulate(g, horizon_for_jumps(g, 2e5), seed=1)
    rows = compare_currents(s, currents(g))
    assert all(abs(r["z"]) < 4 for r in rows)
    assert all(r["analytic"] == pytest.approx(2 / 3) for r in rows)


def test_occupation_matches_stationary_kite():
    g = kite()
    s = simulate(g, horizon_for_jumps(g, 2e5), seed=21)
    frac, se = estimate_occupation(s)
    p = np.array([float(x) for x in stationary(g)])
    assert np.max(np.abs(frac - p) / se) < 5


def test_no_crossings_zero_current():
    g = parse_graph("a b 1 1")
    s = simulate(g, 1e-9, burn_in=0.0, seed=0)
    est = estimate_currents(s)
    assert est.values == (0.0,)


def test_standard_error_shrinks_with_horizon():
    g = biased_cycle()
    base = horizon_for_jumps(g, 2e4)
    errs = []
    for factor in (1, 4, 16):
        reps = simulate_replicas(g, base * factor, 3, seed=4, workers=1)
        errs.append(np.mean([estimate_currents(s).errors[0] for s in reps]))
    assert errs[0] > errs[1] > errs[2]


def test_too_short():
    with pytest.raises(TooShort):
        simulate(kite(), 10.0, burn_in=10.0)
    with pytest.raises(TooShort):
        simulate(kite(), 0.0)


def test_nonfinite_rate():
    g = parse_graph("a b 1e400 1\nb c 1 1\nc a 1 1")
    with pytest.raises(NonfiniteRate):
        simulate(g, 10.0)


def test_replicas_do_not_depend_on_workers():
    g = biased_cycle()
    one = simulate_replicas(g, 300.0, 3, seed=8, workers=1)
    two = simulate_replicas(g, 300.0, 3, seed=8, workers=2)
    for a, b in zip(one, two):
        assert np.array_equal(a.signed_crossings, b.signed_crossings)
        assert a.seed == b.seed
    assert not np.array_equal(one[0].signed_crossings, one[1].signed_crossings)


def test_backends_identical_trajectory():
    g = kite()
    a = simulate(g, 300.0, seed=6, kernels="python")
    b = simulate(g, 300.0, seed=6, kernels="auto")
    assert np.array_equal(a.signed_crossings, b.signed_crossings)
    assert np.allclose(a.occupation_time, b.occupation_time, rtol=1e-12)


def test_exact_graph_conversion_recorded():
    s = simulate(kite(), 10.0, seed=0)
    assert s.converted_from_exact
    assert s.to_dict(kite())["converted_from_exact"]


def test_mean_jump_rate_two_state():
    g = load_fixture("two_state")
    # p = (1/3, 2/3), exits 2 and 1.
    assert mean_jump_rate(g) == pytest.approx(4 / 3)


@pytest.mark.slow
def test_empirical_linearity_kite():
    g = kite()
    rep = empirical_linearity(g, 0, [(1, 1), (3, 1), (1, 4)], horizon_for_jumps(g, 2e5), seed=2)
    assert rep["max_abs_z"] < 4.5
