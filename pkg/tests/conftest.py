import os
import sys
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from treesurgeon.graph import WeightedDigraph, random_graph  # noqa: E402

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=300, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@st.composite
def rational_graphs(draw, n_min=3, n_max=6, top=30):
    """Random irreducible exact graphs, built from drawn structure and rates."""
    n = draw(st.integers(n_min, n_max))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    density = draw(st.floats(0.0, 1.0))
    return random_graph(n, density, f"rational:{top}", seed=seed)


@st.composite
def graphs_with_free_pair(draw, n_min=3, n_max=6):
    """A graph and a pair whose removal keeps it irreducible."""
    from treesurgeon.graph import stays_connected_without

    g = draw(rational_graphs(n_min, n_max))
    free = [k for k in range(g.pair_count) if stays_connected_without(g, [k])]
    if not free:
        # Add a chord so that some pair becomes removable.
        pairs = g.pair_list()
        used = {(u, v) for u, v, _, _ in pairs}
        extra = next((u, v) for u in range(g.n) for v in range(u + 1, g.n) if (u, v) not in used)
        g = WeightedDigraph(g.labels, pairs + [(extra[0], extra[1], Fraction(2), Fraction(3))])
        free = [k for k in range(g.pair_count) if stays_connected_without(g, [k])]
    return g, draw(st.sampled_from(free))


@pytest.fixture
def kite():
    from treesurgeon.fixtures import kite as load

    return load()


@pytest.fixture
def frozen():
    from oracles import load_frozen

    return load_frozen()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
