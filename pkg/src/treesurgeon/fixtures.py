"""Bundled graphs and reproducible random corpora.

The text fixtures live in ``treesurgeon/data``.  Corpora are generated on
demand from a root seed; graph ``i`` of a corpus always uses child seed
``i``, so a single failing graph can be regenerated in isolation.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from .graph import WeightedDigraph, complete_graph, parse_graph, random_graph

FIXTURES = ("kite", "biased_cycle", "six_vertex", "two_state")


def fixture_text(name: str) -> str:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
    return resources.files("treesurgeon").joinpath("data", f"{name}.txt").read_text()


def load_fixture(name: str) -> WeightedDigraph:
    return parse_graph(fixture_text(name))


def kite() -> WeightedDigraph:
    """Four vertices, five unit-rate pairs, pair 0 is ``b -> a``."""
    return load_fixture("kite")


def biased_cycle() -> WeightedDigraph:
    """Three-cycle with rate 3 one way round and rate 1 the other."""
    return load_fixture("biased_cycle")


def six_vertex() -> WeightedDigraph:
    """Complete float graph on six vertices with rates in ``[0.5, 3]``."""
    return load_fixture("six_vertex")


def six_vertex_family(seed: int) -> WeightedDigraph:
    """Fresh draw of the six-vertex complete graph with uniform rates."""
    return complete_graph(6, "uniform:0.5:3", seed=seed)


def complete_unit(n: int) -> WeightedDigraph:
    """Complete graph on ``n`` vertices with every rate equal to one."""
    return complete_graph(n, "unit")


def _child_seeds(seed: int, count: int) -> list[int]:
    return [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(count)]


def rational_corpus(count: int, n_min: int = 3, n_max: int = 8, seed: int = 0,
                    density: tuple[float, float] = (0.3, 0.9), top: int = 50) -> list[WeightedDigraph]:
    """``count`` random exact graphs with vertex counts in ``[n_min, n_max]``.

    Densities are drawn uniformly from ``density`` and rates are ratios of
    integers in ``1..top``.
    """
    out = []
    for s in _child_seeds(seed, count):
        rng = np.random.default_rng(s)
        n = int(rng.integers(n_min, n_max + 1))
        d = float(rng.uniform(*density))
        out.append(random_graph(n, d, f"rational:{top}", seed=s))
    return out


def random_pinned(g: WeightedDigraph, max_pins: int, seed: int) -> tuple[int, ...]:
    """Random sorted set of between one and ``max_pins`` distinct pairs."""
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, min(max_pins, g.pair_count) + 1))
    return tuple(sorted(int(x) for x in rng.choice(g.pair_count, size=k, replace=False)))


def complete_rational_corpus(count: int, n: int, seed: int = 0, top: int = 50) -> list[WeightedDigraph]:
    return [complete_graph(n, f"rational:{top}", seed=s) for s in _child_seeds(seed, count)]
