"""Conditioned rooted spanning-tree polynomials and Markov current linearity.

Submodules: :mod:`~treesurgeon.graph` (graphs), :mod:`~treesurgeon.trees`
(enumeration and surgery), :mod:`~treesurgeon.polynomials` (tree
polynomials and decompositions), :mod:`~treesurgeon.coplanarity` (sigma
vectors and rank certificates), :mod:`~treesurgeon.markov` (stationary
state, currents, linearity), :mod:`~treesurgeon.simulate` (jump-process
simulation) and :mod:`~treesurgeon.cli`.
"""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402
from .graph import WeightedDigraph, load_graph, parse_graph, random_graph  # noqa: E402
from .polynomials import decompose, decompose_all, tree_poly  # noqa: E402
from .trees import TreeConstraint, enumerate_rooted_trees, surgery  # noqa: E402

__all__ = [
    "BACKEND",
    "TreeConstraint",
    "WeightedDigraph",
    "__version__",
    "decompose",
    "decompose_all",
    "enumerate_rooted_trees",
    "load_graph",
    "parse_graph",
    "random_graph",
    "surgery",
    "tree_poly",
]
