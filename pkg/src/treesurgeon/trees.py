"""Rooted spanning trees: constrained enumeration and edge-swap surgery.

A rooted spanning tree is stored as its edge set; every non-root vertex
has exactly one out-edge and following out-edges always ends at the root.
The surgery exchanges edges between a tree rooted at ``x`` and a tree
rooted at ``y`` one pair at a time, passing through doubly-rooted trees,
until the roots have traded places.  The product of the two tree weights
is unchanged by every step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Iterable, Iterator

from ._backend import kernels
from .errors import (
    ConstraintMentionsPinned,
    InvalidConstraint,
    NotASwapConfiguration,
    SameRoot,
)
from .graph import OrientedEdge, WeightedDigraph


@dataclass(frozen=True)
class TreeConstraint:
    """Avoid-set and require-set of oriented edges."""

    avoid: frozenset = field(default_factory=frozenset)
    require: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "avoid", frozenset(self.avoid))
        object.__setattr__(self, "require", frozenset(self.require))
        if self.avoid & self.require:
            raise InvalidConstraint("an edge cannot be both avoided and required")
        for e in self.require:
            if e.reversed() in self.require:
                raise InvalidConstraint(f"both orientations of pair {e.pair} are required")

    def admits(self, edges: Iterable[OrientedEdge]) -> bool:
        edges = set(edges)
        return not (self.avoid & edges) and self.require <= edges

    def merged(self, other: "TreeConstraint") -> "TreeConstraint":
        return TreeConstraint(self.avoid | other.avoid, self.require | other.require)

    @property
    def pairs(self) -> set[int]:
        return {e.pair for e in self.avoid | self.require}

    def __bool__(self):
        return bool(self.avoid or self.require)


NO_CONSTRAINT = TreeConstraint()


@dataclass(frozen=True)
class RootedTree:
    root: int
    edges: frozenset

    def out_edge(self, v: int) -> OrientedEdge | None:
        for e in self.edges:
            if e.source == v:
                return e
        return None

    def weight(self, g: WeightedDigraph):
        return prod((g.rate(e) for e in self.edges), start=g.one())

    def sorted_edges(self) -> list[OrientedEdge]:
        return sorted(self.edges, key=lambda e: (e.source, e.key))


@dataclass(frozen=True)
class DoublyRootedTree:
    """Spanning tree with roots ``x, y`` and branching vertex ``branch``.

    ``branch == y`` is the degenerate start (a tree rooted at ``x``);
    ``branch == x`` is the degenerate end (a tree rooted at ``y``).
    """

    roots: tuple
    branch: int
    edges: frozenset

    @classmethod
    def from_rooted(cls, tree: RootedTree, other_root: int) -> "DoublyRootedTree":
        return cls((tree.root, other_root), other_root, tree.edges)

    @property
    def is_terminal(self) -> bool:
        return self.branch == self.roots[0]

    def as_rooted_tree(self) -> RootedTree:
        x, y = self.roots
        if self.branch == y:
            return RootedTree(x, self.edges)
        if self.branch == x:
            return RootedTree(y, self.edges)
        raise NotASwapConfiguration("a non-degenerate doubly-rooted tree is not a rooted tree")


# -- validation ----------------------------------------------------------------


def _out_lists(edges) -> dict[int, list[OrientedEdge]]:
    out: dict[int, list[OrientedEdge]] = {}
    for e in edges:
        out.setdefault(e.source, []).append(e)
    return out


def is_rooted_tree(edges: Iterable[OrientedEdge], n: int, root: int) -> bool:
    """Out-degree certificate plus reachability of the root from every vertex."""
    edges = list(edges)
    if len(edges) != n - 1 or len(set(edges)) != len(edges):
        return False
    out = _out_lists(edges)
    if root in out or any(len(v) != 1 for v in out.values()) or len(out) != n - 1:
        return False
    if any(e.reversed() in out.get(e.target, ()) for e in edges):
        return False
    for v in range(n):
        seen = set()
        while v != root:
            if v in seen or v not in out:
                return False
            seen.add(v)
            v = out[v][0].target
    return True


def is_doubly_rooted_tree(edges: Iterable[OrientedEdge], n: int, roots: tuple, branch: int) -> bool:
    x, y = roots
    edges = list(edges)
    out = _out_lists(edges)
    if branch in (x, y):
        other = y if branch == x else x
        return is_rooted_tree(edges, n, other)
    if len(edges) != n - 1 or x in out or y in out or len(out.get(branch, ())) != 2:
        return False
    if any(len(v) != 1 for s, v in out.items() if s != branch) or len(out) != n - 2:
        return False
    # Each branch edge must lead to a different root, and everything else to one of them.
    ends = set()
    for e in out[branch]:
        v, seen = e.target, set()
        while v not in (x, y):
            if v in seen or v == branch or v not in out:
                return False
            seen.add(v)
            v = out[v][0].target
        ends.add(v)
    if ends != {x, y}:
        return False
    for v in range(n):
        seen = set()
        while v not in (x, y, branch):
            if v in seen or v not in out:
                return False
            seen.add(v)
            v = out[v][0].target
    return True


# -- enumeration -----------------------------------------------------------------


def csr_table(g: WeightedDigraph, root: int, c: TreeConstraint = NO_CONSTRAINT):
    """Out-edge table honouring ``c``; ``None`` when no tree can qualify.

    Returns ``(starts, targets, slots)`` with ``slots[i]`` the oriented edge
    in slot ``i``.  Required edges are the only option for their source.
    """
    forced: dict[int, OrientedEdge] = {}
    for e in c.require:
        if not g.has_edge(e) or e.source == root or e.source in forced:
            return None
        forced[e.source] = e
    starts, targets, slots = [0], [], []
    for v in range(g.n):
        if v != root:
            options = [forced[v]] if v in forced else [e for e in g.out_edges(v) if e not in c.avoid]
            for e in options:
                targets.append(e.target)
                slots.append(e)
        starts.append(len(targets))
    return starts, targets, slots


def enumerate_rooted_trees(g: WeightedDigraph, root: int,
                           c: TreeConstraint = NO_CONSTRAINT) -> Iterator[RootedTree]:
    """Stream every tree rooted at ``root`` that avoids ``c.avoid`` and contains ``c.require``.

    Order is lexicographic in (vertex index, pair id, sign).
    """
    table = csr_table(g, root, c)
    if table is None:
        return
    starts, targets, slots = table
    for choice in kernels.iter_choices(g.n, root, starts, targets):
        yield RootedTree(root, frozenset(slots[i] for i in choice if i >= 0))


# -- surgery ---------------------------------------------------------------------


def _terminal(out: dict, v: int) -> int:
    while v in out:
        v = out[v][0].target
    return v


def swap_step(moving: DoublyRootedTree, fixed: RootedTree) -> tuple[DoublyRootedTree, RootedTree]:
    """One e/f exchange.

    ``moving`` has roots ``(x, y)`` and branch ``z``; ``fixed`` is rooted at
    ``z``.  The first edge ``e`` on the path ``z -> x`` in ``moving`` is
    removed, which splits the vertices into an ``x``-basin and the rest.
    Adding ``e`` to ``fixed`` closes the cycle ``target(e) -> z -> target(e)``;
    ``f`` is the last edge on that path which crosses between the basins.
    ``e`` and ``f`` trade places and the branch moves to the source of ``f``.
    """
    x, y = moving.roots
    z = moving.branch
    if z == x:
        raise NotASwapConfiguration("branch is already at the target root; surgery is complete")
    if fixed.root != z:
        raise NotASwapConfiguration(f"fixed tree must be rooted at the branch vertex {z}, not {fixed.root}")
    out = _out_lists(moving.edges)
    e = None
    for cand in out.get(z, ()):
        rest = {s: [d for d in es if d is not cand] for s, es in out.items()}
        rest = {s: es for s, es in rest.items() if es}
        if _terminal(rest, cand.target) == x:
            e = cand
            break
    if e is None:
        raise NotASwapConfiguration(f"no path from the branch {z} to root {x}")
    without_e = moving.edges - {e}
    out_e = _out_lists(without_e)
    basin_x = {v for v in _vertices(moving.edges, fixed.edges, x, y) if _terminal(out_e, v) == x}
    fout = {d.source: d for d in fixed.edges}
    f = None
    v = e.target
    while v != z:
        d = fout.get(v)
        if d is None:
            raise NotASwapConfiguration(f"fixed tree does not reach its root {z}")
        if (d.source in basin_x) != (d.target in basin_x):
            f = d
        v = d.target
    if f is None:
        raise NotASwapConfiguration("no basin-crossing edge on the cycle closed by e")
    new_fixed = RootedTree(f.source, (fixed.edges - {f}) | {e})
    new_moving = DoublyRootedTree((x, y), f.source, without_e | {f})
    return new_moving, new_fixed


def unswap_step(moving: DoublyRootedTree, fixed: RootedTree) -> tuple[DoublyRootedTree, RootedTree]:
    """Undo one :func:`swap_step`.

    With branch ``z'``, ``f`` is the branch edge that leads to ``y``.
    Removing it gives back the basins of the forward step, and ``e`` is the
    first basin-crossing edge on the path ``target(f) -> z'`` in ``fixed``.
    """
    x, y = moving.roots
    z = moving.branch
    if z == y:
        raise NotASwapConfiguration("branch is at the starting root; nothing to undo")
    if fixed.root != z:
        raise NotASwapConfiguration(f"fixed tree must be rooted at the branch vertex {z}, not {fixed.root}")
    out = _out_lists(moving.edges)
    f = None
    for cand in out.get(z, ()):
        rest = {s: [d for d in es if d is not cand] for s, es in out.items()}
        rest = {s: es for s, es in rest.items() if es}
        if _terminal(rest, cand.target) == y:
            f = cand
            break
    if f is None:
        raise NotASwapConfiguration(f"no path from the branch {z} to root {y}")
    without_f = moving.edges - {f}
    out_f = _out_lists(without_f)
    basin_x = {v for v in _vertices(moving.edges, fixed.edges, x, y) if _terminal(out_f, v) == x}
    fout = {d.source: d for d in fixed.edges}
    e = None
    v = f.target
    while v != z:
        d = fout.get(v)
        if d is None:
            raise NotASwapConfiguration(f"fixed tree does not reach its root {z}")
        if (d.source in basin_x) != (d.target in basin_x):
            e = d
            break
        v = d.target
    if e is None:
        raise NotASwapConfiguration("no basin-crossing edge on the cycle closed by f")
    return DoublyRootedTree((x, y), e.source, without_f | {e}), RootedTree(e.source, (fixed.edges - {e}) | {f})


def _vertices(a, b, *extra):
    vs = set(extra)
    for e in a:
        vs.add(e.source)
        vs.add(e.target)
    for e in b:
        vs.add(e.source)
        vs.add(e.target)
    return vs


def surgery(t_x: RootedTree, t_y: RootedTree, trace: list | None = None) -> tuple[RootedTree, RootedTree]:
    """Swap the roots of two trees while preserving the product of their weights.

    Returns ``(t'_y, t'_x)``: the first output is built from ``t_x``'s edges
    and is rooted at ``y``, the second is rooted at ``x``.  When ``trace`` is
    a list, each exchanged ``(e, f)`` is appended to it.
    """
    x, y = t_x.root, t_y.root
    if x == y:
        raise SameRoot(f"both trees are rooted at {x}")
    moving = DoublyRootedTree.from_rooted(t_x, y)
    fixed = t_y
    for _ in range(len(t_x.edges) + 2):
        if moving.is_terminal:
            return moving.as_rooted_tree(), fixed
        before = moving.edges
        moving, fixed = swap_step(moving, fixed)
        if trace is not None:
            (e,) = before - moving.edges
            (f,) = moving.edges - before
            trace.append((e, f))
    raise NotASwapConfiguration("surgery failed to terminate")


def inverse_surgery(t_y: RootedTree, t_x: RootedTree) -> tuple[RootedTree, RootedTree]:
    """Inverse of :func:`surgery`: ``inverse_surgery(*surgery(a, b)) == (a, b)``.

    ``t_y`` is the output rooted at ``y`` (built from the original ``x``-tree)
    and ``t_x`` the output rooted at ``x``.
    """
    y, x = t_y.root, t_x.root
    if x == y:
        raise SameRoot(f"both trees are rooted at {x}")
    moving = DoublyRootedTree((x, y), x, t_y.edges)
    fixed = t_x
    for _ in range(len(t_y.edges) + 2):
        if moving.branch == y:
            return RootedTree(x, moving.edges), fixed
        moving, fixed = unswap_step(moving, fixed)
    raise NotASwapConfiguration("inverse surgery failed to terminate")


def surgery_respects_constraints(t_x: RootedTree, t_y: RootedTree, c: TreeConstraint,
                                 pinned: Iterable[int] = ()) -> bool:
    """Check that surgery maps a pair of ``c``-admissible trees to another such pair.

    Inputs that do not both satisfy ``c`` are outside the claim and return
    ``True``.
    """
    pinned = set(pinned)
    if c.pairs & pinned:
        raise ConstraintMentionsPinned(f"constraint touches pinned pairs {sorted(c.pairs & pinned)}")
    if not (c.admits(t_x.edges) and c.admits(t_y.edges)):
        return True
    a, b = surgery(t_x, t_y)
    return c.admits(a.edges) and c.admits(b.edges)


# -- batch surgery on slot arrays -------------------------------------------------------


def slot_table(g: WeightedDigraph) -> tuple[list[int], list[int], list[OrientedEdge]]:
    """Every present oriented edge once, as ``(sources, targets, edges)``."""
    edges = [e for v in range(g.n) for e in g.out_edges(v)]
    return [e.source for e in edges], [e.target for e in edges], edges


def tree_slots(tree: RootedTree, index: dict, n: int) -> list[int]:
    """``out[v]`` = slot of the out-edge of ``v``; ``-1`` at the root."""
    out = [-1] * n
    for e in tree.edges:
        out[e.source] = index[e]
    return out


def slots_tree(row, root: int, edges: list[OrientedEdge]) -> RootedTree:
    return RootedTree(root, frozenset(edges[s] for s in row if s >= 0))


def surgery_batch(g: WeightedDigraph, trees_x: list[RootedTree], trees_y: list[RootedTree],
                  backend: str | None = None):
    """Apply :func:`surgery` to every pair from ``trees_x`` x ``trees_y`` in one kernel call.

    Returns slot arrays ``(out_y, out_x, flags, steps)`` plus the edge list
    that decodes slots; see ``_kernels_py.surgery_batch``.
    """
    from ._backend import get_kernels

    sources, targets, edges = slot_table(g)
    index = {e: i for i, e in enumerate(edges)}
    x, y = trees_x[0].root, trees_y[0].root
    if x == y:
        raise SameRoot(f"both tree lists are rooted at {x}")
    tx = [tree_slots(t, index, g.n) for t in trees_x]
    ty = [tree_slots(t, index, g.n) for t in trees_y]
    out = get_kernels(backend).surgery_batch(sources, targets, tx, ty, x, y)
    return (*out, edges)
