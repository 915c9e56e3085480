"""Weighted directed graphs built from reversible edge pairs.

A graph is a list of vertex labels plus a list of *pairs*.  Pair ``k``
joins ``u`` and ``v``; its forward orientation ``+k`` is ``u -> v`` and
its backward orientation ``-k`` is ``v -> u``.  Each orientation has its
own rate; a zero rate means that orientation is absent.

Rates are either all :class:`fractions.Fraction` (exact mode) or all
``float`` (float mode).  Graphs are immutable.
"""

from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateEdge,
    GraphError,
    InvalidDensity,
    MalformedLine,
    NonpositiveRate,
    NotIrreducible,
    SelfLoop,
    UnknownEdge,
)

PLUS = 1
MINUS = -1

_INT_RE = re.compile(r"^[+-]?\d+$")
_FRAC_RE = re.compile(r"^[+-]?\d+/\d+$")


@dataclass(frozen=True)
class OrientedEdge:
    pair: int
    sign: int
    source: int
    target: int

    @property
    def key(self):
        """Sort key: pair id, then ``+`` before ``-``."""
        return (self.pair, 0 if self.sign == PLUS else 1)

    def __lt__(self, other):
        return self.key < other.key

    def reversed(self) -> "OrientedEdge":
        return OrientedEdge(self.pair, -self.sign, self.target, self.source)

    def __repr__(self):
        s = "+" if self.sign == PLUS else "-"
        return f"OrientedEdge({s}{self.pair}: {self.source}>{self.target})"


def parse_rate(token: str):
    """Parse one rate token.

    Integers and ``p/q`` give a ``Fraction``; anything with a decimal point
    or exponent gives a ``float``.
    """
    token = token.strip()
    if _INT_RE.match(token) or _FRAC_RE.match(token):
        try:
            return Fraction(token)
        except ZeroDivisionError:
            raise ValueError(f"zero denominator in {token!r}") from None
    value = float(token)
    return value


def format_rate(value) -> str:
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    text = repr(float(value))
    if not any(c in text for c in ".eEn"):
        text += ".0"
    return text


class WeightedDigraph:
    """Immutable weighted digraph over reversible pairs.

    Parameters
    ----------
    labels:
        Vertex labels; vertex ``i`` has label ``labels[i]``.
    pairs:
        Sequence of ``(u, v, rate_fwd, rate_bwd)`` with integer vertex ids.
    check_irreducible:
        Raise :class:`NotIrreducible` unless every vertex reaches every
        other one along positive-rate edges.
    """

    __slots__ = ("labels", "_ends", "_rates", "exact", "_out", "_index", "_hash")

    def __init__(self, labels: Sequence[str], pairs: Iterable[tuple], check_irreducible: bool = True):
        self.labels = tuple(str(x) for x in labels)
        n = len(self.labels)
        if len(set(self.labels)) != n:
            raise GraphError("vertex labels must be unique")
        ends, rates = [], []
        seen = set()
        for k, item in enumerate(pairs):
            u, v, fwd, bwd = item
            if not (0 <= u < n and 0 <= v < n):
                raise UnknownEdge(f"pair {k} references a vertex outside 0..{n - 1}")
            if u == v:
                raise SelfLoop(f"pair {k} is a self-loop on {self.labels[u]!r}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise DuplicateEdge(f"pair {self.labels[u]}-{self.labels[v]} appears twice")
            seen.add(key)
            if fwd < 0 or bwd < 0 or (fwd == 0 and bwd == 0):
                raise NonpositiveRate(
                    f"pair {self.labels[u]}-{self.labels[v]} needs a positive rate, got {fwd}, {bwd}")
            ends.append((u, v))
            rates.append((fwd, bwd))
        kinds = {isinstance(r, float) for pr in rates for r in pr if r != 0}
        if len(kinds) > 1:
            # Integers are exact in binary floating point, so promotion loses nothing
            # for them; a float anywhere puts the whole graph in float mode.
            rates = [(float(a), float(b)) for a, b in rates]
            kinds = {True}
        else:
            rates = [tuple(x if isinstance(x, float) else Fraction(x) for x in pr) for pr in rates]
        exact = kinds != {True}
        if not exact:
            rates = [(float(a), float(b)) for a, b in rates]
        self._setup(ends, rates, exact)
        if check_irreducible and not is_irreducible(self):
            raise NotIrreducible("graph is not strongly connected")

    def _setup(self, ends, rates, exact):
        self.exact = exact
        self._ends = tuple(ends)
        self._rates = tuple(tuple(r) for r in rates)
        out = [[] for _ in self.labels]
        index = {}
        for k, (u, v) in enumerate(self._ends):
            for sign, s, t, r in ((PLUS, u, v, self._rates[k][0]), (MINUS, v, u, self._rates[k][1])):
                if r != 0:
                    e = OrientedEdge(k, sign, s, t)
                    out[s].append(e)
                    index[(s, t)] = e
        self._out = tuple(tuple(sorted(es)) for es in out)
        self._index = index
        self._hash = None

    # -- basic accessors -------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def pair_count(self) -> int:
        return len(self._ends)

    def ends(self, pair: int) -> tuple[int, int]:
        """``(source(+pair), source(-pair))``."""
        self._check_pair(pair)
        return self._ends[pair]

    def rates(self, pair: int) -> tuple:
        self._check_pair(pair)
        return self._rates[pair]

    def rate(self, edge: OrientedEdge):
        fwd, bwd = self.rates(edge.pair)
        return fwd if edge.sign == PLUS else bwd

    def edge(self, pair: int, sign: int) -> OrientedEdge:
        """The oriented edge ``sign * pair`` (whether or not it has positive rate)."""
        u, v = self.ends(pair)
        return OrientedEdge(pair, sign, u, v) if sign == PLUS else OrientedEdge(pair, sign, v, u)

    def has_edge(self, edge: OrientedEdge) -> bool:
        return self.rate(edge) != 0

    def out_edges(self, v: int) -> tuple[OrientedEdge, ...]:
        return self._out[v]

    def edges(self) -> list[OrientedEdge]:
        return sorted(e for es in self._out for e in es)

    def find_edge(self, source: int, target: int) -> OrientedEdge:
        try:
            return self._index[(source, target)]
        except KeyError:
            raise UnknownEdge(f"no edge {self.labels[source]}>{self.labels[target]}") from None

    def vertex(self, label) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise UnknownEdge(f"unknown vertex {label!r}") from None

    def pair_between(self, a: int, b: int) -> int:
        for k, (u, v) in enumerate(self._ends):
            if {u, v} == {a, b}:
                return k
        raise UnknownEdge(f"no pair between {self.labels[a]} and {self.labels[b]}")

    def zero(self):
        return Fraction(0) if self.exact else 0.0

    def one(self):
        return Fraction(1) if self.exact else 1.0

    def _check_pair(self, pair):
        if not 0 <= pair < len(self._ends):
            raise UnknownEdge(f"unknown pair id {pair}")

    # -- derived graphs --------------------------------------------------

    def pair_list(self) -> list[tuple]:
        return [(u, v, a, b) for (u, v), (a, b) in zip(self._ends, self._rates)]

    def with_rates(self, updates: Mapping[OrientedEdge, object] | None = None, *,
                   check_irreducible: bool = False) -> "WeightedDigraph":
        """Copy of the graph with some oriented-edge rates replaced.

        Replacement values are coerced to the graph's arithmetic mode; a
        zero rate switches that orientation off.
        """
        rates = [list(r) for r in self._rates]
        for e, value in (updates or {}).items():
            rates[e.pair][0 if e.sign == PLUS else 1] = self._coerce(value)
        return _raw_graph(self.labels, self._ends, rates, self.exact, check_irreducible)

    def without_pairs(self, pairs: Iterable[int]) -> "WeightedDigraph":
        drop = set(pairs)
        keep = [p for k, p in enumerate(self.pair_list()) if k not in drop]
        return WeightedDigraph(self.labels, keep, check_irreducible=False)

    def to_float(self) -> "WeightedDigraph":
        if not self.exact:
            return self
        return _raw_graph(self.labels, self._ends, [(float(a), float(b)) for a, b in self._rates], False, False)

    def _coerce(self, value):
        if self.exact:
            if isinstance(value, float):
                raise TypeError("cannot put a float rate into an exact graph")
            return Fraction(value)
        return float(value)

    # -- comparisons -------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, WeightedDigraph):
            return NotImplemented
        return (self.labels, self._ends, self._rates, self.exact) == (
            other.labels, other._ends, other._rates, other.exact)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.labels, self._ends, self._rates))
        return self._hash

    def __repr__(self):
        mode = "exact" if self.exact else "float"
        return f"<WeightedDigraph {self.n} vertices, {self.pair_count} pairs, {mode}>"

    def edge_label(self, e: OrientedEdge) -> str:
        return f"{self.labels[e.source]}>{self.labels[e.target]}"

    def pair_label(self, pair: int) -> str:
        u, v = self.ends(pair)
        return f"{self.labels[u]}-{self.labels[v]}"


def _raw_graph(labels, ends, rates, exact, check):
    g = WeightedDigraph.__new__(WeightedDigraph)
    g.labels = tuple(labels)
    g._setup(ends, rates, exact)
    if check and not is_irreducible(g):
        raise NotIrreducible("graph is not strongly connected")
    return g


# -- connectivity ------------------------------------------------------------


def _reach(g: WeightedDigraph, start: int, forward: bool, skip: frozenset = frozenset()) -> set[int]:
    adj = [[] for _ in range(g.n)]
    for es in g._out:
        for e in es:
            if e.pair in skip:
                continue
            if forward:
                adj[e.source].append(e.target)
            else:
                adj[e.target].append(e.source)
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def is_irreducible(g: WeightedDigraph) -> bool:
    """True iff every ordered vertex pair is joined by a positive-rate path."""
    if g.n <= 1:
        return True
    return len(_reach(g, 0, True)) == g.n and len(_reach(g, 0, False)) == g.n


def stays_connected_without(g: WeightedDigraph, pinned: Iterable[int]) -> bool:
    """Irreducibility of ``g`` once both orientations of ``pinned`` are removed."""
    skip = frozenset(pinned)
    for p in skip:
        g._check_pair(p)
    if g.n <= 1:
        return True
    return len(_reach(g, 0, True, skip)) == g.n and len(_reach(g, 0, False, skip)) == g.n


# -- text and JSON formats -----------------------------------------------------


def parse_graph(text: str, check_irreducible: bool = True) -> WeightedDigraph:
    """Parse the edge-list format ``U V RATE_FWD RATE_BWD`` (one pair per line)."""
    labels: list[str] = []
    lookup: dict[str, int] = {}
    pairs = []
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise MalformedLine(lineno, raw)
        a, b, f, r = parts
        try:
            fwd, bwd = parse_rate(f), parse_rate(r)
        except ValueError:
            raise MalformedLine(lineno, raw, "unparseable rate") from None
        if a == b:
            raise SelfLoop(f"line {lineno}: self-loop on {a!r}")
        if fwd < 0 or bwd < 0 or (fwd == 0 and bwd == 0):
            raise NonpositiveRate(f"line {lineno}: rates must be >= 0 and not both zero")
        key = frozenset((a, b))
        if key in seen:
            raise DuplicateEdge(f"line {lineno}: pair {a}-{b} already given on line {seen[key]}")
        seen[key] = lineno
        for lab in (a, b):
            if lab not in lookup:
                lookup[lab] = len(labels)
                labels.append(lab)
        pairs.append((lookup[a], lookup[b], fwd, bwd))
    return WeightedDigraph(labels, pairs, check_irreducible=check_irreducible)


def parse_graph_json(doc, check_irreducible: bool = True) -> WeightedDigraph:
    """JSON form: ``{"vertices": [...]?, "pairs": [{"u", "v", "forward", "backward"}]}``.

    Rates may be JSON numbers or strings in the text format.
    """
    if isinstance(doc, str):
        doc = json.loads(doc)
    labels = [str(x) for x in doc.get("vertices", [])]
    lookup = {lab: i for i, lab in enumerate(labels)}
    pairs = []
    seen = set()
    for i, item in enumerate(doc["pairs"], start=1):
        try:
            a, b = str(item["u"]), str(item["v"])
            fwd, bwd = (_json_rate(item[k]) for k in ("forward", "backward"))
        except (KeyError, TypeError, ValueError):
            raise MalformedLine(i, json.dumps(item), "bad pair object") from None
        if a == b:
            raise SelfLoop(f"pair {i}: self-loop on {a!r}")
        key = frozenset((a, b))
        if key in seen:
            raise DuplicateEdge(f"pair {i}: {a}-{b} repeated")
        seen.add(key)
        for lab in (a, b):
            if lab not in lookup:
                lookup[lab] = len(labels)
                labels.append(lab)
        pairs.append((lookup[a], lookup[b], fwd, bwd))
    return WeightedDigraph(labels, pairs, check_irreducible=check_irreducible)


def _json_rate(x):
    if isinstance(x, bool):
        raise ValueError("bool is not a rate")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return x
    return parse_rate(str(x))


def load_graph(path, check_irreducible: bool = True) -> WeightedDigraph:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return parse_graph_json(text, check_irreducible)
    return parse_graph(text, check_irreducible)


def to_text(g: WeightedDigraph) -> str:
    lines = []
    for u, v, a, b in g.pair_list():
        lines.append(f"{g.labels[u]} {g.labels[v]} {format_rate(a)} {format_rate(b)}")
    return "\n".join(lines) + "\n"


def to_json(g: WeightedDigraph) -> dict:
    return {
        "vertices": list(g.labels),
        "pairs": [
            {"u": g.labels[u], "v": g.labels[v], "forward": format_rate(a), "backward": format_rate(b)}
            for u, v, a, b in g.pair_list()
        ],
    }


# -- random graphs ------------------------------------------------------------------


def make_rate_law(spec):
    """Turn a rate-law spec into ``f(rng) -> rate``.

    Accepted specs: ``"unit"``, ``"uniform:LO:HI"`` (floats),
    ``"rational:MAX"`` (``p/q`` with ``p, q`` uniform in ``1..MAX``),
    ``"integer:LO:HI"``, or any callable taking a numpy Generator.
    """
    if callable(spec):
        return spec
    name, *args = str(spec).split(":")
    if name == "unit":
        return lambda rng: Fraction(1)
    if name == "uniform":
        lo, hi = (float(a) for a in args) if args else (0.5, 3.0)
        return lambda rng: float(rng.uniform(lo, hi))
    if name == "rational":
        top = int(args[0]) if args else 1000
        return lambda rng: Fraction(int(rng.integers(1, top + 1)), int(rng.integers(1, top + 1)))
    if name == "integer":
        lo, hi = (int(a) for a in args) if args else (1, 10)
        return lambda rng: Fraction(int(rng.integers(lo, hi + 1)))
    raise ValueError(f"unknown rate law {spec!r}")


def random_graph(n: int, density: float, rate_law="rational:1000", seed: int = 0) -> WeightedDigraph:
    """Random irreducible graph of reversible pairs.

    A random spanning tree of pairs is always present; every other vertex
    couple becomes a pair with probability ``density``.  Both orientations
    of every pair get independent rates from ``rate_law``.
    """
    if n < 2:
        raise ValueError("need at least two vertices")
    if not 0.0 <= density <= 1.0:
        raise InvalidDensity(f"density must lie in [0, 1], got {density}")
    rng = np.random.default_rng(seed)
    law = make_rate_law(rate_law)
    order = rng.permutation(n)
    chosen = set()
    for i in range(1, n):
        j = int(rng.integers(0, i))
        a, b = int(order[i]), int(order[j])
        chosen.add((min(a, b), max(a, b)))
    for u in range(n):
        for v in range(u + 1, n):
            # Always consume a draw so the structure does not depend on the tree.
            if rng.random() < density:
                chosen.add((u, v))
    pairs = [(u, v, law(rng), law(rng)) for u, v in sorted(chosen)]
    return WeightedDigraph([str(i + 1) for i in range(n)], pairs)


def complete_graph(n: int, rate_law="rational:1000", seed: int = 0) -> WeightedDigraph:
    return random_graph(n, 1.0, rate_law, seed)
