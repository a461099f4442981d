"""Finite weighted graphs, intrinsic shortest-path metric, base measures and jump-rate kernels.

The model underlying the whole library: an undirected, connected, loop-free
graph with edge lengths >= 1, the all-pairs intrinsic distance induced by
those lengths, a strictly positive base measure on vertices, and a
time-homogeneous jump-rate kernel supported exactly on the edges.  Everything
downstream (geodesic DAGs, bridge dynamics, transport plans) is expressed in
terms of these four objects.

All numeric code in this module is generic over the number type: graphs built
with ``int``/``fractions.Fraction`` lengths stay exact through the distance
computation, graphs built with floats use float arithmetic.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Graph",
    "DistanceMatrix",
    "BaseMeasure",
    "RateKernel",
    "GraphError",
    "DisconnectedGraphError",
    "intrinsic_distance",
    "tighten_edge_lengths",
    "build_simple_walk",
    "build_reversible_walk",
    "check_detailed_balance",
    "validate_hypotheses",
    "BalanceReport",
    "HypothesesReport",
]


class GraphError(ValueError):
    """Invalid graph data."""


class DisconnectedGraphError(GraphError):
    """The graph is not connected, so no intrinsic metric exists."""


def is_exact_number(x) -> bool:
    """True for numbers that support exact arithmetic (int, Fraction)."""
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


class Graph:
    """Undirected finite graph with positive edge lengths.

    Parameters
    ----------
    vertices : sequence of hashable vertex identifiers (strings in files);
        the given order fixes the internal integer indexing.
    edges : iterable of ``(u, v)`` or ``(u, v, length)``; length defaults
        to 1.  Edges are undirected; duplicates must agree on length.

    The constructor is permissive about the standing hypotheses (a self-loop
    or a length < 1 can be represented) so that `validate_hypotheses` can
    report the violation; it only rejects structurally broken input.
    """

    def __init__(self, vertices: Sequence, edges: Iterable):
        self.ids = tuple(vertices)
        if len(set(self.ids)) != len(self.ids):
            raise GraphError("duplicate vertex identifiers")
        self.index = {v: i for i, v in enumerate(self.ids)}
        self.n = len(self.ids)
        lengths: dict[tuple[int, int], object] = {}
        adj: list[set[int]] = [set() for _ in range(self.n)]
        self._self_loops: list[int] = []
        for e in edges:
            if len(e) == 2:
                u, v = e
                ln = 1
            elif len(e) == 3:
                u, v, ln = e
            else:
                raise GraphError(f"edge entries are (u, v) or (u, v, length); got {e!r}")
            try:
                i, j = self.index[u], self.index[v]
            except KeyError as exc:
                raise GraphError(f"edge endpoint {exc.args[0]!r} not a declared vertex")
            if not ln > 0:
                raise GraphError(f"edge ({u!r}, {v!r}) has nonpositive length {ln!r}")
            if i == j:
                self._self_loops.append(i)
                continue
            key = (min(i, j), max(i, j))
            if key in lengths and lengths[key] != ln:
                raise GraphError(f"conflicting lengths for edge ({u!r}, {v!r})")
            lengths[key] = ln
            adj[i].add(j)
            adj[j].add(i)
        self._lengths = lengths
        self.adj = tuple(tuple(sorted(s)) for s in adj)

    @property
    def exact(self) -> bool:
        return all(is_exact_number(ln) for ln in self._lengths.values())

    def degree(self, i: int) -> int:
        return len(self.adj[i])

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self._lengths

    def edge_length(self, i: int, j: int):
        return self._lengths[(min(i, j), max(i, j))]

    def edges(self):
        """Iterate ``(i, j, length)`` with i < j."""
        for (i, j), ln in sorted(self._lengths.items()):
            yield i, j, ln

    def has_self_loop(self) -> bool:
        return bool(self._self_loops)

    def is_connected(self) -> bool:
        if self.n == 0:
            return False
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for j in self.adj[i]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == self.n

    def with_lengths(self, lengths: Mapping[tuple[int, int], object]) -> "Graph":
        """Copy of this graph with edge lengths replaced (keys (i, j), i < j)."""
        edges = [(self.ids[i], self.ids[j], lengths[(i, j)]) for (i, j) in sorted(lengths)]
        return Graph(self.ids, edges)

    def __repr__(self):
        return f"Graph({self.n} vertices, {len(self._lengths)} edges)"


class DistanceMatrix:
    """Dense all-pairs distance table, exact when built from exact lengths."""

    def __init__(self, values: list[list], exact: bool):
        self.values = values
        self.exact = exact
        self.n = len(values)

    def d(self, i: int, j: int):
        return self.values[i][j]

    def as_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.values], dtype=float)

    def max(self):
        return max(max(row) for row in self.values)


def _dijkstra(graph: Graph, source: int) -> list:
    dist = [None] * graph.n
    dist[source] = 0
    heap = [(0, source)]
    while heap:
        dz, z = heapq.heappop(heap)
        if dist[z] is not None and dz > dist[z]:
            continue
        for w in graph.adj[z]:
            cand = dz + graph.edge_length(z, w)
            if dist[w] is None or cand < dist[w]:
                dist[w] = cand
                heapq.heappush(heap, (cand, w))
    return dist


def intrinsic_distance(graph: Graph) -> DistanceMatrix:
    """All-pairs shortest-path metric under the edge lengths.

    Raises `DisconnectedGraphError` when some pair is unreachable
    (irreducibility violation).
    """
    rows = []
    for s in range(graph.n):
        row = _dijkstra(graph, s)
        if any(x is None for x in row):
            raise DisconnectedGraphError("graph is disconnected; no finite metric")
        rows.append(row)
    return DistanceMatrix(rows, graph.exact)


def tighten_edge_lengths(graph: Graph) -> tuple[Graph, list[str]]:
    """Replace each edge length by the shortest-path distance between its ends.

    Input lengths may fail to be intrinsic (a multi-hop route shorter than the
    direct edge).  The output graph satisfies d(x, y) = edge_length(x, y) on
    every edge; one warning string is emitted per tightened edge.  Applying
    the operation twice is a fixed point.
    """
    dist = intrinsic_distance(graph)
    new_lengths = {}
    warnings = []
    for i, j, ln in graph.edges():
        d = dist.d(i, j)
        if d < ln:
            warnings.append(
                f"edge ({graph.ids[i]!r}, {graph.ids[j]!r}) length {ln} exceeds "
                f"shortest-path distance {d}; tightened"
            )
            new_lengths[(i, j)] = d
        else:
            new_lengths[(i, j)] = ln
    if not warnings:
        return graph, []
    return graph.with_lengths(new_lengths), warnings


class BaseMeasure:
    """Strictly positive mass per vertex (same order as ``graph.ids``)."""

    def __init__(self, values):
        self.values = tuple(values)
        if any(not (v > 0) for v in self.values):
            raise GraphError("base measure must be strictly positive")

    def __getitem__(self, i: int):
        return self.values[i]

    def __len__(self):
        return len(self.values)

    @property
    def total(self):
        return sum(self.values)

    @property
    def exact(self) -> bool:
        return all(is_exact_number(v) for v in self.values)

    def as_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.values], dtype=float)


class RateKernel:
    """Time-homogeneous jump rates; support must equal the neighbour sets."""

    def __init__(self, rates: Sequence[Mapping[int, object]]):
        self.rates = tuple(dict(r) for r in rates)
        self.n = len(self.rates)
        for z, row in enumerate(self.rates):
            for w, r in row.items():
                if not r > 0:
                    raise GraphError(f"rate {z}->{w} must be positive, got {r!r}")

    def rate(self, z: int, w: int):
        return self.rates[z].get(w, 0)

    def total_rate(self, z: int):
        """Global jump intensity out of z."""
        return sum(self.rates[z].values())

    @property
    def max_total_rate(self):
        """Uniform bound on the jump intensities (finite on a finite graph)."""
        return max((self.total_rate(z) for z in range(self.n)), default=0)

    @property
    def exact(self) -> bool:
        return all(is_exact_number(r) for row in self.rates for r in row.values())

    def matrix(self) -> np.ndarray:
        out = np.zeros((self.n, self.n), dtype=float)
        for z, row in enumerate(self.rates):
            for w, r in row.items():
                out[z, w] = float(r)
        return out

    def supports_adjacency(self, graph: Graph) -> bool:
        return all(set(self.rates[z]) == set(graph.adj[z]) for z in range(self.n))

    def __repr__(self):
        return f"RateKernel({self.n} vertices, max total rate {float(self.max_total_rate):g})"


def build_simple_walk(graph: Graph) -> tuple[RateKernel, BaseMeasure]:
    """The simple walk: rate 1/n_x towards each neighbour, reversed by m_x = n_x.

    The degree measure plays the role of the volume measure on the graph.
    Rates are exact rationals so the kernel can feed the exact-arithmetic
    bridge computations.
    """
    rates = []
    for z in range(graph.n):
        deg = graph.degree(z)
        if deg == 0:
            raise GraphError(f"vertex {graph.ids[z]!r} is isolated")
        rates.append({w: Fraction(1, deg) for w in graph.adj[z]})
    m = BaseMeasure(tuple(graph.degree(z) for z in range(graph.n)))
    return RateKernel(rates), m


def build_reversible_walk(graph: Graph, m: BaseMeasure, s) -> RateKernel:
    """Reversible kernel J_x(y) = s(x,y) / sqrt(n_x n_y) * sqrt(m_y / m_x).

    ``s`` is either a positive scalar or a mapping ``(i, j) -> value`` (any
    key order) with symmetric positive values on the edges.  Detailed balance
    m_x J_x(y) = m_y J_y(x) holds by construction.
    """
    if len(m) != graph.n:
        raise GraphError("base measure size does not match vertex count")

    def s_val(i, j):
        if isinstance(s, Mapping):
            key = (min(i, j), max(i, j))
            if key not in s:
                raise GraphError(f"missing symmetric weight for edge {key}")
            return s[key]
        return s

    rates = []
    for z in range(graph.n):
        row = {}
        for w in graph.adj[z]:
            sv = s_val(z, w)
            if not sv > 0:
                raise GraphError(f"symmetric weight on edge ({z}, {w}) must be positive")
            row[w] = (
                float(sv)
                / math.sqrt(graph.degree(z) * graph.degree(w))
                * math.sqrt(float(m[w]) / float(m[z]))
            )
        rates.append(row)
    return RateKernel(rates)


@dataclass(frozen=True)
class BalanceReport:
    max_residual: float
    tol: float
    passed: bool


def check_detailed_balance(kernel: RateKernel, m: BaseMeasure, tol: float = 1e-12) -> BalanceReport:
    """Max over ordered edges of |m_x J_x(y) - m_y J_y(x)| against ``tol``."""
    worst = 0.0
    for z in range(kernel.n):
        for w, r in kernel.rates[z].items():
            res = abs(float(m[z]) * float(r) - float(m[w]) * float(kernel.rate(w, z)))
            worst = max(worst, res)
    return BalanceReport(max_residual=worst, tol=tol, passed=worst <= tol)


@dataclass
class HypothesesReport:
    """One boolean per standing-hypothesis clause, plus the rate bound."""

    no_self_loops: bool = True
    irreducible: bool = True
    locally_finite: bool = True
    distance_lower_bound: bool = True
    distance_intrinsic: bool = True
    kernel_support: bool = True
    kernel_bounded: bool = True
    measure_positive: bool = True
    max_total_rate: float = 0.0
    messages: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            self.no_self_loops
            and self.irreducible
            and self.locally_finite
            and self.distance_lower_bound
            and self.distance_intrinsic
            and self.kernel_support
            and self.kernel_bounded
            and self.measure_positive
        )

    def failed_clauses(self) -> list[str]:
        names = {
            "no_self_loops": "(~) no self-loops",
            "irreducible": "(~) irreducible",
            "locally_finite": "(~) locally finite",
            "distance_lower_bound": "(d) d(x,y) >= 1",
            "distance_intrinsic": "(d) intrinsic",
            "kernel_support": "(R) support = neighbours",
            "kernel_bounded": "(R) rates uniformly bounded",
            "measure_positive": "(m) positivity",
        }
        return [label for attr, label in names.items() if not getattr(self, attr)]


def validate_hypotheses(
    graph: Graph,
    metric: DistanceMatrix | None = None,
    kernel: RateKernel | None = None,
    m: BaseMeasure | None = None,
) -> HypothesesReport:
    """Check the standing hypotheses; failures are reported, never raised."""
    rep = HypothesesReport()
    if graph.has_self_loop():
        rep.no_self_loops = False
        rep.messages.append("graph contains a self-loop")
    if not graph.is_connected():
        rep.irreducible = False
        rep.messages.append("graph is disconnected")
    for z in range(graph.n):
        if graph.degree(z) == 0:
            rep.locally_finite = False
            rep.messages.append(f"vertex {graph.ids[z]!r} has no neighbour")
    for i, j, ln in graph.edges():
        if ln < 1:
            rep.distance_lower_bound = False
            rep.messages.append(
                f"edge ({graph.ids[i]!r}, {graph.ids[j]!r}) has length {ln} < 1"
            )
    if metric is not None:
        for i, j, ln in graph.edges():
            if metric.d(i, j) != ln:
                rep.distance_intrinsic = False
                rep.messages.append(
                    f"edge ({graph.ids[i]!r}, {graph.ids[j]!r}) length {ln} differs "
                    f"from distance {metric.d(i, j)}; run tighten_edge_lengths"
                )
        for i in range(graph.n):
            for j in range(graph.n):
                if i != j and metric.d(i, j) < 1:
                    rep.distance_lower_bound = False
    if kernel is not None:
        if kernel.n != graph.n:
            rep.kernel_support = False
            rep.messages.append("kernel size does not match vertex count")
        elif not kernel.supports_adjacency(graph):
            rep.kernel_support = False
            rep.messages.append("kernel support differs from the neighbour sets")
        rep.max_total_rate = float(kernel.max_total_rate)
        rep.kernel_bounded = math.isfinite(rep.max_total_rate)
    if m is not None:
        if len(m) != graph.n:
            rep.measure_positive = False
            rep.messages.append("base measure size does not match vertex count")
        elif any(not (v > 0) for v in m.values):
            rep.measure_positive = False
            rep.messages.append("base measure has a nonpositive entry")
    return rep
