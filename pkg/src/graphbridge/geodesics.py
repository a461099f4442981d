"""Piecewise-constant paths, their discrete length, and the geodesic DAG.

A path on the graph is constant between finitely many jumps across edges; its
discrete length is the sum of the step distances, and it is a geodesic when
that length equals the distance between its endpoints.  For a fixed ordered
pair (x, y) the states visited by geodesics, together with the allowed
transitions, form a directed acyclic graph layered by the distance from x.
Geodesics are never enumerated as paths (their number grows factorially);
every downstream quantity is a dynamic program on this DAG.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graphs import DistanceMatrix, Graph

__all__ = [
    "DiscretePath",
    "InvalidPathError",
    "GeodesicDag",
    "ChainStats",
    "path_length",
    "is_geodesic",
    "geodesic_dag",
    "chain_statistics",
]

# chain counts beyond this are reported as saturated (they stay exact ints)
SATURATION_LIMIT = 2**63 - 1


class InvalidPathError(ValueError):
    """Jump times out of order or a jump between non-adjacent states."""


class DiscretePath:
    """Right-continuous piecewise-constant path on [0, 1] with finitely many jumps.

    ``jumps`` is a sequence of ``(time, new_state)`` with strictly increasing
    times in (0, 1); consecutive states must be adjacent in ``graph``.  A
    ``graph`` of None skips the adjacency check (used by the exact simulator,
    whose jumps are drawn from an edge-supported kernel by construction).
    """

    def __init__(self, graph: Graph | None, start: int, jumps=()):
        self.graph = graph
        self.start = start
        self.jumps = tuple((t, z) for t, z in jumps)
        prev_t, prev_z = 0.0, start
        for t, z in self.jumps:
            if not (0.0 < t < 1.0) or t <= prev_t:
                raise InvalidPathError(f"jump times must increase strictly inside (0,1); got {t}")
            if z == prev_z:
                raise InvalidPathError(f"jump at t={t} does not change the state")
            if graph is not None and not graph.has_edge(prev_z, z):
                raise InvalidPathError(
                    f"jump {graph.ids[prev_z]!r} -> {graph.ids[z]!r} is not an edge"
                )
            prev_t, prev_z = t, z

    @property
    def states(self) -> tuple:
        """Visited state sequence, including the initial state."""
        return (self.start,) + tuple(z for _, z in self.jumps)

    @property
    def jump_count(self) -> int:
        return len(self.jumps)

    @property
    def end(self) -> int:
        return self.states[-1]

    def state_at(self, t: float) -> int:
        z = self.start
        for s, w in self.jumps:
            if s <= t:
                z = w
            else:
                break
        return z

    def __repr__(self):
        if self.graph is not None:
            seq = "->".join(str(self.graph.ids[z]) for z in self.states)
        else:
            seq = "->".join(str(z) for z in self.states)
        return f"DiscretePath({seq})"


def path_length(path: DiscretePath, metric: DistanceMatrix):
    """Discrete length: sum of the step distances over the jumps."""
    states = path.states
    return sum(metric.d(states[i], states[i + 1]) for i in range(len(states) - 1))


def is_geodesic(path: DiscretePath, metric: DistanceMatrix) -> bool:
    """True iff the discrete length equals the endpoint distance (0 for x = y)."""
    return path_length(path, metric) == metric.d(path.start, path.end)


@dataclass(frozen=True)
class GeodesicDag:
    """Directed acyclic structure of the states visited by (x, y)-geodesics.

    ``layer[z]`` is the distance from the source; every directed edge z -> w
    satisfies layer[w] = layer[z] + d(z, w), so sorting nodes by
    (layer, index) is a topological order.  Diamond configurations occur (the
    structure is a DAG, not a tree).
    """

    source: int
    target: int
    nodes: tuple[int, ...]
    layer: dict
    succ: dict
    pred: dict

    @property
    def edge_count(self) -> int:
        return sum(len(s) for s in self.succ.values())

    def edges(self):
        for z in self.nodes:
            for w in self.succ[z]:
                yield z, w


def _dag_tol(metric: DistanceMatrix, dxy):
    # exact inputs compare exactly; floats get a tolerance scaled to the distance
    if metric.exact:
        return 0
    return 1e-9 * max(1.0, float(dxy))


def geodesic_dag(x: int, y: int, graph: Graph, metric: DistanceMatrix) -> GeodesicDag:
    """Build the geodesic DAG from x to y (single node when x = y).

    Nodes are the states z with d(x,z) + d(z,y) = d(x,y); edges are the
    adjacent pairs realizing the distance split exactly.  Nodes not lying on
    a full x -> y chain are pruned (a no-op in exact arithmetic, a safety net
    under float tolerances).
    """
    dxy = metric.d(x, y)
    if x == y:
        return GeodesicDag(x, y, (x,), {x: 0}, {x: ()}, {x: ()})
    tol = _dag_tol(metric, dxy)
    nodes = [
        z
        for z in range(graph.n)
        if abs(metric.d(x, z) + metric.d(z, y) - dxy) <= tol
    ]
    node_set = set(nodes)
    succ = {z: [] for z in nodes}
    pred = {z: [] for z in nodes}
    for z in nodes:
        for w in graph.adj[z]:
            if w in node_set and abs(
                metric.d(x, z) + graph.edge_length(z, w) + metric.d(w, y) - dxy
            ) <= tol:
                succ[z].append(w)
                pred[w].append(z)

    # prune to states on at least one x -> y chain
    fwd = _reachable(x, succ)
    bwd = _reachable(y, pred)
    keep = fwd & bwd
    nodes = [z for z in nodes if z in keep]
    layer = {z: metric.d(x, z) for z in nodes}
    nodes.sort(key=lambda z: (layer[z], z))
    succ = {z: tuple(sorted(w for w in succ[z] if w in keep)) for z in nodes}
    pred = {z: tuple(sorted(w for w in pred[z] if w in keep)) for z in nodes}
    return GeodesicDag(x, y, tuple(nodes), layer, succ, pred)


def _reachable(start: int, out_edges: dict) -> set:
    seen = {start}
    stack = [start]
    while stack:
        z = stack.pop()
        for w in out_edges.get(z, ()):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


@dataclass(frozen=True)
class ChainStats:
    count: int
    max_length: int
    saturated: bool


def chain_statistics(dag: GeodesicDag) -> ChainStats:
    """Exact number of directed source -> target chains and the max jump count."""
    counts = {dag.target: 1}
    lengths = {dag.target: 0}
    for z in reversed(dag.nodes):
        if z == dag.target:
            continue
        counts[z] = sum(counts[w] for w in dag.succ[z])
        lengths[z] = 1 + max(lengths[w] for w in dag.succ[z])
    count = counts[dag.source]
    return ChainStats(count=count, max_length=lengths[dag.source], saturated=count > SATURATION_LIMIT)
