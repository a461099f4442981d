"""Exact dynamics of the geodesic bridge between two vertices.

Conditioning the reference walk on travelling along geodesics from x to y
(after the exponential reweighting that removes the holding-rate factor)
leaves a Markov bridge whose one-time laws are polynomials in t.  The
backward weight of a state z at time t is the rate-weighted count of
geodesic continuations z -> y, each n-jump chain contributing its rate
product times (1-t)^n / n!; the forward weight mirrors it from the source.
Each weight solves a triangular recursion on the geodesic DAG, so the fields
are computed exactly -- in rational arithmetic when the rates and the metric
are rational.

From the two fields everything follows in closed form: the bridge law at
time t, the bridge jump kernel (the Doob-transform rates), the two-time
joint laws, the endpoint mass table of the geodesic-restricted walk, and the
expected jump intensity along the bridge.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .geodesics import GeodesicDag, chain_statistics, geodesic_dag
from .graphs import BaseMeasure, DistanceMatrix, Graph, RateKernel

__all__ = [
    "BackwardField",
    "ForwardField",
    "BridgeFields",
    "backward_coefficients",
    "forward_coefficients",
    "bridge_fields",
    "bridge_marginal_exact",
    "bridge_jump_kernel",
    "bridge_mass_rate",
    "two_time_table",
    "geodesic_mass_to_target",
    "geodesic_endpoint_measure",
]


class _PolyField:
    """Per-node coefficient lists c_n(z); value(t, z) = sum_n c_n(z) u^n / n!."""

    def __init__(self, dag: GeodesicDag, coeffs: dict, reverse_time: bool):
        self.dag = dag
        self.coeffs = coeffs
        self.reverse_time = reverse_time  # evaluate in u = 1 - t instead of u = t
        self.degree = max((len(c) - 1 for c in coeffs.values()), default=0)
        self._grid_matrix = None

    def value(self, t, z):
        """Field value at time t in state z (0 off the DAG).

        Exact when the coefficients and ``t`` are rational.
        """
        c = self.coeffs.get(z)
        if c is None:
            return 0
        u = (1 - t) if self.reverse_time else t
        acc = 0
        upow = 1
        for n, cn in enumerate(c):
            if n > 0:
                upow = upow * u
            if cn:
                term = cn * upow
                fact = math.factorial(n)
                # keep int/int exact; true division would silently go float
                acc = acc + (Fraction(term, fact) if isinstance(term, int) else term / fact)
        return acc

    def _matrix(self) -> np.ndarray:
        # rows follow dag.nodes; column n holds c_n / n!
        if self._grid_matrix is None:
            m = np.zeros((len(self.dag.nodes), self.degree + 1))
            for i, z in enumerate(self.dag.nodes):
                for n, cn in enumerate(self.coeffs[z]):
                    m[i, n] = float(cn) / math.factorial(n)
            self._grid_matrix = m
        return self._grid_matrix

    def grid(self, ts: np.ndarray) -> np.ndarray:
        """Float values on a time grid, shape (len(dag.nodes), len(ts))."""
        u = (1.0 - np.asarray(ts, dtype=float)) if self.reverse_time else np.asarray(ts, dtype=float)
        powers = u[None, :] ** np.arange(self.degree + 1)[:, None]
        return self._matrix() @ powers


class BackwardField(_PolyField):
    """Rate-weighted geodesic continuations into the target, in powers of (1-t)."""

    def __init__(self, dag, coeffs):
        super().__init__(dag, coeffs, reverse_time=True)


class ForwardField(_PolyField):
    """Mirror of the backward field under DAG reversal, in powers of t."""

    def __init__(self, dag, coeffs):
        super().__init__(dag, coeffs, reverse_time=False)


def _chain_recursion(dag: GeodesicDag, kernel: RateKernel, forward: bool) -> dict:
    """Triangular DAG recursion c_n(z) = sum over neighbours of rate * c_{n-1}."""
    anchor = dag.source if forward else dag.target
    prev = {z: (1 if z == anchor else 0) for z in dag.nodes}
    coeffs = {z: [prev[z]] for z in dag.nodes}
    # chains cannot revisit a node, so |nodes| - 1 jumps is an upper bound
    for _ in range(len(dag.nodes) - 1):
        cur = {}
        for z in dag.nodes:
            if forward:
                acc = sum(
                    (kernel.rate(w, z) * prev[w] for w in dag.pred[z] if prev[w]),
                    start=0,
                )
            else:
                acc = sum(
                    (kernel.rate(z, w) * prev[w] for w in dag.succ[z] if prev[w]),
                    start=0,
                )
            cur[z] = acc
        if all(not v for v in cur.values()):
            break
        for z in dag.nodes:
            coeffs[z].append(cur[z])
        prev = cur
    return coeffs


def backward_coefficients(dag: GeodesicDag, kernel: RateKernel) -> BackwardField:
    """Backward field: coefficient n at z sums rate products over n-jump chains z -> target."""
    return BackwardField(dag, _chain_recursion(dag, kernel, forward=False))


def forward_coefficients(dag: GeodesicDag, kernel: RateKernel) -> ForwardField:
    """Forward field: coefficient n at z sums rate products over n-jump chains source -> z."""
    return ForwardField(dag, _chain_recursion(dag, kernel, forward=True))


class BridgeFields:
    """Forward and backward fields of one (source, target) geodesic bridge.

    ``norm`` is the backward field at the source at time 0, i.e. the total
    rate-weighted geodesic mass from source to target; the bridge law is
    forward * backward / norm.
    """

    def __init__(self, dag: GeodesicDag, kernel: RateKernel, n_vertices: int):
        self.dag = dag
        self.kernel = kernel
        self.n = n_vertices
        self.forward = forward_coefficients(dag, kernel)
        self.backward = backward_coefficients(dag, kernel)
        self.norm = self.backward.value(0, dag.source)

    @property
    def source(self) -> int:
        return self.dag.source

    @property
    def target(self) -> int:
        return self.dag.target


def bridge_fields(x: int, y: int, graph: Graph, metric: DistanceMatrix, kernel: RateKernel) -> BridgeFields:
    """Build the DAG and both fields for the (x, y) bridge."""
    return BridgeFields(geodesic_dag(x, y, graph, metric), kernel, graph.n)


def bridge_marginal_exact(fields: BridgeFields, t):
    """Bridge law at time t as a length-n vector (list), exact for rational t.

    The value at a DAG node z is forward(t, z) * backward(t, z) / norm; all
    other vertices carry 0.  Sums to 1 for every t in [0, 1].
    """
    out = [0] * fields.n
    for z in fields.dag.nodes:
        fv = fields.forward.value(t, z)
        gv = fields.backward.value(t, z)
        if fv and gv:
            out[z] = fv * gv / fields.norm
    return out


def bridge_jump_kernel(fields: BridgeFields, t, z: int) -> dict:
    """Jump measure of the bridge at time t < 1 in state z.

    Rate towards a DAG successor w is backward(t, w) / backward(t, z) times
    the reference rate; zero off the DAG.  Undefined at t = 1.
    """
    if not t < 1:
        raise ValueError("bridge jump kernel is undefined at t = 1")
    if z not in fields.dag.layer:
        return {}
    gz = fields.backward.value(t, z)
    out = {}
    for w in fields.dag.succ[z]:
        gw = fields.backward.value(t, w)
        if gw:
            out[w] = gw / gz * fields.kernel.rate(z, w)
    return out


def bridge_mass_rate(fields: BridgeFields, t):
    """Expected jump intensity of the bridge at time t < 1.

    Computed as sum over DAG edges of forward(t,z) * backward(t,w) * rate(z,w)
    divided by the norm, which avoids the 1/(1-t) blow-up of the per-state
    kernel near t = 1.
    """
    if not t < 1:
        raise ValueError("bridge mass rate is undefined at t = 1")
    acc = 0
    for z, w in fields.dag.edges():
        fv = fields.forward.value(t, z)
        gw = fields.backward.value(t, w)
        if fv and gw:
            acc = acc + fv * gw * fields.kernel.rate(z, w)
    return acc / fields.norm


def _nilpotent_transition(fields: BridgeFields, delta):
    """Chain-weight transfer matrix over [s, s+delta]: sum_n A^n delta^n / n!.

    A holds the reference rates on DAG edges; it is nilpotent in topological
    order, so the series is finite.
    """
    nodes = fields.dag.nodes
    pos = {z: i for i, z in enumerate(nodes)}
    size = len(nodes)
    # generic-number matrices as nested lists; sizes are desk-scale
    ident = [[1 if i == j else 0 for j in range(size)] for i in range(size)]
    a = [[0] * size for _ in range(size)]
    for z, w in fields.dag.edges():
        a[pos[z]][pos[w]] = fields.kernel.rate(z, w)
    total = [row[:] for row in ident]
    power = ident
    for n in range(1, size):
        nxt = [[0] * size for _ in range(size)]
        any_nonzero = False
        for i in range(size):
            rowp = power[i]
            for k in range(size):
                pik = rowp[k]
                if pik:
                    rowa = a[k]
                    for j in range(size):
                        if rowa[j]:
                            nxt[i][j] += pik * rowa[j]
                            any_nonzero = True
        if not any_nonzero:
            break
        dpow = delta**n
        fact = math.factorial(n)
        scale = Fraction(dpow, fact) if isinstance(dpow, int) else dpow / fact
        for i in range(size):
            for j in range(size):
                if nxt[i][j]:
                    total[i][j] += nxt[i][j] * scale
        power = nxt
    return total, pos


def two_time_table(fields: BridgeFields, s, t) -> dict:
    """Joint law of the bridge positions at times s <= t, keyed by (z, w).

    Splitting every chain at both times gives
    forward(s, z) * transfer(z, w; t - s) * backward(t, w) / norm.
    """
    if not 0 <= s <= t <= 1:
        raise ValueError("need 0 <= s <= t <= 1")
    transfer, pos = _nilpotent_transition(fields, t - s)
    out = {}
    for z in fields.dag.nodes:
        fv = fields.forward.value(s, z)
        if not fv:
            continue
        for w in fields.dag.nodes:
            gv = fields.backward.value(t, w)
            if not gv:
                continue
            tr = transfer[pos[z]][pos[w]]
            if tr:
                out[(z, w)] = fv * tr * gv / fields.norm
    return out


def geodesic_mass_to_target(
    y: int, graph: Graph, metric: DistanceMatrix, kernel: RateKernel
) -> list:
    """Total rate-weighted geodesic mass from every vertex into y.

    One pass suffices for all sources: whether z -> w is an admissible first
    step of a geodesic towards y depends only on (z, w, y), so the triangular
    recursion runs over the whole graph at once, layered by the distance to
    y (an n-jump chain contributes its rate product divided by n!).
    """
    tol = 0 if metric.exact else 1e-9 * max(1.0, float(metric.max()))
    succ: list[list[int]] = []
    for z in range(graph.n):
        succ.append(
            [
                w
                for w in graph.adj[z]
                if abs(metric.d(z, w) + metric.d(w, y) - metric.d(z, y)) <= tol
            ]
        )
    prev = [1 if z == y else 0 for z in range(graph.n)]
    total = list(prev)
    for n in range(1, graph.n):
        cur = [
            sum((kernel.rate(z, w) * prev[w] for w in succ[z] if prev[w]), start=0)
            for z in range(graph.n)
        ]
        if not any(cur):
            break
        fact = math.factorial(n)
        for z in range(graph.n):
            if cur[z]:
                c = cur[z]
                total[z] = total[z] + (Fraction(c, fact) if isinstance(c, int) else c / fact)
        prev = cur
    return total


def geodesic_endpoint_measure(
    graph: Graph, metric: DistanceMatrix, kernel: RateKernel, m: BaseMeasure
):
    """Endpoint mass table of the geodesic-restricted reweighted walk.

    Entry (x, y) is m_x times the backward weight at (x, t=0) of the (x, y)
    bridge: the total rate-weighted mass of geodesics from x to y.  Strictly
    positive everywhere on a connected graph; the diagonal equals m.
    """
    from .walks import EndpointJoint

    exact = kernel.exact and metric.exact and m.exact
    if exact:
        table = [[Fraction(0)] * graph.n for _ in range(graph.n)]
    else:
        table = [[0.0] * graph.n for _ in range(graph.n)]
    for y in range(graph.n):
        col = geodesic_mass_to_target(y, graph, metric, kernel)
        for x in range(graph.n):
            table[x][y] = m[x] * col[x]
    if exact:
        return EndpointJoint(np.array(table, dtype=object), exact=True)
    return EndpointJoint(np.array(table, dtype=float), exact=False)
