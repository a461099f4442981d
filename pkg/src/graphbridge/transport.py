"""Order-one optimal transport on the graph metric, solved exactly.

A transportation simplex on the bipartite supply/demand graph with Bland's
anti-cycling rule.  Pivoting is generic over the number type: rational inputs
(the golden instances, or float data lifted exactly to rationals) give exact
optimal plans and exact dual potentials, which is what the tight-set mask
needs -- the optimal face is characterized by complementary slackness, and a
loose mask would silently enlarge the face downstream.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graphs import DistanceMatrix, is_exact_number

__all__ = ["TransportSolution", "solve_mk", "tight_set", "maximal_feasible_support"]


@dataclass
class TransportSolution:
    """Optimal value, one optimal plan, and feasible dual potentials.

    The duals satisfy u(x) + v(y) <= d(x, y) everywhere and are tight on the
    plan support; their marginal-weighted sum equals the value.
    """

    value: object
    plan: np.ndarray
    u: list
    v: list
    exact: bool

    @property
    def value_float(self) -> float:
        return float(self.value)

    def plan_as_array(self) -> np.ndarray:
        if self.exact:
            return np.array(
                [[float(x) for x in row] for row in self.plan], dtype=float
            )
        return self.plan


def _simplex(cost, supply, demand, tol):
    """Transportation simplex; returns (flows dict, u, v) on the dense m x n block."""
    m, n = len(supply), len(demand)
    # northwest-corner start: a staircase spanning tree with m + n - 1 cells
    a = list(supply)
    b = list(demand)
    basis: set[tuple[int, int]] = set()
    flow: dict[tuple[int, int], object] = {}
    i = j = 0
    while True:
        f = min(a[i], b[j])
        basis.add((i, j))
        flow[(i, j)] = f
        a[i] -= f
        b[j] -= f
        if i == m - 1 and j == n - 1:
            break
        if a[i] == 0 and i < m - 1:
            i += 1
        else:
            j += 1

    def duals():
        u = [None] * m
        v = [None] * n
        u[0] = 0 * cost[0][0]  # zero of the right number type
        row_cells = [[] for _ in range(m)]
        col_cells = [[] for _ in range(n)]
        for (bi, bj) in basis:
            row_cells[bi].append(bj)
            col_cells[bj].append(bi)
        queue = deque([("r", 0)])
        while queue:
            kind, idx = queue.popleft()
            if kind == "r":
                for bj in row_cells[idx]:
                    if v[bj] is None:
                        v[bj] = cost[idx][bj] - u[idx]
                        queue.append(("c", bj))
            else:
                for bi in col_cells[idx]:
                    if u[bi] is None:
                        u[bi] = cost[bi][idx] - v[idx]
                        queue.append(("r", bi))
        return u, v

    max_pivots = 50 * (m * n + m + n) + 1000
    for _ in range(max_pivots):
        u, v = duals()
        entering = None
        for ei in range(m):
            ui = u[ei]
            row = cost[ei]
            for ej in range(n):
                if (ei, ej) not in basis and row[ej] - ui - v[ej] < -tol:
                    entering = (ei, ej)
                    break
            if entering:
                break
        if entering is None:
            return flow, u, v
        # unique tree path from the entering row-node to its column-node
        adj: dict[tuple[str, int], list] = {}
        for (bi, bj) in basis:
            adj.setdefault(("r", bi), []).append(("c", bj))
            adj.setdefault(("c", bj), []).append(("r", bi))
        start, goal = ("r", entering[0]), ("c", entering[1])
        parent = {start: None}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            if node == goal:
                break
            for nxt in sorted(adj.get(node, [])):
                if nxt not in parent:
                    parent[nxt] = node
                    queue.append(nxt)
        path = [goal]
        while parent[path[-1]] is not None:
            path.append(parent[path[-1]])
        path.reverse()  # r, c, r, c, ..., c
        cycle = []  # (cell, sign) pairs; entering enters with +
        sign = -1
        for p, q in zip(path[:-1], path[1:]):
            cell = (p[1], q[1]) if p[0] == "r" else (q[1], p[1])
            cycle.append((cell, sign))
            sign = -sign
        theta = None
        leaving = None
        for cell, s in cycle:
            if s < 0 and (theta is None or flow[cell] < theta or (flow[cell] == theta and cell < leaving)):
                theta = flow[cell]
                leaving = cell
        for cell, s in cycle:
            flow[cell] = flow[cell] + s * theta
        flow[entering] = theta
        basis.add(entering)
        basis.discard(leaving)
        del flow[leaving]
    raise RuntimeError("transportation simplex failed to terminate")


def _lift_exact(values):
    return [v if is_exact_number(v) else Fraction(v) for v in values]


def solve_mk(metric: DistanceMatrix, mu0, mu1, exact: bool | None = None) -> TransportSolution:
    """Solve the order-one transport problem between two probability vectors.

    ``exact=None`` picks exact pivoting whenever the metric is exact or the
    problem is small (<= 64 vertices); float inputs are lifted to their exact
    binary rationals, and the demand side is rescaled by the (at most 1e-15
    relative) mass defect so supply and demand agree exactly.
    """
    n_vert = metric.n
    mu0 = list(mu0)
    mu1 = list(mu1)
    if len(mu0) != n_vert or len(mu1) != n_vert:
        raise ValueError("marginal size does not match the metric")
    if exact is None:
        exact = metric.exact or n_vert <= 64
    if exact:
        mu0 = _lift_exact(mu0)
        mu1 = _lift_exact(mu1)
        s0, s1 = sum(mu0), sum(mu1)
        if s1 == 0:
            raise ValueError("mu1 carries no mass")
        if s0 != s1:
            mu1 = [x * s0 / s1 for x in mu1]
        dvals = [
            [metric.d(i, j) if metric.exact else Fraction(metric.d(i, j)) for j in range(n_vert)]
            for i in range(n_vert)
        ]
        tol = 0
    else:
        mu0 = [float(x) for x in mu0]
        mu1 = [float(x) for x in mu1]
        s0, s1 = sum(mu0), sum(mu1)
        mu1 = [x * s0 / s1 for x in mu1]
        dvals = [[float(metric.d(i, j)) for j in range(n_vert)] for i in range(n_vert)]
        tol = 1e-12 * max(1.0, float(metric.max()))

    rows = [i for i in range(n_vert) if mu0[i] > 0]
    cols = [j for j in range(n_vert) if mu1[j] > 0]
    if not rows or not cols:
        raise ValueError("marginals must carry positive mass")
    cost = [[dvals[i][j] for j in cols] for i in rows]
    flow, u_loc, v_loc = _simplex(cost, [mu0[i] for i in rows], [mu1[j] for j in cols], tol)

    zero = 0 * dvals[0][0]
    value = zero
    if exact:
        plan = np.empty((n_vert, n_vert), dtype=object)
        plan[:, :] = zero
    else:
        plan = np.zeros((n_vert, n_vert))
    for (li, lj), f in flow.items():
        if f:
            plan[rows[li], cols[lj]] = f
            value = value + f * cost[li][lj]

    # extend the duals to zero-mass vertices, keeping u + v <= d everywhere:
    # the extension is maximal for u (over supported columns), then v closes up
    u = [None] * n_vert
    v = [None] * n_vert
    for li, i in enumerate(rows):
        u[i] = u_loc[li]
    for lj, j in enumerate(cols):
        v[j] = v_loc[lj]
    for i in range(n_vert):
        if u[i] is None:
            u[i] = min(dvals[i][j] - v[j] for j in cols)
    for j in range(n_vert):
        if v[j] is None:
            v[j] = min(dvals[i][j] - u[i] for i in range(n_vert))
    return TransportSolution(value=value, plan=plan, u=u, v=v, exact=exact)


def maximal_feasible_support(plan, mask: np.ndarray, atol: float = 0.0) -> np.ndarray:
    """Entries of ``mask`` that carry mass in at least one feasible plan.

    ``plan`` must be one feasible plan supported on the mask.  A zero entry
    (i, j) can be charged by some feasible redistribution exactly when the
    residual graph admits a path from column j back to row i (columns step to
    rows across positive plan entries, rows step to columns across any masked
    entry).  Entries failing this are zero in every feasible plan; dropping
    them leaves the feasible set unchanged but removes the diverging-scaling
    directions that stall iterative fitting.
    """
    mask = np.asarray(mask, dtype=bool)
    m, n = mask.shape
    pos = np.zeros((m, n), dtype=bool)
    for i in range(m):
        for j in range(n):
            pos[i, j] = bool(mask[i, j]) and plan[i, j] > atol
    row_out = [np.flatnonzero(mask[i]) for i in range(m)]
    col_out = [np.flatnonzero(pos[:, j]) for j in range(n)]
    keep = pos.copy()
    for j in range(n):
        # BFS over the residual graph starting from column j
        seen_rows: set[int] = set()
        seen_cols = {j}
        stack_cols = [j]
        while stack_cols:
            c = stack_cols.pop()
            for r in col_out[c]:
                if r in seen_rows:
                    continue
                seen_rows.add(r)
                for c2 in row_out[r]:
                    if c2 not in seen_cols:
                        seen_cols.add(c2)
                        stack_cols.append(int(c2))
        for i in seen_rows:
            if mask[i, j]:
                keep[i, j] = True
    return keep


def tight_set(solution: TransportSolution, metric: DistanceMatrix, tol=None) -> np.ndarray:
    """Pairs where the dual constraint is tight: the support mask of the optimal face.

    Every feasible plan supported on the mask has cost equal to the dual
    value, hence is optimal; every optimal plan satisfies complementary
    slackness with these duals, hence lives on the mask.  Exact duals give
    the exact face; in float mode the tolerance defaults to 1e-9 scaled by
    the largest distance (too large a tolerance would enlarge the face).
    """
    n = metric.n
    if tol is None:
        tol = 0 if solution.exact else 1e-9 * max(1.0, float(metric.max()))
    mask = np.zeros((n, n), dtype=bool)
    for i in range(n):
        ui = solution.u[i]
        for j in range(n):
            mask[i, j] = metric.d(i, j) - ui - solution.v[j] <= tol
    return mask
