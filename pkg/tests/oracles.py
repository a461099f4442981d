"""Independent brute-force oracles used to freeze expected values.

Nothing here shares code with the library paths it checks: distances come
from exhaustive simple-path enumeration, geodesic structure from sequence
enumeration, matrix exponentials from a long direct Taylor sum, and entropy
minimizers from projected gradient descent on the transportation polytope
(Euclidean projection by Dykstra's alternation).
"""

from __future__ import annotations

import numpy as np


def brute_force_distance(graph, x, y):
    """Minimum total length over all simple paths from x to y (None if unreachable)."""
    best = None
    stack = [(x, {x}, 0)]
    while stack:
        z, seen, acc = stack.pop()
        if z == y:
            if best is None or acc < best:
                best = acc
            continue
        for w in graph.adj[z]:
            if w not in seen:
                stack.append((w, seen | {w}, acc + graph.edge_length(z, w)))
    return best


def enumerate_geodesic_sequences(graph, metric, x, y):
    """All visited-state sequences of geodesics from x to y (simple sequences).

    A geodesic's step distances sum to d(x, y); since every step has length
    >= 1 no state repeats, so enumerating simple adjacency sequences whose
    length sums hit the distance exactly is exhaustive.
    """
    dxy = metric.d(x, y)
    out = []
    stack = [((x,), 0)]
    while stack:
        seq, acc = stack.pop()
        z = seq[-1]
        if z == y and acc == dxy:
            out.append(seq)
            continue
        for w in graph.adj[z]:
            if w in seq:
                continue
            step = graph.edge_length(z, w)
            if acc + step + metric.d(w, y) == dxy:
                stack.append((seq + (w,), acc + step))
    return out


def taylor_expm(q: np.ndarray, t: float, terms: int = 200) -> np.ndarray:
    """Direct Taylor series of exp(tQ), no uniformization."""
    n = q.shape[0]
    acc = np.eye(n)
    term = np.eye(n)
    for j in range(1, terms):
        term = term @ (t * q) / j
        acc = acc + term
    return acc


def _project_marginals(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the affine set {row sums = a, col sums = b}."""
    m, n = p.shape
    abar = a - p.sum(axis=1)
    bbar = b - p.sum(axis=0)
    s = abar.sum()
    alpha = abar / n
    beta = (bbar - s / n) / m
    return p + alpha[:, None] + beta[None, :]


def _dykstra(p: np.ndarray, a: np.ndarray, b: np.ndarray, sweeps: int = 40) -> np.ndarray:
    """Projection onto the transportation polytope (affine set intersect orthant)."""
    x = p.copy()
    inc = np.zeros_like(p)
    for _ in range(sweeps):
        x = _project_marginals(x, a, b)
        y = np.maximum(x + inc, 0.0)
        inc = x + inc - y
        x = y
    return _project_marginals(x, a, b)


def entropy_minimizer_convex(
    reference: np.ndarray,
    mu0: np.ndarray,
    mu1: np.ndarray,
    mask: np.ndarray | None = None,
) -> np.ndarray:
    """Generic convex-programming minimizer of sum p log(p / reference).

    Interior-point trust-region solve over the transportation polytope
    (linear equality constraints plus nonnegativity bounds), restricted to
    the admissible entries.  Shares nothing with the multiplicative-scaling
    route it is used to check.  (A clipped projected-gradient variant was
    tried first and exhibits spurious fixed points on the boundary: clipping
    the log-gradient caps the pull back into the interior, and the projected
    cycle can stall with entries pinned at zero.)
    """
    from scipy.optimize import Bounds, LinearConstraint, minimize

    reference = np.asarray(reference, dtype=float)
    m, n = reference.shape
    admissible = reference > 0
    if mask is not None:
        admissible = admissible & np.asarray(mask, dtype=bool)
    idx = np.argwhere(admissible)
    nv = len(idx)
    logref = np.array([np.log(reference[i, j]) for i, j in idx])

    rows = np.zeros((m, nv))
    cols = np.zeros((n, nv))
    for v, (i, j) in enumerate(idx):
        rows[i, v] = 1.0
        cols[j, v] = 1.0
    # drop one redundant constraint (total mass is counted twice)
    a_eq = np.vstack([rows, cols[:-1]])
    rhs = np.concatenate([mu0, mu1[:-1]])

    def f(x):
        xp = np.maximum(x, 1e-300)
        return float(np.sum(np.where(x > 0, x * (np.log(xp) - logref), 0.0)))

    def grad(x):
        xp = np.maximum(x, 1e-12)
        return np.log(xp) - logref + 1.0

    x0 = _dykstra(np.outer(mu0, mu1) * admissible, mu0, mu1)
    x0 = np.maximum(np.array([x0[i, j] for i, j in idx]), 1e-9)
    res = minimize(
        f,
        x0,
        jac=grad,
        method="trust-constr",
        bounds=Bounds(0.0, np.inf),
        constraints=LinearConstraint(a_eq, rhs, rhs),
        options={"gtol": 1e-12, "xtol": 1e-14, "maxiter": 5000},
    )
    out = np.zeros((m, n))
    for v, (i, j) in enumerate(idx):
        out[i, j] = max(res.x[v], 0.0)
    return out


def entropy_on_segment(reference: np.ndarray, plans, points: int = 4001):
    """Scalar minimization of the relative entropy over a plan segment.

    ``plans`` is a pair of extreme plans; a coarse grid over their convex
    combinations brackets the (strictly convex) optimum and a bounded scalar
    search pins it down.  Returns (best_plan, best_lambda).
    """
    from scipy.optimize import minimize_scalar

    p0, p1 = (np.asarray(p, dtype=float) for p in plans)
    reference = np.asarray(reference, dtype=float)

    def value(lam):
        p = (1.0 - lam) * p0 + lam * p1
        pos = p > 0
        if np.any(pos & (reference <= 0)):
            return np.inf
        return float(np.sum(p[pos] * (np.log(p[pos]) - np.log(reference[pos]))))

    grid = np.linspace(0.0, 1.0, points)
    coarse = min(grid, key=value)
    lo = max(0.0, coarse - 2.0 / points)
    hi = min(1.0, coarse + 2.0 / points)
    res = minimize_scalar(value, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14})
    lam = float(res.x)
    return (1.0 - lam) * p0 + lam * p1, lam
