"""The limit interpolation: plan selection, marginal flow, displacement kernel.

The zero-temperature limit of the entropic problems keeps two pieces of
structure: the endpoint plan is the entropy minimizer over the optimal face
of the order-one transport problem, with the geodesic endpoint table as
reference; and the path law is the corresponding mixture of geodesic bridges.
Everything observable about the flow -- marginals, displacement kernel,
speed, mass-displacement rate, the Benamou-Brenier action, the constant-speed
reparameterization, two-time couplings -- is assembled here from the bridge
fields, without ever enumerating geodesics.

Per-state quantities are polynomial-exact in t; mixture series over a time
grid are evaluated through the fields' cached coefficient matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.optimize import brentq

from .bridges import BridgeFields, bridge_fields, geodesic_endpoint_measure, two_time_table
from .entropic import masked_sinkhorn
from .graphs import BaseMeasure, DistanceMatrix, Graph, RateKernel, is_exact_number
from .transport import TransportSolution, maximal_feasible_support, solve_mk, tight_set

__all__ = [
    "limit_plan",
    "build_fields",
    "interpolate",
    "interpolate_series",
    "displacement_kernel",
    "speed",
    "mass_rate",
    "speed_series",
    "mass_rate_series",
    "benamou_value",
    "constant_speed_timechange",
    "fokker_planck_residual",
    "intermediate_coupling_check",
    "TimeChange",
    "CouplingCheck",
    "DisplacementInterpolation",
    "limit_interpolation",
    "interior_grid",
]


def interior_grid(points: int = 101) -> np.ndarray:
    """Default evaluation grid: 101 interior times from 0.005 to 0.995."""
    return np.linspace(0.005, 0.995, points)


def _support(plan) -> list[tuple[int, int]]:
    n0, n1 = np.shape(plan)
    return [(x, y) for x in range(n0) for y in range(n1) if plan[x, y]]


def _is_dirac(mu) -> int | None:
    pos = [i for i, w in enumerate(mu) if w]
    return pos[0] if len(pos) == 1 else None


def limit_plan(
    graph: Graph,
    metric: DistanceMatrix,
    kernel: RateKernel,
    m: BaseMeasure,
    mu0,
    mu1,
    tol: float = 1e-10,
    max_iter: int = 100000,
    exact_lp: bool | None = None,
    mask_tol=None,
):
    """The unique entropy-selected optimal plan between mu0 and mu1.

    Minimizes relative entropy against the geodesic endpoint table over the
    optimal face of the transport problem (complementary-slackness mask from
    exact LP duals, masked log-domain fitting on top).  Two degenerate cases
    bypass the iteration exactly: a pair of Dirac marginals forces the plan,
    and equal marginals force the diagonal (the unique zero-cost plan).
    """
    mu0 = list(mu0)
    mu1 = list(mu1)
    x0, y0 = _is_dirac(mu0), _is_dirac(mu1)
    exact_in = all(is_exact_number(w) for w in mu0 + mu1)
    if x0 is not None and y0 is not None:
        plan = _zero_table(graph.n, exact_in)
        plan[x0, y0] = mu0[x0] if exact_in else float(mu0[x0])
        return plan
    if mu0 == mu1:
        plan = _zero_table(graph.n, exact_in)
        for i, w in enumerate(mu0):
            if w:
                plan[i, i] = w if exact_in else float(w)
        return plan
    sol = solve_mk(metric, mu0, mu1, exact=exact_lp)
    mask = tight_set(sol, metric, tol=mask_tol)
    # entries no feasible plan can charge would make the scalings diverge and
    # the fit sublinear; dropping them leaves the minimizer untouched
    mask = maximal_feasible_support(sol.plan, mask)
    reference = geodesic_endpoint_measure(graph, metric, kernel, m)
    res = masked_sinkhorn(
        reference.as_array(),
        mask,
        np.array([float(w) for w in mu0]),
        np.array([float(w) for w in mu1]),
        tol=tol,
        max_iter=max_iter,
    )
    if not res.converged:
        raise RuntimeError(
            f"plan selection did not converge: marginal gap {res.marginal_gap:.3e} "
            f"after {res.iterations} sweeps"
        )
    return res.plan


def _zero_table(n: int, exact: bool) -> np.ndarray:
    if exact:
        t = np.empty((n, n), dtype=object)
        t[:, :] = Fraction(0)
        return t
    return np.zeros((n, n))


def build_fields(graph: Graph, metric: DistanceMatrix, kernel: RateKernel, plan) -> dict:
    """Bridge fields for every pair charged by the plan."""
    return {
        (x, y): bridge_fields(x, y, graph, metric, kernel) for x, y in _support(plan)
    }


def interpolate(plan, fields: dict, t):
    """Marginal flow at time t: the plan-weighted mixture of bridge laws.

    Returns a length-n vector (list); exact when plan, fields and t are.
    """
    pairs = _support(plan)
    if not pairs:
        raise ValueError("plan carries no mass")
    n = fields[pairs[0]].n
    out = [0] * n
    for x, y in pairs:
        fl = fields[(x, y)]
        w = plan[x, y]
        for z in fl.dag.nodes:
            fv = fl.forward.value(t, z)
            gv = fl.backward.value(t, z)
            if fv and gv:
                out[z] = out[z] + w * fv * gv / fl.norm
    return out


def interpolate_series(plan, fields: dict, ts: np.ndarray) -> np.ndarray:
    """Float marginal flow on a grid, shape (n, len(ts))."""
    pairs = _support(plan)
    n = fields[pairs[0]].n
    ts = np.asarray(ts, dtype=float)
    out = np.zeros((n, len(ts)))
    for x, y in pairs:
        fl = fields[(x, y)]
        w = float(plan[x, y]) / float(fl.norm)
        fw = fl.forward.grid(ts)
        bw = fl.backward.grid(ts)
        prod = fw * bw
        for i, z in enumerate(fl.dag.nodes):
            out[z, :] += w * prod[i, :]
    return out


def displacement_kernel(plan, fields: dict, t, z: int) -> dict:
    """Jump measure of the interpolating walk at time t < 1 in state z.

    The bridge-kernel mixture weighted by each bridge's probability of
    standing at z, normalized by the flow mass there; undefined where the
    flow carries no mass.
    """
    if not t < 1:
        raise ValueError("displacement kernel is undefined at t = 1")
    mass = 0
    num: dict[int, object] = {}
    for (x, y), fl in fields.items():
        w = plan[x, y]
        if not w:
            continue
        if z not in fl.dag.layer:
            continue
        fv = fl.forward.value(t, z)
        gv = fl.backward.value(t, z)
        if not (fv and gv):
            continue
        mass = mass + w * fv * gv / fl.norm
        for s in fl.dag.succ[z]:
            gw = fl.backward.value(t, s)
            if gw:
                num[s] = num.get(s, 0) + w * fv * gw * fl.kernel.rate(z, s) / fl.norm
    if not mass:
        raise ValueError(f"flow carries no mass at state {z} at time {t}")
    return {w_: val / mass for w_, val in num.items()}


def _edge_weighted_rate(plan, fields, t, metric=None):
    acc = 0
    for (x, y), fl in fields.items():
        w = plan[x, y]
        if not w:
            continue
        for z, s in fl.dag.edges():
            fv = fl.forward.value(t, z)
            gv = fl.backward.value(t, s)
            if fv and gv:
                dw = metric.d(z, s) if metric is not None else 1
                acc = acc + w * dw * fv * gv * fl.kernel.rate(z, s) / fl.norm
    return acc


def speed(plan, fields: dict, metric: DistanceMatrix, t):
    """Distance-weighted jump flux of the flow at time t < 1."""
    if not t < 1:
        raise ValueError("speed is undefined at t = 1")
    return _edge_weighted_rate(plan, fields, t, metric)


def mass_rate(plan, fields: dict, t):
    """Total jump flux (the average rate of mass displacement) at time t < 1.

    Constant in t along the limit interpolation; with the standard graph
    distance it coincides with the speed.
    """
    if not t < 1:
        raise ValueError("mass rate is undefined at t = 1")
    return _edge_weighted_rate(plan, fields, t, metric=None)


def _edge_weighted_rate_series(plan, fields, ts, metric=None) -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    out = np.zeros(len(ts))
    for (x, y), fl in fields.items():
        w = float(plan[x, y])
        if not w:
            continue
        fw = fl.forward.grid(ts)
        bw = fl.backward.grid(ts)
        pos = {z: i for i, z in enumerate(fl.dag.nodes)}
        scale = w / float(fl.norm)
        for z, s in fl.dag.edges():
            dw = float(metric.d(z, s)) if metric is not None else 1.0
            out += (scale * dw * float(fl.kernel.rate(z, s))) * fw[pos[z], :] * bw[pos[s], :]
    return out


def speed_series(plan, fields: dict, metric: DistanceMatrix, ts) -> np.ndarray:
    return _edge_weighted_rate_series(plan, fields, ts, metric)


def mass_rate_series(plan, fields: dict, ts) -> np.ndarray:
    return _edge_weighted_rate_series(plan, fields, ts, metric=None)


def benamou_value(plan, fields: dict, metric: DistanceMatrix, grid=201) -> float:
    """Time integral of the speed by composite Simpson quadrature.

    Equals the transport value within quadrature tolerance (the integrand is
    a polynomial in t, bounded up to t = 1).  ``grid`` is a point count or an
    explicit uniform grid over [0, 1].
    """
    if np.isscalar(grid):
        ts = np.linspace(0.0, 1.0, int(grid))
    else:
        ts = np.asarray(grid, dtype=float)
    vals = _edge_weighted_rate_series(plan, fields, ts, metric)
    return _composite_simpson(ts, vals)


def _composite_simpson(ts: np.ndarray, vals: np.ndarray) -> float:
    n = len(ts)
    if n < 2:
        raise ValueError("need at least two grid points")
    h = ts[1] - ts[0]
    total = 0.0
    i = 0
    while i + 2 < n:
        total += h / 3.0 * (vals[i] + 4.0 * vals[i + 1] + vals[i + 2])
        i += 2
    if i + 1 < n:  # odd interval count: close with one trapezoid panel
        total += h / 2.0 * (vals[i] + vals[i + 1])
    return float(total)


def _speed_polynomial(plan, fields: dict, metric: DistanceMatrix) -> np.ndarray:
    """Exact (float) coefficient vector of the speed as a polynomial in t."""
    max_deg = max(fl.forward.degree + fl.backward.degree for fl in fields.values())
    coeffs = np.zeros(max_deg + 1)
    one_minus_t = np.array([1.0, -1.0])
    # cache (1-t)^n coefficient rows
    pow_cache = [np.array([1.0])]
    for _ in range(max(fl.backward.degree for fl in fields.values())):
        pow_cache.append(npoly.polymul(pow_cache[-1], one_minus_t))
    for (x, y), fl in fields.items():
        w = float(plan[x, y])
        if not w:
            continue
        scale = w / float(fl.norm)
        fwd_poly = {}
        bwd_poly = {}
        for z in fl.dag.nodes:
            cf = fl.forward.coeffs[z]
            fwd_poly[z] = np.array([float(c) / math.factorial(n) for n, c in enumerate(cf)])
            cb = fl.backward.coeffs[z]
            pb = np.zeros(1)
            for n, c in enumerate(cb):
                if c:
                    pb = npoly.polyadd(pb, (float(c) / math.factorial(n)) * pow_cache[n])
            bwd_poly[z] = pb
        for z, s in fl.dag.edges():
            term = npoly.polymul(fwd_poly[z], bwd_poly[s])
            term = term * (scale * float(metric.d(z, s)) * float(fl.kernel.rate(z, s)))
            coeffs[: len(term)] += term
    return coeffs


@dataclass
class TimeChange:
    """Monotone reparameterization of [0, 1] sampled on a grid, with derivative."""

    s: np.ndarray
    tau: np.ndarray
    dtau: np.ndarray
    degenerate: bool = False

    def __call__(self, s: float) -> float:
        return float(np.interp(s, self.s, self.tau))


def constant_speed_timechange(plan, fields: dict, metric: DistanceMatrix, grid=None) -> TimeChange:
    """The unique time change making the reparameterized flow constant-speed.

    Inverts the cumulative speed: tau(s) solves Psi(tau) = Psi(1) * s, where
    Psi integrates the speed polynomial exactly.  A zero transport value
    (equal marginals) returns the identity flagged as degenerate.
    """
    s_grid = np.linspace(0.0, 1.0, 101) if grid is None else np.asarray(grid, dtype=float)
    sp = _speed_polynomial(plan, fields, metric)
    psi = npoly.polyint(sp)
    w1 = npoly.polyval(1.0, psi)
    if w1 <= 0.0:
        return TimeChange(
            s=s_grid, tau=s_grid.copy(), dtau=np.ones_like(s_grid), degenerate=True
        )
    tau = np.empty_like(s_grid)
    for i, s in enumerate(s_grid):
        if s <= 0.0:
            tau[i] = 0.0
        elif s >= 1.0:
            tau[i] = 1.0
        else:
            target = w1 * s
            tau[i] = brentq(lambda t: npoly.polyval(t, psi) - target, 0.0, 1.0, xtol=1e-15)
    # speed > 0 on [0, 1): the mass rate is positive and d >= 1 on jumps
    dtau = np.array(
        [w1 / npoly.polyval(t, sp) if t < 1.0 else w1 / npoly.polyval(1.0, sp) for t in tau]
    )
    return TimeChange(s=s_grid, tau=tau, dtau=dtau, degenerate=False)


def fokker_planck_residual(plan, fields: dict, grid=None, dt: float = 1e-4) -> float:
    """Worst violation of the evolution equation for the marginal flow.

    Central-difference d/dt of the flow against inflow minus outflow under
    the displacement kernel, maximized over interior grid times and states.
    """
    ts = interior_grid() if grid is None else np.asarray(grid, dtype=float)
    ts = ts[(ts - dt > 0.0) & (ts + dt < 1.0)]
    pairs = _support(plan)
    n = fields[pairs[0]].n
    up = interpolate_series(plan, fields, ts + dt)
    down = interpolate_series(plan, fields, ts - dt)
    dmu = (up - down) / (2.0 * dt)
    net = np.zeros((n, len(ts)))
    for (x, y), fl in fields.items():
        w = float(plan[x, y])
        if not w:
            continue
        fw = fl.forward.grid(ts)
        bw = fl.backward.grid(ts)
        pos = {z: i for i, z in enumerate(fl.dag.nodes)}
        scale = w / float(fl.norm)
        for z, s in fl.dag.edges():
            flux = (scale * float(fl.kernel.rate(z, s))) * fw[pos[z], :] * bw[pos[s], :]
            net[s, :] += flux
            net[z, :] -= flux
    return float(np.max(np.abs(dmu - net)))


@dataclass
class CouplingCheck:
    cost: float
    lp_value: float
    gap: float
    tol: float
    passed: bool


def intermediate_coupling_check(
    plan, fields: dict, metric: DistanceMatrix, s: float, t: float, tol: float = 1e-8
) -> CouplingCheck:
    """Two-time joint law of the flow versus the transport optimum of its marginals.

    The mixture of bridge two-time tables couples mu_s and mu_t; its cost is
    compared against a fresh LP solve between those marginals.
    """
    if not 0 <= s <= t <= 1:
        raise ValueError("need 0 <= s <= t <= 1")
    pairs = _support(plan)
    n = fields[pairs[0]].n
    coupling = np.zeros((n, n))
    for x, y in pairs:
        fl = fields[(x, y)]
        w = float(plan[x, y])
        for (z, u_), mass in two_time_table(fl, s, t).items():
            coupling[z, u_] += w * float(mass)
    cost = float(
        sum(
            coupling[z, u_] * float(metric.d(z, u_))
            for z in range(n)
            for u_ in range(n)
            if coupling[z, u_]
        )
    )
    mu_s = coupling.sum(axis=1)
    mu_t = coupling.sum(axis=0)
    sol = solve_mk(metric, mu_s, mu_t)
    gap = cost - sol.value_float
    return CouplingCheck(cost=cost, lp_value=sol.value_float, gap=gap, tol=tol, passed=abs(gap) <= tol)


class DisplacementInterpolation:
    """Bundled limit objects for one (mu0, mu1) pair: plan, fields, transport data."""

    def __init__(self, graph, metric, kernel, m, mu0, mu1, plan, fields, solution):
        self.graph = graph
        self.metric = metric
        self.kernel = kernel
        self.m = m
        self.mu0 = mu0
        self.mu1 = mu1
        self.plan = plan
        self.fields = fields
        self.solution = solution

    @property
    def w1(self) -> float:
        return self.solution.value_float

    def mu(self, t):
        return interpolate(self.plan, self.fields, t)

    def mu_series(self, ts) -> np.ndarray:
        return interpolate_series(self.plan, self.fields, ts)

    def kernel_at(self, t, z: int) -> dict:
        return displacement_kernel(self.plan, self.fields, t, z)

    def speed(self, t):
        return speed(self.plan, self.fields, self.metric, t)

    def mass_rate(self, t):
        return mass_rate(self.plan, self.fields, t)

    def speed_series(self, ts) -> np.ndarray:
        return speed_series(self.plan, self.fields, self.metric, ts)

    def mass_rate_series(self, ts) -> np.ndarray:
        return mass_rate_series(self.plan, self.fields, ts)

    def benamou(self, grid=201) -> float:
        return benamou_value(self.plan, self.fields, self.metric, grid)

    def time_change(self, grid=None) -> TimeChange:
        return constant_speed_timechange(self.plan, self.fields, self.metric, grid)

    def fp_residual(self, grid=None, dt: float = 1e-4) -> float:
        return fokker_planck_residual(self.plan, self.fields, grid, dt)

    def coupling_check(self, s: float, t: float, tol: float = 1e-8) -> CouplingCheck:
        return intermediate_coupling_check(self.plan, self.fields, self.metric, s, t, tol)


def limit_interpolation(
    graph: Graph,
    metric: DistanceMatrix,
    kernel: RateKernel,
    m: BaseMeasure,
    mu0,
    mu1,
    **plan_options,
) -> DisplacementInterpolation:
    """Solve the transport problem, select the plan, and build all bridge fields."""
    solution = solve_mk(metric, mu0, mu1, exact=plan_options.get("exact_lp"))
    plan = limit_plan(graph, metric, kernel, m, mu0, mu1, **plan_options)
    fields = build_fields(graph, metric, kernel, plan)
    return DisplacementInterpolation(
        graph, metric, kernel, m, mu0, mu1, plan, fields, solution
    )
