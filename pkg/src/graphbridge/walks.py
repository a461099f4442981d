"""Continuous-time random-walk machinery for the finite-slowing regime.

Covers the reference walk and its slowed versions: the generator built from a
rate kernel, transition matrices by uniformization, the joint endpoint law
started from the base measure, finite-k bridge marginals, exact path
simulation, and the log-density of the slowed walk against the unslowed one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geodesics import DiscretePath
from .graphs import BaseMeasure, DistanceMatrix, RateKernel

__all__ = [
    "Generator",
    "EndpointJoint",
    "PathSample",
    "slow_kernel",
    "transition_matrix",
    "endpoint_joint",
    "bridge_marginal",
    "sample_path",
    "girsanov_log_density",
]


def slow_kernel(kernel: RateKernel, k: float, metric: DistanceMatrix) -> RateKernel:
    """Scale every rate x -> y by k^{-d(x, y)}; k = 1 is the identity."""
    if k < 1:
        raise ValueError(f"slowing parameter must be >= 1, got {k}")
    if k == 1:
        return kernel
    rates = []
    for z in range(kernel.n):
        rates.append(
            {w: float(r) * float(k) ** (-float(metric.d(z, w))) for w, r in kernel.rates[z].items()}
        )
    return RateKernel(rates)


class Generator:
    """Rate matrix Q with zero row sums; optionally tagged with its slowing parameter."""

    def __init__(self, kernel: RateKernel, k: float = 1.0):
        self.kernel = kernel
        self.k = k
        self.n = kernel.n
        q = kernel.matrix()
        np.fill_diagonal(q, 0.0)
        q[np.diag_indices_from(q)] = -q.sum(axis=1)
        self.q = q

    @classmethod
    def slowed(cls, kernel: RateKernel, k: float, metric: DistanceMatrix) -> "Generator":
        return cls(slow_kernel(kernel, k, metric), k=k)


def transition_matrix(gen: Generator, t: float) -> np.ndarray:
    """Row-stochastic exp(t Q) by uniformization.

    The Poisson mixture of powers of the uniformized stochastic matrix keeps
    every entry nonnegative, and since all terms are nonnegative the tiny
    entries of strongly slowed walks come out with full relative precision.
    The series runs past the vertex count (so every entry has its leading
    term) and stops once the Poisson weights are negligible.
    """
    if t < 0:
        raise ValueError("negative duration")
    n = gen.n
    lam = float(np.max(-np.diag(gen.q)))
    if lam == 0.0 or t == 0.0:
        return np.eye(n)
    w = gen.q / lam + np.eye(n)
    lt = lam * t
    log_weight = -lt  # log of the j = 0 Poisson weight
    max_log_weight = log_weight
    out = math.exp(log_weight) * np.eye(n)
    power = np.eye(n)
    for j in range(1, 100000):
        power = power @ w
        log_weight += math.log(lt) - math.log(j)
        max_log_weight = max(max_log_weight, log_weight)
        out += math.exp(log_weight) * power
        if j > n and j > lt and log_weight < max_log_weight - 80.0:
            break
    return out


class EndpointJoint:
    """Joint mass table of the initial and final positions, rows summing to m."""

    def __init__(self, table: np.ndarray, exact: bool = False):
        self.table = table
        self.exact = exact
        self.n = table.shape[0]

    def as_array(self) -> np.ndarray:
        if self.exact:
            return np.array([[float(v) for v in row] for row in self.table], dtype=float)
        return self.table

    @property
    def total(self):
        return self.table.sum()

    def row_sums(self) -> np.ndarray:
        return self.as_array().sum(axis=1)


def endpoint_joint(gen: Generator, m: BaseMeasure) -> EndpointJoint:
    """Joint law of (start, end) for the walk started from the base measure m."""
    p = transition_matrix(gen, 1.0)
    return EndpointJoint(m.as_array()[:, None] * p)


def bridge_marginal(gen: Generator, x: int, y: int, t: float) -> np.ndarray:
    """One-time law of the walk pinned at x (time 0) and y (time 1).

    p(0,x; t,z) p(t,z; 1,y) / p(0,x; 1,y); the denominator is strictly
    positive on a connected graph.
    """
    if not 0 <= t <= 1:
        raise ValueError("time must lie in [0, 1]")
    first = transition_matrix(gen, t)[x, :]
    second = transition_matrix(gen, 1.0 - t)[:, y]
    denom = float(first @ second)
    if denom <= 0.0:
        raise ValueError(f"endpoint pair ({x}, {y}) is unreachable")
    return first * second / denom


@dataclass(frozen=True)
class PathSample:
    """A simulated path together with the slowing parameter it was drawn under."""

    path: DiscretePath
    k: float
    seed: object = None


def sample_path(
    kernel: RateKernel, x0: int, horizon: float = 1.0, rng=None, seed=None, k: float = 1.0
) -> PathSample:
    """Exact simulation: exponential holding times, categorical jump choice.

    Deterministic under a fixed ``seed``; pass an ``rng`` instead to share
    one stream across many draws.  ``k`` only tags the sample with the
    slowing under which ``kernel`` was built.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    jumps = []
    z = x0
    t = 0.0
    while True:
        total = float(kernel.total_rate(z))
        if total == 0.0:
            break
        t += rng.exponential(1.0 / total)
        if t >= horizon:
            break
        targets = sorted(kernel.rates[z])
        probs = np.array([float(kernel.rates[z][w]) for w in targets]) / total
        z = int(targets[int(rng.choice(len(targets), p=probs))])
        jumps.append((t, z))
    return PathSample(DiscretePath(None, x0, jumps), k=k, seed=seed)


def girsanov_log_density(path, kernel: RateKernel, k: float, metric: DistanceMatrix) -> float:
    """log-density of the k-slowed walk against the unslowed one on a path.

    Equals -(log k) * (discrete length) plus the integral over [0, 1] of
    sum_y (1 - k^{-d(state, y)}) J_state(y), computed exactly over the
    constancy intervals.  A jump carrying zero unslowed rate makes the path
    impossible; the value is then -inf.
    """
    if k < 1:
        raise ValueError(f"slowing parameter must be >= 1, got {k}")
    if isinstance(path, PathSample):
        path = path.path
    logk = math.log(k)
    states = path.states
    times = [0.0] + [t for t, _ in path.jumps] + [1.0]
    length = 0.0
    for a, b in zip(states[:-1], states[1:]):
        if kernel.rate(a, b) == 0:
            return -math.inf
        length += float(metric.d(a, b))
    integral = 0.0
    for i, z in enumerate(states):
        dt = times[i + 1] - times[i]
        if dt <= 0.0:
            continue
        rate_sum = sum(
            float(r) * (1.0 - float(k) ** (-float(metric.d(z, w))))
            for w, r in kernel.rates[z].items()
        )
        integral += dt * rate_sum
    return -logk * length + integral
