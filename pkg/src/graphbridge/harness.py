"""Experiment drivers: limit runs, slowing sweeps, Monte Carlo cross-checks, emission.

`run_limit` computes every limit artifact of an instance on its time grid.
`run_sweep` solves the finite-slowing entropic problem along a grid of
slowing parameters and measures the approach to the limit objects.
`run_montecarlo` rejection-samples finite-slowing bridges and compares the
visited-sequence law and one-time marginals against both the exact
finite-slowing probabilities and the limit bridge predictions.

Everything is deterministic under the recorded seed, and `emit` writes
byte-stable CSV/JSON artifacts.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .bridges import bridge_marginal_exact
from .entropic import entropic_value, sinkhorn, total_variation
from .geodesics import geodesic_dag
from .instances import InstanceSpec
from .interpolation import (
    DisplacementInterpolation,
    limit_interpolation,
)
from .walks import Generator, bridge_marginal, endpoint_joint, sample_path, transition_matrix

__all__ = [
    "LimitArtifacts",
    "SweepRow",
    "ConvergenceReport",
    "MonteCarloReport",
    "MonteCarloError",
    "run_limit",
    "run_sweep",
    "run_montecarlo",
    "emit",
]


@dataclass
class LimitArtifacts:
    spec: InstanceSpec
    interpolation: DisplacementInterpolation
    ts: np.ndarray
    mu: np.ndarray            # (n_vertices, len(ts))
    speed: np.ndarray
    mass_rate: np.ndarray
    jump_rows: list           # (t, from, to, rate) at grid times t < 1
    w1: float
    benamou: float
    tau_s: np.ndarray
    tau: np.ndarray
    tau_derivative: np.ndarray
    tau_degenerate: bool


def run_limit(spec: InstanceSpec) -> LimitArtifacts:
    """All limit artifacts of an instance on its configured time grid."""
    interp = limit_interpolation(
        spec.graph, spec.metric, spec.kernel, spec.m, spec.mu0, spec.mu1, tol=spec.params.tol
    )
    ts = np.linspace(0.0, 1.0, spec.params.time_grid_points)
    mu = interp.mu_series(ts)
    # speed and mass rate are evaluated away from t = 1 (kernel domain);
    # their polynomial series extend continuously so the closed grid is fine
    spd = interp.speed_series(ts)
    rate = interp.mass_rate_series(ts)
    jump_rows = []
    for col, t in enumerate(ts):
        if not t < 1.0:
            continue
        for z in range(spec.graph.n):
            if mu[z, col] > 0.0:
                for w, r in sorted(interp.kernel_at(float(t), z).items()):
                    jump_rows.append((float(t), z, w, float(r)))
    tc = interp.time_change()
    return LimitArtifacts(
        spec=spec,
        interpolation=interp,
        ts=ts,
        mu=mu,
        speed=spd,
        mass_rate=rate,
        jump_rows=jump_rows,
        w1=interp.w1,
        benamou=interp.benamou(),
        tau_s=tc.s,
        tau=tc.tau,
        tau_derivative=tc.dtau,
        tau_degenerate=tc.degenerate,
    )


@dataclass
class SweepRow:
    k: float
    converged: bool
    iterations: int
    marginal_gap: float
    plan_tv: float
    entropic_value: float
    value_gap: float
    bridge_tv: dict = field(default_factory=dict)


@dataclass
class ConvergenceReport:
    spec: InstanceSpec
    w1: float
    rows: list

    def ks(self):
        return [row.k for row in self.rows]

    def summary_slopes(self) -> dict:
        """Fitted log-log decay rates across the grid.

        ``plan_tv`` and the per-pair bridge TVs decay polynomially in the
        slowing parameter (slope about -1); the value gap decays like
        1/log k, reported as the fitted constant gap * log k.
        """
        ks = np.array([row.k for row in self.rows], dtype=float)
        out: dict = {}

        def slope(vals):
            vals = np.asarray(vals, dtype=float)
            keep = vals > 0
            if keep.sum() < 2:
                return None
            return float(np.polyfit(np.log(ks[keep]), np.log(vals[keep]), 1)[0])

        out["plan_tv"] = slope([row.plan_tv for row in self.rows])
        out["value_gap_times_log_k"] = float(
            np.mean([row.value_gap * math.log(row.k) for row in self.rows])
        )
        pairs = set().union(*(row.bridge_tv.keys() for row in self.rows)) if self.rows else set()
        out["bridge_tv"] = {
            pair: slope([row.bridge_tv.get(pair, 0.0) for row in self.rows])
            for pair in sorted(pairs)
        }
        return out


def run_sweep(
    spec: InstanceSpec,
    k_grid=None,
    bridge_pairs: int = 3,
    bridge_time: float = 0.5,
    interp: DisplacementInterpolation | None = None,
) -> ConvergenceReport:
    """Solve the entropic problem per slowing parameter and measure convergence.

    Per k: fit the plan against the slowed endpoint table, record the
    total-variation distance to the limit plan, the normalized entropy gap to
    the transport value, and per-pair bridge TV at ``bridge_time`` for the
    most charged plan pairs.  Non-convergence is recorded in the row and the
    sweep continues.
    """
    ks = sorted(spec.params.k_grid if k_grid is None else k_grid)
    if not ks:
        raise ValueError("slowing grid is empty")
    if interp is None:
        interp = limit_interpolation(
            spec.graph, spec.metric, spec.kernel, spec.m, spec.mu0, spec.mu1, tol=spec.params.tol
        )
    limit = np.array([[float(v) for v in row] for row in interp.plan], dtype=float)
    pairs = sorted(
        ((x, y) for (x, y) in interp.fields if x != y),
        key=lambda p: -limit[p[0], p[1]],
    )[:bridge_pairs]
    limit_bridges = {
        pair: np.array(
            [float(v) for v in bridge_marginal_exact(interp.fields[pair], bridge_time)]
        )
        for pair in pairs
    }
    rows = []
    for k in ks:
        gen = Generator.slowed(spec.kernel, k, spec.metric)
        reference = endpoint_joint(gen, spec.m)
        res = sinkhorn(reference, spec.mu0, spec.mu1, tol=spec.params.tol)
        value = entropic_value(res.plan, reference, k)
        bridge_tv = {
            pair: total_variation(bridge_marginal(gen, *pair, bridge_time), limit_bridges[pair])
            for pair in pairs
        }
        rows.append(
            SweepRow(
                k=k,
                converged=res.converged,
                iterations=res.iterations,
                marginal_gap=res.marginal_gap,
                plan_tv=total_variation(res.plan, limit),
                entropic_value=value,
                value_gap=value - interp.w1,
                bridge_tv=bridge_tv,
            )
        )
    return ConvergenceReport(spec=spec, w1=interp.w1, rows=rows)


class MonteCarloError(RuntimeError):
    """Bridge acceptance rate too low for a meaningful comparison."""


@dataclass
class MonteCarloReport:
    pair: tuple
    k: float
    samples: int
    seed: int
    accepted: int
    acceptance_rate: float
    sequence_rows: list       # (sequence, observed, exact_prob, limit_prob)
    tv_empirical_exact: float
    tv_empirical_limit: float
    chi2_stat: float
    chi2_pvalue: float
    chi2_dof: int
    marginal_time: float
    tv_marginal_exact: float
    tv_marginal_limit: float


def _sequence_probability_exact(states, kernel_k, gen_k, x, y) -> float:
    """P(visited sequence = states | endpoints) under the slowed walk.

    The event "exactly these jumps inside [0, 1], still at the final state at
    time 1" is the corner entry of the exponential of the bidiagonal rate
    matrix along the sequence.
    """
    from scipy.linalg import expm

    size = len(states)
    m = np.zeros((size, size))
    for i, z in enumerate(states):
        m[i, i] = -float(kernel_k.total_rate(z))
        if i + 1 < size:
            m[i, i + 1] = float(kernel_k.rate(z, states[i + 1]))
    p_joint = expm(m)[0, -1]
    p_end = float(transition_matrix(gen_k, 1.0)[x, y])
    return p_joint / p_end


def run_montecarlo(
    spec: InstanceSpec,
    pair: tuple,
    k: float,
    samples: int,
    seed: int | None = None,
    acceptance_floor: float = 1e-4,
    marginal_time: float = 0.5,
) -> MonteCarloReport:
    """Rejection-sample slowed bridges and compare laws against predictions.

    ``samples`` counts attempted draws; paths ending at the target are kept.
    Sequence frequencies are tested (chi-square) against the exact
    finite-slowing sequence law, and reported in TV against both that law and
    the limit bridge chain law.
    """
    if samples < 1000:
        raise ValueError("need at least 1e3 attempted samples")
    x, y = pair
    seed = spec.params.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    gen = Generator.slowed(spec.kernel, k, spec.metric)
    kernel_k = gen.kernel
    counts: dict[tuple, int] = {}
    marg_counts = np.zeros(spec.graph.n)
    accepted = 0
    for _ in range(samples):
        ps = sample_path(kernel_k, x, rng=rng, k=k)
        if ps.path.end != y:
            continue
        accepted += 1
        counts[ps.path.states] = counts.get(ps.path.states, 0) + 1
        marg_counts[ps.path.state_at(marginal_time)] += 1
    rate = accepted / samples
    if rate < acceptance_floor or accepted == 0:
        raise MonteCarloError(
            f"acceptance rate {rate:.2e} below floor {acceptance_floor:.0e}; "
            "lower k or raise the sample count"
        )

    # limit chain law: rate product over the DAG divided by n! and the norm
    dag = geodesic_dag(x, y, spec.graph, spec.metric)
    from .bridges import backward_coefficients

    norm = float(backward_coefficients(dag, spec.kernel).value(0, x))
    def limit_prob(states):
        p = 1.0
        for a, b in zip(states[:-1], states[1:]):
            if b not in dag.succ.get(a, ()):
                return 0.0
            p *= float(spec.kernel.rate(a, b))
        return p / (math.factorial(len(states) - 1) * norm)

    seq_rows = []
    tv_exact = 0.0
    tv_limit = 0.0
    exact_total = 0.0
    limit_total = 0.0
    for states, cnt in sorted(counts.items(), key=lambda kv: -kv[1]):
        p_exact = _sequence_probability_exact(states, kernel_k, gen, x, y)
        p_limit = limit_prob(states)
        seq_rows.append((states, cnt, p_exact, p_limit))
        tv_exact += abs(cnt / accepted - p_exact)
        tv_limit += abs(cnt / accepted - p_limit)
        exact_total += p_exact
        limit_total += p_limit
    # unobserved sequences contribute their whole predicted mass
    tv_exact = 0.5 * (tv_exact + max(0.0, 1.0 - exact_total))
    tv_limit = 0.5 * (tv_limit + max(0.0, 1.0 - limit_total))

    # chi-square against the exact law, pooling rare sequences
    observed, expected = [], []
    pooled_obs, pooled_exp = 0, 0.0
    for states, cnt, p_exact, _ in seq_rows:
        exp_cnt = p_exact * accepted
        if exp_cnt >= 5.0:
            observed.append(cnt)
            expected.append(exp_cnt)
        else:
            pooled_obs += cnt
            pooled_exp += exp_cnt
    tail = max(0.0, 1.0 - exact_total) * accepted
    pooled_exp += tail
    if pooled_exp > 0:
        observed.append(pooled_obs)
        expected.append(pooled_exp)
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected, dtype=float)
    expected *= observed.sum() / expected.sum()
    dof = max(1, len(observed) - 1)
    chi2 = float(np.sum((observed - expected) ** 2 / np.where(expected > 0, expected, 1.0)))
    pvalue = float(stats.chi2.sf(chi2, dof))

    emp_marginal = marg_counts / accepted
    exact_marginal = bridge_marginal(gen, x, y, marginal_time)
    from .bridges import bridge_fields

    fields = bridge_fields(x, y, spec.graph, spec.metric, spec.kernel)
    limit_marginal = np.array(
        [float(v) for v in bridge_marginal_exact(fields, marginal_time)]
    )
    return MonteCarloReport(
        pair=pair,
        k=k,
        samples=samples,
        seed=seed,
        accepted=accepted,
        acceptance_rate=rate,
        sequence_rows=seq_rows,
        tv_empirical_exact=tv_exact,
        tv_empirical_limit=tv_limit,
        chi2_stat=chi2,
        chi2_pvalue=pvalue,
        chi2_dof=dof,
        marginal_time=marginal_time,
        tv_marginal_exact=total_variation(emp_marginal, exact_marginal),
        tv_marginal_limit=total_variation(emp_marginal, limit_marginal),
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def emit(artifacts: LimitArtifacts, fmt: str = "csv", outdir: str = ".") -> list[str]:
    """Write artifacts; CSV for time series, JSON for plans/duals/summary.

    Output is byte-stable for identical inputs and seed: floats are written
    with shortest round-trip representation and JSON keys are sorted.
    """
    os.makedirs(outdir, exist_ok=True)
    spec = artifacts.spec
    written = []
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    if fmt == "csv":
        flow_path = os.path.join(outdir, "flow.csv")
        with open(flow_path, "w") as fh:
            header = ["t"] + [f"mu:{v}" for v in spec.ids] + ["speed", "mass_rate"]
            fh.write(",".join(header) + "\n")
            for col, t in enumerate(artifacts.ts):
                row = (
                    [_fmt(t)]
                    + [_fmt(artifacts.mu[z, col]) for z in range(spec.graph.n)]
                    + [_fmt(artifacts.speed[col]), _fmt(artifacts.mass_rate[col])]
                )
                fh.write(",".join(row) + "\n")
        written.append(flow_path)
        kernel_path = os.path.join(outdir, "kernel.csv")
        with open(kernel_path, "w") as fh:
            fh.write("t,from,to,rate\n")
            for t, z, w, r in artifacts.jump_rows:
                fh.write(f"{_fmt(t)},{spec.ids[z]},{spec.ids[w]},{_fmt(r)}\n")
        written.append(kernel_path)
        tau_path = os.path.join(outdir, "timechange.csv")
        with open(tau_path, "w") as fh:
            fh.write("s,tau,dtau\n")
            for i in range(len(artifacts.tau_s)):
                fh.write(
                    ",".join(
                        [_fmt(artifacts.tau_s[i]), _fmt(artifacts.tau[i]), _fmt(artifacts.tau_derivative[i])]
                    )
                    + "\n"
                )
        written.append(tau_path)
    else:
        sol = artifacts.interpolation.solution
        payload = {
            "vertices": list(spec.ids),
            "w1": float(artifacts.w1),
            "benamou": float(artifacts.benamou),
            "plan": [[float(v) for v in row] for row in artifacts.interpolation.plan],
            "dual_u": [float(v) for v in sol.u],
            "dual_v": [float(v) for v in sol.v],
            "time_grid": [float(t) for t in artifacts.ts],
            "mu": [[float(v) for v in row] for row in artifacts.mu.T],
            "speed": [float(v) for v in artifacts.speed],
            "mass_rate": [float(v) for v in artifacts.mass_rate],
            "tau_s": [float(v) for v in artifacts.tau_s],
            "tau": [float(v) for v in artifacts.tau],
            "tau_degenerate": bool(artifacts.tau_degenerate),
            "seed": spec.params.seed,
        }
        json_path = os.path.join(outdir, "limit.json")
        with open(json_path, "w") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
        written.append(json_path)
    return written
