"""Entropy minimization with marginal constraints (iterative proportional fitting).

Everything runs in the log domain: the endpoint tables of strongly slowed
walks carry entries spanning k^{-d} across the whole table (k up to 1e6, d up
to the graph diameter), far beyond what linear-domain scaling survives.  Row
and column updates are streaming log-sum-exp; the returned coupling is
exp(a_x + b_y) times the reference, masked where requested.

The masked variant minimizes the same relative entropy over couplings
supported on a prescribed set of pairs; with the mask set to the optimal face
of the order-one transport problem this is exactly the selection principle
that singles out the limit plan.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .walks import EndpointJoint, Generator, transition_matrix

__all__ = [
    "ScalingPair",
    "SinkhornResult",
    "InfeasibleMaskError",
    "relative_entropy",
    "total_variation",
    "sinkhorn",
    "masked_sinkhorn",
    "entropic_value",
    "schrodinger_flow",
]


class InfeasibleMaskError(RuntimeError):
    """No coupling with the prescribed marginals lives on the masked support."""


def total_variation(p, q) -> float:
    """TV distance, half the absolute difference mass."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return 0.5 * float(np.abs(p - q).sum())


def _as_table(reference) -> np.ndarray:
    if isinstance(reference, EndpointJoint):
        return reference.as_array()
    return np.asarray(reference, dtype=float)


def relative_entropy(p, r) -> float:
    """sum p log(p/r) with 0 log 0 = 0; +inf when p charges a zero of r.

    The reference may be any finite positive table (total mass need not be
    1); shifting its mass by a constant c shifts the value by -log c.
    """
    p = np.asarray(p, dtype=float)
    r = _as_table(r)
    if p.shape != r.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {r.shape}")
    pos = p > 0
    if np.any(pos & (r <= 0)):
        return np.inf
    pv = p[pos]
    return float(np.sum(pv * (np.log(pv) - np.log(r[pos]))))


@dataclass(frozen=True)
class ScalingPair:
    """Log-domain row/column scalings; -inf on vertices outside the marginals."""

    a: np.ndarray
    b: np.ndarray


@dataclass
class SinkhornResult:
    plan: np.ndarray
    scaling: ScalingPair
    iterations: int
    converged: bool
    marginal_gap: float
    gap_history: list = field(default_factory=list)


def _logsumexp(x: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(x, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(x - m), axis=axis)) + np.squeeze(m, axis=axis)
    return out


def _ipf(
    log_ref: np.ndarray,
    mu0: np.ndarray,
    mu1: np.ndarray,
    tol: float,
    max_iter: int,
    detect_stall: bool,
):
    """Core alternating fit on the active (positive-marginal) block."""
    rows = np.flatnonzero(mu0 > 0)
    cols = np.flatnonzero(mu1 > 0)
    logk = log_ref[np.ix_(rows, cols)]
    if np.any(np.all(np.isinf(logk) & (logk < 0), axis=1)):
        raise InfeasibleMaskError("a required row has no admissible support")
    if np.any(np.all(np.isinf(logk) & (logk < 0), axis=0)):
        raise InfeasibleMaskError("a required column has no admissible support")
    la = np.log(mu0[rows])
    lb = np.log(mu1[cols])
    a = np.zeros(len(rows))
    b = np.zeros(len(cols))
    gap = np.inf
    history = []
    converged = False
    it = 0
    stall_window = 100
    last_window_gap = np.inf
    for it in range(1, max_iter + 1):
        a = la - _logsumexp(logk + b[None, :], axis=1)
        # rows now match exactly; the column defect is the full marginal gap
        col_m = np.exp(_logsumexp(logk + (a[:, None] + b[None, :]), axis=0))
        gap_col = total_variation(col_m, mu1[cols])
        b = lb - _logsumexp(logk + a[:, None], axis=0)
        row_m = np.exp(_logsumexp(logk + (a[:, None] + b[None, :]), axis=1))
        gap = max(gap_col, total_variation(row_m, mu0[rows]))
        history.append(gap)
        if gap <= tol:
            converged = True
            break
        if detect_stall and it % stall_window == 0:
            if gap > 10 * tol and last_window_gap - gap < 1e-14 + 1e-9 * gap:
                raise InfeasibleMaskError(
                    f"marginal gap stalled at {gap:.3e} after {it} sweeps; "
                    "no feasible coupling on the masked support"
                )
            last_window_gap = gap
    n0, n1 = log_ref.shape
    plan = np.zeros((n0, n1))
    plan[np.ix_(rows, cols)] = np.exp(logk + a[:, None] + b[None, :])
    a_full = np.full(n0, -np.inf)
    b_full = np.full(n1, -np.inf)
    a_full[rows] = a
    b_full[cols] = b
    return SinkhornResult(
        plan=plan,
        scaling=ScalingPair(a=a_full, b=b_full),
        iterations=it,
        converged=converged,
        marginal_gap=float(gap),
        gap_history=history,
    )


def _check_marginals(mu0, mu1, n0, n1):
    mu0 = np.asarray(mu0, dtype=float)
    mu1 = np.asarray(mu1, dtype=float)
    if mu0.shape != (n0,) or mu1.shape != (n1,):
        raise ValueError("marginal size does not match the reference table")
    for name, mu in (("mu0", mu0), ("mu1", mu1)):
        if np.any(mu < 0):
            raise ValueError(f"{name} has a negative entry")
        if abs(mu.sum() - 1.0) > 1e-12:
            raise ValueError(f"{name} sums to {mu.sum()!r}, not 1")
    return mu0, mu1


def sinkhorn(reference, mu0, mu1, tol: float = 1e-10, max_iter: int = 100000) -> SinkhornResult:
    """Fit exp(a+b)-scalings of ``reference`` to the prescribed marginals.

    Returns the coupling achieving marginal total-variation gap <= tol (the
    entropy minimizer in the tol -> 0 limit).  On max_iter exhaustion the
    result carries ``converged=False`` and the current gap.
    """
    ref = _as_table(reference)
    mu0, mu1 = _check_marginals(mu0, mu1, *ref.shape)
    with np.errstate(divide="ignore"):
        log_ref = np.log(ref)
    return _ipf(log_ref, mu0, mu1, tol, max_iter, detect_stall=False)


def masked_sinkhorn(
    reference, mask, mu0, mu1, tol: float = 1e-10, max_iter: int = 100000
) -> SinkhornResult:
    """Entropy minimization restricted to couplings supported on ``mask``.

    Reference entries outside the mask are treated as zero.  Raises
    `InfeasibleMaskError` when the marginal gap stalls above tolerance, which
    is how an empty feasible set manifests.
    """
    ref = _as_table(reference)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != ref.shape:
        raise ValueError("mask shape does not match the reference table")
    mu0, mu1 = _check_marginals(mu0, mu1, *ref.shape)
    with np.errstate(divide="ignore"):
        log_ref = np.where(mask, np.log(np.where(mask, ref, 1.0)), -np.inf)
    return _ipf(log_ref, mu0, mu1, tol, max_iter, detect_stall=True)


def entropic_value(plan, reference, k: float) -> float:
    """Relative entropy of the plan against the slowed endpoint table, per log k."""
    if not k >= 2:
        raise ValueError(f"entropic value requires k >= 2, got {k}")
    return relative_entropy(plan, reference) / np.log(k)


def schrodinger_flow(plan, gen: Generator, t: float) -> np.ndarray:
    """Marginal flow of the entropic interpolation: bridge mixture of the plan.

    mu_t(z) = sum_{x,y} plan(x,y) * bridge(x, y, t)(z), evaluated with three
    transition matrices instead of one bridge per pair.
    """
    plan = np.asarray(plan, dtype=float)
    n = gen.n
    if plan.shape != (n, n):
        raise ValueError("plan shape does not match the generator")
    if t == 0.0:
        return plan.sum(axis=1)
    if t == 1.0:
        return plan.sum(axis=0)
    p_t = transition_matrix(gen, t)
    p_rest = transition_matrix(gen, 1.0 - t)
    p_full = transition_matrix(gen, 1.0)
    w = np.where(plan > 0, plan / p_full, 0.0)
    return np.einsum("xz,xy,zy->z", p_t, w, p_rest)
