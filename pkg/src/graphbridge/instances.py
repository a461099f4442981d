"""Instance files: graph, measure, kernel recipe, marginals, run parameters.

The on-disk format is JSON with the fields ``vertices`` (list of string
ids), ``edges`` (list of ``[u, v]`` or ``[u, v, length]``), ``measure``
("volume" | "counting" | table id -> mass), ``kernel`` ("simple" |
``{"reversible": {"s": 1 | [[u, v, value], ...]}}`` |
``{"rates": [[u, v, value], ...]}``), ``mu0``/``mu1`` (tables id -> mass)
and ``params`` (``k_grid``, ``time_grid_points``, ``tol``, ``seed``).

Loading validates the standing hypotheses and fails on violation unless
forced; non-intrinsic edge lengths are tightened with warnings instead of
rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .graphs import (
    BaseMeasure,
    DistanceMatrix,
    Graph,
    GraphError,
    HypothesesReport,
    RateKernel,
    build_reversible_walk,
    build_simple_walk,
    intrinsic_distance,
    tighten_edge_lengths,
    validate_hypotheses,
)

__all__ = ["InstanceError", "RunParams", "InstanceSpec", "load_instance", "parse_instance"]

DEFAULT_K_GRID = (10.0, 100.0, 1000.0, 10000.0, 100000.0, 1000000.0)


class InstanceError(ValueError):
    """Malformed or hypothesis-violating instance file."""


@dataclass(frozen=True)
class RunParams:
    k_grid: tuple = DEFAULT_K_GRID
    time_grid_points: int = 101
    tol: float = 1e-10
    seed: int = 0


@dataclass
class InstanceSpec:
    path: str
    graph: Graph
    metric: DistanceMatrix
    kernel: RateKernel
    m: BaseMeasure
    mu0: np.ndarray
    mu1: np.ndarray
    params: RunParams
    warnings: list = field(default_factory=list)
    report: HypothesesReport | None = None

    @property
    def ids(self):
        return self.graph.ids


def _table_to_vector(table, graph: Graph, what: str) -> np.ndarray:
    if not isinstance(table, dict):
        raise InstanceError(f"{what} must be a table of vertex id -> mass")
    out = np.zeros(graph.n)
    for key, val in table.items():
        if key not in graph.index:
            raise InstanceError(f"{what} references unknown vertex {key!r}")
        out[graph.index[key]] = float(val)
    return out


def _edge_table(entries, graph: Graph, what: str) -> dict:
    out = {}
    for row in entries:
        if len(row) != 3:
            raise InstanceError(f"{what} entries must be [u, v, value]")
        u, v, val = row
        if u not in graph.index or v not in graph.index:
            raise InstanceError(f"{what} references unknown vertex in {row!r}")
        i, j = graph.index[u], graph.index[v]
        out[(min(i, j), max(i, j))] = float(val)
    return out


def parse_instance(data: dict, path: str = "<memory>", force: bool = False) -> InstanceSpec:
    """Build a validated instance from already-parsed JSON data."""
    for fieldname in ("vertices", "edges", "mu0", "mu1"):
        if fieldname not in data:
            raise InstanceError(f"missing required field {fieldname!r}")
    try:
        graph = Graph(data["vertices"], data["edges"])
    except GraphError as exc:
        raise InstanceError(f"bad graph: {exc}") from exc

    warnings: list[str] = []
    if not graph.is_connected():
        raise InstanceError("graph is disconnected (irreducibility violated)")
    graph, tighten_warnings = tighten_edge_lengths(graph)
    warnings.extend(tighten_warnings)
    metric = intrinsic_distance(graph)

    measure_spec = data.get("measure", "volume")
    kernel_spec = data.get("kernel", "simple")
    try:
        if measure_spec == "volume":
            m = BaseMeasure(tuple(graph.degree(z) for z in range(graph.n)))
        elif measure_spec == "counting":
            m = BaseMeasure((1,) * graph.n)
        else:
            m = BaseMeasure(tuple(_table_to_vector(measure_spec, graph, "measure")))

        if kernel_spec == "simple":
            kernel, _ = build_simple_walk(graph)
        elif isinstance(kernel_spec, dict) and "reversible" in kernel_spec:
            s_spec = kernel_spec["reversible"].get("s", 1)
            s = s_spec if np.isscalar(s_spec) else _edge_table(s_spec, graph, "kernel.reversible.s")
            kernel = build_reversible_walk(graph, m, s)
        elif isinstance(kernel_spec, dict) and "rates" in kernel_spec:
            rates: list[dict] = [{} for _ in range(graph.n)]
            for row in kernel_spec["rates"]:
                if len(row) != 3:
                    raise InstanceError("kernel.rates entries must be [u, v, value]")
                u, v, val = row
                if u not in graph.index or v not in graph.index:
                    raise InstanceError(f"kernel.rates references unknown vertex in {row!r}")
                rates[graph.index[u]][graph.index[v]] = float(val)
            kernel = RateKernel(rates)
        else:
            raise InstanceError(f"unrecognized kernel recipe {kernel_spec!r}")
    except GraphError as exc:
        raise InstanceError(f"bad measure/kernel data: {exc}") from exc

    mu0 = _table_to_vector(data["mu0"], graph, "mu0")
    mu1 = _table_to_vector(data["mu1"], graph, "mu1")
    for name, mu in (("mu0", mu0), ("mu1", mu1)):
        if np.any(mu < 0):
            raise InstanceError(f"{name} has a negative entry")
        if abs(mu.sum() - 1.0) > 1e-12:
            raise InstanceError(f"{name} sums to {mu.sum()!r}, not 1 (within 1e-12)")

    pdata = data.get("params", {})
    params = RunParams(
        k_grid=tuple(float(k) for k in pdata.get("k_grid", DEFAULT_K_GRID)),
        time_grid_points=int(pdata.get("time_grid_points", 101)),
        tol=float(pdata.get("tol", 1e-10)),
        seed=int(pdata.get("seed", 0)),
    )

    report = validate_hypotheses(graph, metric, kernel, m)
    if not report.passed and not force:
        raise InstanceError(
            "standing hypotheses violated: " + "; ".join(report.failed_clauses())
        )
    return InstanceSpec(
        path=path,
        graph=graph,
        metric=metric,
        kernel=kernel,
        m=m,
        mu0=mu0,
        mu1=mu1,
        params=params,
        warnings=warnings,
        report=report,
    )


def load_instance(path: str, force: bool = False) -> InstanceSpec:
    """Parse and validate an instance file; line/field diagnostics on errors."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InstanceError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InstanceError(f"parse error in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise InstanceError(f"{path}: top level must be a JSON object")
    return parse_instance(data, path=path, force=force)
