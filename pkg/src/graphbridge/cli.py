"""Command-line interface.

Commands: ``validate``, ``limit``, ``sweep``, ``bridge``, ``montecarlo``,
``report``.  Exit code 0 on success, 1 on validation failure, 2 on numerical
non-convergence.  Floats print with 17 significant digits.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .bridges import bridge_fields, bridge_jump_kernel, bridge_marginal_exact
from .harness import MonteCarloError, emit, run_limit, run_montecarlo, run_sweep
from .instances import InstanceError, load_instance
from .walks import Generator, bridge_marginal

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NONCONVERGENCE = 2


def _g(x) -> str:
    return format(float(x), ".17g")


def _cmd_validate(args) -> int:
    spec = load_instance(args.file, force=args.force)
    for w in spec.warnings:
        print(f"warning: {w}")
    rep = spec.report
    print(f"instance {args.file}: {spec.graph.n} vertices, kernel bound {_g(rep.max_total_rate)}")
    for clause in (
        "no_self_loops",
        "irreducible",
        "locally_finite",
        "distance_lower_bound",
        "distance_intrinsic",
        "kernel_support",
        "kernel_bounded",
        "measure_positive",
    ):
        print(f"  {clause}: {'ok' if getattr(rep, clause) else 'FAIL'}")
    if not rep.passed:
        return EXIT_VALIDATION
    print("all hypotheses hold")
    return EXIT_OK


def _cmd_limit(args) -> int:
    spec = load_instance(args.file, force=args.force)
    artifacts = run_limit(spec)
    print(f"transport value: {_g(artifacts.w1)}")
    print(f"action integral: {_g(artifacts.benamou)}")
    rate = artifacts.mass_rate
    interior = rate[1:-1] if len(rate) > 2 else rate
    print(f"mass rate spread: {_g(interior.max() - interior.min())}")
    paths = emit(artifacts, fmt=args.format, outdir=args.out)
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def _k_grid_from_args(args, spec):
    if args.kmin is not None or args.kmax is not None or args.kpoints is not None:
        kmin = args.kmin if args.kmin is not None else 10.0
        kmax = args.kmax if args.kmax is not None else 1e6
        kpoints = args.kpoints if args.kpoints is not None else 6
        return list(np.geomspace(kmin, kmax, int(kpoints)))
    return list(spec.params.k_grid)


def _cmd_sweep(args) -> int:
    spec = load_instance(args.file, force=args.force)
    report = run_sweep(spec, k_grid=_k_grid_from_args(args, spec))
    print(f"transport value: {_g(report.w1)}")
    print("k,converged,iterations,plan_tv,entropic_value,value_gap")
    failed = False
    for row in report.rows:
        failed = failed or not row.converged
        print(
            ",".join(
                [
                    _g(row.k),
                    str(row.converged).lower(),
                    str(row.iterations),
                    _g(row.plan_tv),
                    _g(row.entropic_value),
                    _g(row.value_gap),
                ]
            )
        )
    return EXIT_NONCONVERGENCE if failed else EXIT_OK


def _resolve_vertex(spec, name: str) -> int:
    if name not in spec.graph.index:
        raise InstanceError(f"unknown vertex {name!r}")
    return spec.graph.index[name]


def _cmd_bridge(args) -> int:
    spec = load_instance(args.file, force=args.force)
    x = _resolve_vertex(spec, args.source)
    y = _resolve_vertex(spec, args.target)
    ts = np.linspace(0.0, 1.0, spec.params.time_grid_points)
    print("t," + ",".join(f"p:{v}" for v in spec.ids))
    if args.k is None:
        fields = bridge_fields(x, y, spec.graph, spec.metric, spec.kernel)
        for t in ts:
            row = bridge_marginal_exact(fields, float(t))
            print(_g(t) + "," + ",".join(_g(v) for v in row))
        mid = 0.5
        kern = bridge_jump_kernel(fields, mid, x)
        desc = ", ".join(f"{spec.ids[w]}: {_g(r)}" for w, r in sorted(kern.items()))
        print(f"# limit jump kernel at t=0.5 from {args.source}: {desc}")
    else:
        gen = Generator.slowed(spec.kernel, args.k, spec.metric)
        for t in ts:
            row = bridge_marginal(gen, x, y, float(t))
            print(_g(t) + "," + ",".join(_g(v) for v in row))
    return EXIT_OK


def _cmd_montecarlo(args) -> int:
    spec = load_instance(args.file, force=args.force)
    x = _resolve_vertex(spec, args.source)
    y = _resolve_vertex(spec, args.target)
    try:
        rep = run_montecarlo(spec, (x, y), k=args.k, samples=args.samples, seed=args.seed)
    except MonteCarloError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    print(f"seed: {rep.seed}")
    print(f"accepted: {rep.accepted}/{rep.samples} (rate {_g(rep.acceptance_rate)})")
    print(f"sequence TV vs exact slowed bridge: {_g(rep.tv_empirical_exact)}")
    print(f"sequence TV vs limit bridge: {_g(rep.tv_empirical_limit)}")
    print(f"chi2: {_g(rep.chi2_stat)} (dof {rep.chi2_dof}, p {_g(rep.chi2_pvalue)})")
    print(
        f"marginal TV at t={_g(rep.marginal_time)}: exact {_g(rep.tv_marginal_exact)}, "
        f"limit {_g(rep.tv_marginal_limit)}"
    )
    print("sequence,observed,exact_prob,limit_prob")
    for states, cnt, p_exact, p_limit in rep.sequence_rows:
        seq = "->".join(spec.ids[z] for z in states)
        print(f"{seq},{cnt},{_g(p_exact)},{_g(p_limit)}")
    return EXIT_OK


def _cmd_report(args) -> int:
    json_path = os.path.join(args.dir, "limit.json")
    flow_path = os.path.join(args.dir, "flow.csv")
    found = False
    if os.path.exists(json_path):
        found = True
        with open(json_path) as fh:
            data = json.load(fh)
        print(f"{json_path}:")
        print(f"  vertices: {len(data['vertices'])}")
        print(f"  transport value: {_g(data['w1'])}")
        print(f"  action integral: {_g(data['benamou'])}")
        rate = data["mass_rate"]
        interior = rate[1:-1] if len(rate) > 2 else rate
        print(f"  mass rate spread: {_g(max(interior) - min(interior))}")
        print(f"  constant-speed time change degenerate: {data['tau_degenerate']}")
    if os.path.exists(flow_path):
        found = True
        with open(flow_path) as fh:
            header = fh.readline().strip().split(",")
            rows = [line.strip().split(",") for line in fh if line.strip()]
        print(f"{flow_path}: {len(rows)} grid rows, columns {len(header)}")
        worst = 0.0
        n_mu = len(header) - 3
        for row in rows:
            total = sum(float(v) for v in row[1 : 1 + n_mu])
            worst = max(worst, abs(total - 1.0))
        print(f"  worst probability row defect: {_g(worst)}")
    if not found:
        print(f"error: no artifacts found under {args.dir}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphbridge",
        description="Displacement interpolations on finite weighted graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("file", help="instance JSON file")
        p.add_argument("--force", action="store_true", help="run despite hypothesis failures")

    p = sub.add_parser("validate", help="check an instance against the standing hypotheses")
    add_common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("limit", help="compute the limit interpolation artifacts")
    add_common(p)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_limit)

    p = sub.add_parser("sweep", help="convergence sweep over slowing parameters")
    add_common(p)
    p.add_argument("--kmin", type=float)
    p.add_argument("--kmax", type=float)
    p.add_argument("--kpoints", type=int)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("bridge", help="bridge marginals for one endpoint pair")
    add_common(p)
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--k", type=float, default=None, help="finite slowing (default: limit bridge)")
    p.set_defaults(func=_cmd_bridge)

    p = sub.add_parser("montecarlo", help="sampled bridges versus predictions")
    add_common(p)
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_montecarlo)

    p = sub.add_parser("report", help="summarize emitted artifacts")
    p.add_argument("dir", help="artifact directory")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
