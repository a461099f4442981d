"""Shared builders for test instances: named graphs and randomized setups."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

import graphbridge as gb


def path_graph(n: int) -> gb.Graph:
    return gb.Graph([str(i) for i in range(n)], [(str(i), str(i + 1)) for i in range(n - 1)])


def complete_graph(n: int) -> gb.Graph:
    ids = [f"v{i}" for i in range(n)]
    return gb.Graph(ids, [(ids[i], ids[j]) for i in range(n) for j in range(i + 1, n)])


def hypercube_graph(n: int) -> gb.Graph:
    verts = [format(i, f"0{n}b") for i in range(2**n)]
    edges = []
    for u in verts:
        for i in range(n):
            v = u[:i] + ("1" if u[i] == "0" else "0") + u[i + 1 :]
            if u < v:
                edges.append((u, v))
    return gb.Graph(verts, edges)


def star_graph(leaves: int) -> gb.Graph:
    ids = ["c"] + [f"l{i}" for i in range(leaves)]
    return gb.Graph(ids, [("c", f"l{i}") for i in range(leaves)])


def setup(graph: gb.Graph):
    """(graph, metric, simple-walk kernel, degree measure) for a unit graph."""
    metric = gb.intrinsic_distance(graph)
    kernel, m = gb.build_simple_walk(graph)
    return graph, metric, kernel, m


def dirac(n: int, i: int):
    mu = [Fraction(0)] * n
    mu[i] = Fraction(1)
    return mu


_DYADIC_LENGTHS = (1, Fraction(3, 2), 2, Fraction(5, 2), 3)


def random_connected_graph(n: int, rng: np.random.Generator, weighted: bool) -> gb.Graph:
    """Random tree plus extra edges; dyadic lengths keep float sums exact."""
    ids = [f"v{i}" for i in range(n)]
    edges = []
    have = set()
    for i in range(1, n):
        j = int(rng.integers(0, i))
        edges.append([ids[j], ids[i]])
        have.add((j, i))
    extra = int(rng.integers(1, max(2, n // 2)))
    for _ in range(20 * extra):
        if extra == 0:
            break
        i, j = sorted(int(v) for v in rng.integers(0, n, 2))
        if i != j and (i, j) not in have:
            have.add((i, j))
            edges.append([ids[i], ids[j]])
            extra -= 1
    if weighted:
        edges = [
            [u, v, _DYADIC_LENGTHS[int(rng.integers(0, len(_DYADIC_LENGTHS)))]]
            for u, v in edges
        ]
    graph = gb.Graph(ids, edges)
    graph, _ = gb.tighten_edge_lengths(graph)
    return graph


def random_reversible_setup(n: int, rng: np.random.Generator, weighted: bool):
    """Random graph with a random reversible kernel and rational marginals.

    Marginals are exact rationals with small denominators so the transport
    LP pivots stay fast in exact mode; mu0 != mu1 is guaranteed.
    """
    graph = random_connected_graph(n, rng, weighted)
    metric = gb.intrinsic_distance(graph)
    s = {(i, j): float(rng.uniform(0.3, 1.5)) for i, j, _ in graph.edges()}
    m = gb.BaseMeasure(tuple(float(v) for v in rng.uniform(0.5, 2.0, size=n)))
    kernel = gb.build_reversible_walk(graph, m, s)
    while True:
        w0 = [int(v) for v in rng.integers(0, 5, size=n)]
        w1 = [int(v) for v in rng.integers(0, 5, size=n)]
        if sum(w0) and sum(w1):
            mu0 = [Fraction(a, sum(w0)) for a in w0]
            mu1 = [Fraction(a, sum(w1)) for a in w1]
            if mu0 != mu1:
                break
    return graph, metric, kernel, m, mu0, mu1
