"""Exact transportation LP: optimal values, duals, and the tight-set mask."""

from fractions import Fraction

import numpy as np
import pytest

import graphbridge as gb
from gen import dirac, path_graph, random_connected_graph, setup


def lp_oracle(dist_arr, mu0, mu1):
    """Independent LP value via scipy's HiGHS solver on the flattened problem."""
    from scipy.optimize import linprog

    n = dist_arr.shape[0]
    a_eq = []
    for i in range(n):
        row = np.zeros(n * n)
        row[i * n : (i + 1) * n] = 1.0
        a_eq.append(row)
    for j in range(n):
        row = np.zeros(n * n)
        row[j::n] = 1.0
        a_eq.append(row)
    res = linprog(
        dist_arr.ravel(),
        A_eq=np.array(a_eq),
        b_eq=np.concatenate([mu0, mu1]),
        bounds=(0, None),
        method="highs",
    )
    assert res.status == 0
    return res.fun


class TestSolveMk:
    def test_equal_marginals(self):
        g, d, _, _ = setup(path_graph(4))
        mu = [Fraction(1, 4)] * 4
        sol = gb.solve_mk(d, mu, mu)
        assert sol.value == 0
        assert all(sol.plan[i][i] == Fraction(1, 4) for i in range(4))

    def test_dirac_pair(self):
        g, d, _, _ = setup(path_graph(6))
        sol = gb.solve_mk(d, dirac(6, 0), dirac(6, 3))
        assert sol.value == 3
        assert sol.plan[0][3] == 1

    def test_split_to_middle(self):
        g, d, _, _ = setup(path_graph(3))
        mu0 = [Fraction(1, 2), Fraction(0), Fraction(1, 2)]
        mu1 = dirac(3, 1)
        sol = gb.solve_mk(d, mu0, mu1)
        assert sol.value == 1

    def test_duals_feasible_and_tight(self):
        g, d, _, _ = setup(path_graph(5))
        mu0 = [Fraction(1, 2), Fraction(1, 4), Fraction(1, 4), Fraction(0), Fraction(0)]
        mu1 = [Fraction(0), Fraction(0), Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)]
        sol = gb.solve_mk(d, mu0, mu1)
        for i in range(5):
            for j in range(5):
                slack = d.d(i, j) - sol.u[i] - sol.v[j]
                assert slack >= 0
                if sol.plan[i][j] > 0:
                    assert slack == 0
        dual_value = sum(sol.u[i] * mu0[i] for i in range(5)) + sum(
            sol.v[j] * mu1[j] for j in range(5)
        )
        assert dual_value == sol.value

    def test_matches_scipy_on_random_instances(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            n = int(rng.integers(4, 12))
            g = random_connected_graph(n, rng, weighted=bool(rng.integers(0, 2)))
            d = gb.intrinsic_distance(g)
            mu0 = rng.dirichlet(np.ones(n))
            mu1 = rng.dirichlet(np.ones(n))
            sol = gb.solve_mk(d, list(mu0), list(mu1))
            assert sol.value_float == pytest.approx(lp_oracle(d.as_array(), mu0, mu1), abs=1e-9)

    def test_float_mode(self):
        g, d, _, _ = setup(path_graph(5))
        rng = np.random.default_rng(3)
        mu0 = rng.dirichlet(np.ones(5))
        mu1 = rng.dirichlet(np.ones(5))
        sol = gb.solve_mk(d, list(mu0), list(mu1), exact=False)
        assert not sol.exact
        assert sol.value_float == pytest.approx(lp_oracle(d.as_array(), mu0, mu1), abs=1e-9)

    def test_plan_marginals(self):
        g, d, _, _ = setup(path_graph(6))
        rng = np.random.default_rng(4)
        mu0 = rng.dirichlet(np.ones(6))
        mu1 = rng.dirichlet(np.ones(6))
        sol = gb.solve_mk(d, list(mu0), list(mu1))
        plan = sol.plan_as_array()
        np.testing.assert_allclose(plan.sum(axis=1), mu0, atol=1e-12)
        np.testing.assert_allclose(plan.sum(axis=0), mu1, atol=1e-12)

    def test_degenerate_ties_terminate(self):
        # uniform marginals on complete graphs: every pivot is a tie chain;
        # the anti-cycling rule must still terminate at the exact optimum
        from gen import complete_graph

        for n in (4, 6, 9):
            g, d, _, _ = setup(complete_graph(n))
            mu = [Fraction(1, n)] * n
            sol = gb.solve_mk(d, mu, mu)
            assert sol.value == 0
            shifted = mu[1:] + mu[:1]
            sol2 = gb.solve_mk(d, mu, shifted)
            assert sol2.value == 0  # same uniform law, zero-cost diagonal exists

    def test_many_zero_marginal_entries(self):
        g, d, _, _ = setup(path_graph(8))
        mu0 = [Fraction(1, 2), 0, 0, Fraction(1, 2), 0, 0, 0, 0]
        mu1 = [0, 0, 0, 0, 0, 0, Fraction(1, 2), Fraction(1, 2)]
        sol = gb.solve_mk(d, mu0, mu1)
        # mass travels 0 -> 6/7 and 3 -> 7/6 optimally: check against scipy
        assert sol.value_float == pytest.approx(
            lp_oracle(d.as_array(), np.array(mu0, float), np.array(mu1, float)), abs=1e-9
        )
        for i in range(8):
            for j in range(8):
                assert d.d(i, j) - sol.u[i] - sol.v[j] >= 0


class TestTightSet:
    def test_diagonal_contained_for_equal_marginals(self):
        g, d, _, _ = setup(path_graph(4))
        mu = [Fraction(1, 4)] * 4
        sol = gb.solve_mk(d, mu, mu)
        mask = gb.tight_set(sol, d)
        assert all(mask[i, i] for i in range(4))

    def test_dirac_pair_in_mask(self):
        g, d, _, _ = setup(path_graph(6))
        sol = gb.solve_mk(d, dirac(6, 0), dirac(6, 3))
        mask = gb.tight_set(sol, d)
        assert mask[0, 3]

    def test_mask_contains_union_of_optimal_supports(self):
        # path 0-1-2 with mu0 = (1/2, 1/2, 0), mu1 = (0, 1/2, 1/2): every
        # a in [0, 1/2] gives an optimal plan; the mask must cover them all
        g, d, _, _ = setup(path_graph(3))
        mu0 = [Fraction(1, 2), Fraction(1, 2), Fraction(0)]
        mu1 = [Fraction(0), Fraction(1, 2), Fraction(1, 2)]
        sol = gb.solve_mk(d, mu0, mu1)
        assert sol.value == 1
        mask = gb.tight_set(sol, d)
        for (i, j) in [(0, 1), (0, 2), (1, 1), (1, 2)]:
            assert mask[i, j]
        # and it is exact: any feasible plan on the mask costs the LP value
        for a in (Fraction(0), Fraction(1, 4), Fraction(1, 2)):
            plan = np.zeros((3, 3), dtype=object)
            plan[0, 1] = Fraction(1, 2) - a
            plan[0, 2] = a
            plan[1, 1] = a
            plan[1, 2] = Fraction(1, 2) - a
            cost = sum(
                plan[i, j] * d.d(i, j) for i in range(3) for j in range(3) if plan[i, j]
            )
            assert cost == sol.value

    def test_exact_mask_excludes_slack_pairs(self):
        g, d, _, _ = setup(path_graph(4))
        sol = gb.solve_mk(d, dirac(4, 0), dirac(4, 3))
        mask = gb.tight_set(sol, d)
        # moving mass backwards cannot be optimal
        assert not mask[3, 0]


class TestMaximalFeasibleSupport:
    def test_drops_unchargeable_tight_pair(self):
        # path 0-1-2-3 with alternating marginals: (2,1) can be dual-tight
        # yet no feasible plan may charge it (0 -> 1 and col 1 are forced)
        g, d, _, _ = setup(path_graph(4))
        mu0 = [Fraction(1, 2), Fraction(0), Fraction(1, 2), Fraction(0)]
        mu1 = [Fraction(0), Fraction(1, 2), Fraction(0), Fraction(1, 2)]
        sol = gb.solve_mk(d, mu0, mu1)
        assert sol.value == 1
        mask = gb.tight_set(sol, d)
        assert mask[0, 1] and mask[2, 3] and mask[2, 1]
        reduced = gb.maximal_feasible_support(sol.plan, mask)
        assert reduced[0, 1] and reduced[2, 3]
        assert not reduced[2, 1]

    def test_keeps_full_segment_face(self):
        # the two-plan instance: every masked active pair is chargeable
        g, d, _, _ = setup(path_graph(3))
        mu0 = [Fraction(1, 2), Fraction(1, 2), Fraction(0)]
        mu1 = [Fraction(0), Fraction(1, 2), Fraction(1, 2)]
        sol = gb.solve_mk(d, mu0, mu1)
        mask = gb.tight_set(sol, d)
        reduced = gb.maximal_feasible_support(sol.plan, mask)
        for pair in [(0, 1), (0, 2), (1, 1), (1, 2)]:
            assert reduced[pair]
