"""Slowing, uniformization, endpoint joints, finite-slowing bridges, sampling."""

import math
from fractions import Fraction

import numpy as np
import pytest

import graphbridge as gb
from gen import complete_graph, path_graph, setup
from oracles import taylor_expm


def random_kernel(n, rng, density=0.7):
    rates = [
        {j: float(rng.uniform(0.1, 2.0)) for j in range(n) if j != i and rng.random() < density}
        for i in range(n)
    ]
    return gb.RateKernel([r if r else {(i + 1) % n: 0.5} for i, r in enumerate(rates)])


class TestSlowKernel:
    def test_identity_at_one(self):
        g, d, kernel, _ = setup(path_graph(4))
        assert gb.slow_kernel(kernel, 1, d) is kernel

    def test_segment_rates(self):
        g, d, kernel, _ = setup(path_graph(5))
        slowed = gb.slow_kernel(kernel, 10, d)
        assert slowed.rate(2, 1) == pytest.approx(1 / 20)
        assert slowed.rate(2, 3) == pytest.approx(1 / 20)

    def test_weighted_edge(self):
        g = gb.Graph(["a", "b"], [("a", "b", 2)])
        d = gb.intrinsic_distance(g)
        kernel = gb.RateKernel([{1: 1.0}, {0: 1.0}])
        slowed = gb.slow_kernel(kernel, 10, d)
        assert slowed.rate(0, 1) == pytest.approx(1 / 100)

    def test_below_one_rejected(self):
        g, d, kernel, _ = setup(path_graph(3))
        with pytest.raises(ValueError):
            gb.slow_kernel(kernel, 0.5, d)


class TestGenerator:
    def test_rows_sum_to_zero(self):
        rng = np.random.default_rng(17)
        gen = gb.Generator(random_kernel(6, rng))
        np.testing.assert_allclose(gen.q.sum(axis=1), 0.0, atol=1e-15)
        off = gen.q[~np.eye(6, dtype=bool)]
        assert np.all(off >= 0)


class TestTransitionMatrix:
    def test_zero_duration(self):
        gen = gb.Generator(gb.RateKernel([{1: 1.0}, {0: 1.0}]))
        np.testing.assert_array_equal(gb.transition_matrix(gen, 0.0), np.eye(2))

    def test_two_state_closed_form(self):
        gen = gb.Generator(gb.RateKernel([{1: 1.0}, {0: 1.0}]))
        for t in (0.1, 0.5, 1.0):
            p = gb.transition_matrix(gen, t)
            assert p[0, 0] == pytest.approx((1 + math.exp(-2 * t)) / 2, abs=1e-14)

    def test_rows_stochastic(self):
        rng = np.random.default_rng(1)
        gen = gb.Generator(random_kernel(6, rng))
        p = gb.transition_matrix(gen, 0.7)
        assert np.all(p >= 0)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)

    def test_matches_taylor_series(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            gen = gb.Generator(random_kernel(5, rng))
            for t in (0.25, 1.0):
                p = gb.transition_matrix(gen, t)
                ref = taylor_expm(gen.q, t)
                assert np.abs(p - ref).max() < 1e-10

    def test_chapman_kolmogorov(self):
        rng = np.random.default_rng(3)
        gen = gb.Generator(random_kernel(5, rng))
        lhs = gb.transition_matrix(gen, 0.3) @ gb.transition_matrix(gen, 0.45)
        rhs = gb.transition_matrix(gen, 0.75)
        assert np.abs(lhs - rhs).max() < 1e-10

    def test_strong_slowing_keeps_relative_precision(self):
        g, d, kernel, _ = setup(path_graph(7))
        gen = gb.Generator.slowed(kernel, 1e6, d)
        p = gb.transition_matrix(gen, 1.0)
        # leading term of the far corner is the single geodesic chain weight
        expected = (1e-6) ** 6 / math.factorial(6) * 1.0 * (1 / 2) ** 5
        assert p[0, 6] == pytest.approx(expected, rel=1e-4)


class TestEndpointJoint:
    def test_row_sums_equal_measure(self):
        g, d, kernel, m = setup(path_graph(5))
        joint = gb.endpoint_joint(gb.Generator(kernel), m)
        np.testing.assert_allclose(joint.row_sums(), m.as_array(), atol=1e-12)

    def test_reversible_symmetry(self):
        g, d, kernel, m = setup(complete_graph(4))
        joint = gb.endpoint_joint(gb.Generator.slowed(kernel, 100, d), m)
        np.testing.assert_allclose(joint.table, joint.table.T, atol=1e-12)

    def test_offdiagonal_slope_matches_distance(self):
        # entry (x, y) scales like k^{-d(x,y)}: fit the log-log slope
        g, d, kernel, m = setup(path_graph(5))
        ks = [1e2, 1e3, 1e4]
        for x, y in [(0, 1), (0, 2), (1, 4)]:
            vals = [
                gb.endpoint_joint(gb.Generator.slowed(kernel, k, d), m).table[x, y]
                for k in ks
            ]
            slope = np.polyfit(np.log(ks), np.log(vals), 1)[0]
            assert slope == pytest.approx(-float(d.d(x, y)), abs=5e-3)


class TestBridgeMarginal:
    def test_endpoints_are_deltas(self):
        g, d, kernel, _ = setup(path_graph(4))
        gen = gb.Generator(kernel)
        np.testing.assert_allclose(gb.bridge_marginal(gen, 0, 3, 0.0), np.eye(4)[0])
        np.testing.assert_allclose(gb.bridge_marginal(gen, 0, 3, 1.0), np.eye(4)[3])

    def test_pinned_pair_stays_put_at_large_k(self):
        # exact 3-vertex computation: the x = y bridge parks at x up to O(1/k)
        g, d, kernel, _ = setup(path_graph(3))
        for k in (100.0, 1000.0):
            gen = gb.Generator.slowed(kernel, k, d)
            for t in (0.3, 0.5, 0.8):
                marg = gb.bridge_marginal(gen, 1, 1, t)
                assert marg[1] >= 1 - 1.0 / k

    def test_two_point_symmetry(self):
        kernel = gb.RateKernel([{1: 0.8}, {0: 0.8}])
        gen = gb.Generator(kernel)
        marg = gb.bridge_marginal(gen, 0, 1, 0.5)
        assert marg[0] == pytest.approx(marg[1], abs=1e-14)

    def test_normalized_on_grid(self):
        g, d, kernel, _ = setup(complete_graph(4))
        gen = gb.Generator.slowed(kernel, 10, d)
        for t in np.linspace(0, 1, 11):
            assert gb.bridge_marginal(gen, 0, 2, float(t)).sum() == pytest.approx(1.0, abs=1e-12)

    def test_continuous_in_time(self):
        # successive grid evaluations move by O(step * rate scale)
        g, d, kernel, _ = setup(path_graph(4))
        gen = gb.Generator.slowed(kernel, 5, d)
        ts = np.linspace(0.0, 1.0, 201)
        rows = np.array([gb.bridge_marginal(gen, 0, 3, float(t)) for t in ts])
        steps = np.abs(np.diff(rows, axis=0)).max(axis=1)
        assert steps.max() < 0.1


class TestSamplePath:
    def test_zero_rate_kernel_constant(self):
        kernel = gb.RateKernel([{}, {}])
        ps = gb.sample_path(kernel, 0, seed=5)
        assert ps.path.states == (0,)

    def test_seed_determinism(self):
        g, d, kernel, _ = setup(path_graph(5))
        p1 = gb.sample_path(kernel, 2, seed=123).path
        p2 = gb.sample_path(kernel, 2, seed=123).path
        assert p1.states == p2.states
        assert p1.jumps == p2.jumps

    def test_mean_jump_count(self):
        # Monte Carlo versus the exact expectation from transition matrices
        g, d, kernel, _ = setup(path_graph(4))
        gen = gb.Generator(kernel)
        rng = np.random.default_rng(7)
        n_samples = 20000
        counts = np.array(
            [gb.sample_path(kernel, 1, rng=rng).path.jump_count for _ in range(n_samples)]
        )
        # E[N] = int_0^1 sum_z P(X_t = z) J_z(X) dt, by fine trapezoid quadrature
        ts = np.linspace(0, 1, 401)
        tot = np.array([float(kernel.total_rate(z)) for z in range(g.n)])
        vals = [gb.transition_matrix(gen, float(t))[1] @ tot for t in ts]
        expected = np.trapezoid(vals, ts)
        se = counts.std() / math.sqrt(n_samples)
        assert abs(counts.mean() - expected) < 3 * se


class TestGirsanov:
    def test_k_one_is_zero(self):
        g, d, kernel, _ = setup(path_graph(4))
        path = gb.DiscretePath(g, 0, [(0.3, 1), (0.6, 2)])
        assert gb.girsanov_log_density(path, kernel, 1, d) == 0.0

    def test_constant_path_value(self):
        g, d, kernel, _ = setup(path_graph(5))
        k = 10.0
        path = gb.DiscretePath(g, 2)
        expected = sum(
            float(r) * (1 - k ** (-float(d.d(2, w)))) for w, r in kernel.rates[2].items()
        )
        assert gb.girsanov_log_density(path, kernel, k, d) == pytest.approx(expected)

    def test_zero_rate_jump_signals_minus_inf(self):
        g, d, _, _ = setup(path_graph(3))
        kernel = gb.RateKernel([{1: 1.0}, {0: 1.0}, {1: 1.0}])  # no rate 1 -> 2
        path = gb.DiscretePath(g, 1, [(0.5, 2)])
        assert gb.girsanov_log_density(path, kernel, 10, d) == -math.inf

    def test_density_mean_is_one(self):
        # E over unslowed paths of the slowed/unslowed density per unit initial mass
        g, d, kernel, m = setup(path_graph(4))
        rng = np.random.default_rng(99)
        probs = m.as_array() / float(m.total)
        k = 10.0
        n_samples = 20000
        vals = np.empty(n_samples)
        for i in range(n_samples):
            x0 = int(rng.choice(g.n, p=probs))
            ps = gb.sample_path(kernel, x0, rng=rng)
            vals[i] = math.exp(gb.girsanov_log_density(ps, kernel, k, d))
        se = vals.std() / math.sqrt(n_samples)
        assert abs(vals.mean() - 1.0) < 3 * se


class TestSampledBridgeLaw:
    def test_conditioned_samples_match_bridge_marginal(self):
        # rejection-conditioned empirical law at t = 1/2 vs the exact bridge
        g, d, kernel, _ = setup(path_graph(3))
        k = 3.0
        slowed = gb.slow_kernel(kernel, k, d)
        gen = gb.Generator.slowed(kernel, k, d)
        rng = np.random.default_rng(21)
        counts = np.zeros(g.n)
        accepted = 0
        for _ in range(40000):
            ps = gb.sample_path(slowed, 0, rng=rng)
            if ps.path.end == 2:
                accepted += 1
                counts[ps.path.state_at(0.5)] += 1
        assert accepted > 200
        emp = counts / accepted
        exact = gb.bridge_marginal(gen, 0, 2, 0.5)
        assert gb.total_variation(emp, exact) < 4.0 / math.sqrt(accepted)
