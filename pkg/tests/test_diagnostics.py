import math

import numpy as np
import pytest
from scipy import integrate, stats

from hmc_lab import diagnostics as diag
from hmc_lab import dynamics as dyn
from hmc_lab import potentials as pots
from hmc_lab.diagnostics import GaussianSpec
from hmc_lab.dynamics import Integrator, PhasePoint, Scheme


def quantile_w2_1d(a_sd, b_sd, shift=0.0):
    # W2^2 = int_0^1 (F^-1(u) - G^-1(u))^2 du, integrated numerically
    def integrand(u):
        return (a_sd * stats.norm.ppf(u) - b_sd * stats.norm.ppf(u) - shift) ** 2
    val, _ = integrate.quad(integrand, 0, 1, limit=200)
    return math.sqrt(val)


class TestEmpiricalMoments:
    def test_two_points(self):
        g = diag.empirical_moments([[0.0], [2.0]])
        np.testing.assert_array_equal(g.mean, [1.0])
        np.testing.assert_array_equal(g.covariance, [[2.0]])

    def test_identical_rows_have_zero_covariance(self):
        g = diag.empirical_moments(np.tile([1.0, -3.0], (7, 1)))
        np.testing.assert_array_equal(g.covariance, np.zeros((2, 2)))

    def test_standard_normal(self):
        g = diag.empirical_moments(np.random.default_rng(2).standard_normal(100_000))
        assert abs(g.mean[0]) <= 4 / math.sqrt(1e5)
        assert 0.97 <= g.covariance[0, 0] <= 1.03

    def test_one_sample_is_insufficient(self):
        with pytest.raises(diag.InsufficientDataError):
            diag.empirical_moments([[1.0, 2.0]])


class TestGaussianSpec:
    def test_rejects_asymmetric(self):
        with pytest.raises(pots.InvalidInputError):
            GaussianSpec([0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]])

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(pots.InvalidInputError):
            GaussianSpec([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])

    def test_rejects_shape_mismatch(self):
        with pytest.raises(pots.InvalidInputError):
            GaussianSpec([0.0], [1.0, 1.0])


class TestW2Gaussian:
    def test_identical(self):
        a = GaussianSpec([1.0, 2.0], [[2.0, 0.3], [0.3, 1.0]])
        assert diag.w2_gaussian(a, a) == pytest.approx(0.0, abs=1e-7)

    def test_translation(self):
        assert diag.w2_gaussian(GaussianSpec([0.0], [1.0]),
                                GaussianSpec([3.0], [1.0])) == 3.0

    def test_scale_against_quantile_integral(self):
        w = diag.w2_gaussian(GaussianSpec([0.0], [1.0]), GaussianSpec([0.0], [4.0]))
        assert w == pytest.approx(1.0, abs=1e-12)
        assert w == pytest.approx(quantile_w2_1d(1.0, 2.0), abs=1e-6)

    def test_full_matches_diagonal_path(self):
        a = GaussianSpec([0.5, -1.0], [1.0, 3.0])
        b = GaussianSpec([0.0, 0.0], [2.0, 0.5])
        full_a = GaussianSpec(a.mean, np.diag(a.covariance))
        full_b = GaussianSpec(b.mean, np.diag(b.covariance))
        assert diag.w2_gaussian(full_a, full_b) == pytest.approx(
            diag.w2_gaussian(a, b), rel=1e-12)

    def test_rotation_invariance(self):
        q = pots.random_rotation(3, 5)
        cov_a = np.diag([1.0, 2.0, 0.5])
        cov_b = np.diag([3.0, 1.0, 1.0])
        a, b = GaussianSpec(np.ones(3), cov_a), GaussianSpec(np.zeros(3), cov_b)
        ra = GaussianSpec(q @ np.ones(3), q @ cov_a @ q.T)
        rb = GaussianSpec(np.zeros(3), q @ cov_b @ q.T)
        assert diag.w2_gaussian(ra, rb) == pytest.approx(
            diag.w2_gaussian(a, b), rel=1e-10)

    def test_against_monte_carlo_coupling_bound(self):
        # any coupling gives an upper bound; the independent one is loose
        a = GaussianSpec([0.0, 0.0], [[1.0, 0.8], [0.8, 1.0]])
        b = GaussianSpec([1.0, 0.0], [[2.0, 0.0], [0.0, 0.5]])
        w = diag.w2_gaussian(a, b)
        rng = np.random.default_rng(0)
        z = rng.standard_normal((200_000, 2))
        xa = a.mean + z @ np.linalg.cholesky(a.covariance).T
        xb = b.mean + z @ np.linalg.cholesky(b.covariance).T
        assert w <= math.sqrt(np.mean(np.sum((xa - xb) ** 2, axis=1))) + 0.01

    def test_metric_properties(self):
        rng = np.random.default_rng(1)
        specs = []
        for _ in range(6):
            l = rng.standard_normal((3, 3))
            specs.append(GaussianSpec(rng.standard_normal(3), l @ l.T + 0.1 * np.eye(3)))
        for a in specs:
            for b in specs:
                ab = diag.w2_gaussian(a, b)
                assert ab == diag.w2_gaussian(b, a) or ab == pytest.approx(
                    diag.w2_gaussian(b, a), rel=1e-12)
                if a is not b:
                    assert ab > 0
                for c in specs:
                    assert ab <= diag.w2_gaussian(a, c) + diag.w2_gaussian(c, b) + 1e-12

    def test_zero_covariance_is_point_mass(self):
        w = diag.w2_gaussian(GaussianSpec([0.0, 0.0], np.zeros((2, 2))),
                             GaussianSpec.standard(2))
        assert w == pytest.approx(math.sqrt(2.0), abs=1e-6)

    def test_dimension_mismatch(self):
        with pytest.raises(pots.InvalidInputError):
            diag.w2_gaussian(GaussianSpec.standard(1), GaussianSpec.standard(2))


class TestW2Empirical1d:
    def test_identical(self):
        assert diag.w2_empirical_1d([3.0, 1.0, 2.0], [1.0, 2.0, 3.0]) == 0.0

    def test_unit_shift(self):
        assert diag.w2_empirical_1d([0.0, 0.0], [1.0, 1.0]) == 1.0

    def test_size_mismatch(self):
        with pytest.raises(pots.InvalidInputError):
            diag.w2_empirical_1d([0.0], [1.0, 2.0])

    @pytest.mark.parametrize("n,tol", [(1_000, 0.1), (100_000, 0.02)])
    def test_converges_to_gaussian_value(self, n, tol):
        rng = np.random.default_rng(n)
        xs, ys = rng.standard_normal(n), 2.0 * rng.standard_normal(n)
        exact = diag.w2_gaussian(GaussianSpec([0.0], [1.0]), GaussianSpec([0.0], [4.0]))
        assert abs(diag.w2_empirical_1d(xs, ys) - exact) <= tol

    def test_matches_fitted_specs(self):
        rng = np.random.default_rng(3)
        xs, ys = rng.standard_normal(50_000), 2.0 * rng.standard_normal(50_000)
        fitted = diag.w2_gaussian(diag.empirical_moments(xs), diag.empirical_moments(ys))
        assert diag.w2_empirical_1d(xs, ys) == pytest.approx(1.0, abs=0.05)
        assert fitted == pytest.approx(1.0, abs=0.05)


class TestEnergyDrift:
    @pytest.mark.parametrize("T", [0.1, 1.0, 10.0])
    @pytest.mark.parametrize("p", [pots.spherical(3), pots.diagonal([0.5, 1.0, 2.0]),
                                   pots.dense([0.3, 1.0, 5.0], seed=2)],
                             ids=["spherical", "diagonal", "dense"])
    def test_exact_flow_conserves(self, p, T):
        z0 = PhasePoint(np.array([1.0, -0.5, 0.3]), np.array([0.2, 0.7, -1.0]))
        assert diag.energy_drift(p, Integrator(Scheme.EXACT), z0, T) <= 1e-9

    def test_leapfrog_halving_ratio(self):
        p = pots.diagonal([0.5, 1.0, 2.0])
        z0 = PhasePoint(np.array([1.0, -0.5, 0.3]), np.array([0.2, 0.7, -1.0]))
        d1 = diag.energy_drift(p, Integrator(Scheme.LEAPFROG, 0.1), z0, 2.0)
        d2 = diag.energy_drift(p, Integrator(Scheme.LEAPFROG, 0.05), z0, 2.0)
        assert 3.5 <= d1 / d2 <= 4.5

    def test_rest_point(self):
        p = pots.perturbed([1.0, 2.0], 1.0)
        z0 = PhasePoint(pots.minimizer(p), np.zeros(2))
        assert diag.energy_drift(p, Integrator(Scheme.LEAPFROG, 0.1), z0, 1.0) == 0.0

    def test_batched_takes_worst_row(self):
        p = pots.spherical(1)
        rows = PhasePoint(np.array([[1.0], [3.0]]), np.zeros((2, 1)))
        integ = Integrator(Scheme.LEAPFROG, 0.2)
        worst = max(diag.energy_drift(p, integ, PhasePoint(rows.x[i], rows.v[i]), 1.0)
                    for i in range(2))
        assert diag.energy_drift(p, integ, rows, 1.0) == worst


class TestOrderEstimate:
    ETAS = np.array([0.2, 0.1, 0.05, 0.025])

    @pytest.mark.parametrize("order", [2, 3])
    def test_synthetic(self, order):
        pairs = np.column_stack([self.ETAS, self.ETAS ** order])
        assert diag.order_estimate(pairs) == pytest.approx(order, abs=1e-10)

    @pytest.mark.parametrize("scheme", [Scheme.LEAPFROG, Scheme.EULER2])
    def test_measured_slope(self, scheme):
        # a circular orbit would cancel the second-order term, so start at rest
        p = pots.spherical(2)
        z0 = PhasePoint(np.array([1.0, 0.5]), np.zeros(2))
        pairs = [(eta, diag.energy_drift(p, Integrator(scheme, eta), z0, 1.0))
                 for eta in self.ETAS]
        assert 1.8 <= diag.order_estimate(pairs) <= 2.2

    @pytest.mark.parametrize("pairs", [
        [(0.1, 1.0), (0.2, 2.0)],
        [(0.1, 1.0), (0.1, 2.0), (0.2, 3.0)],
        [(0.1, 1.0), (0.2, 0.0), (0.3, 3.0)],
    ])
    def test_rejects_degenerate_input(self, pairs):
        with pytest.raises(pots.InvalidInputError):
            diag.order_estimate(pairs)


def test_w2_to_target_exact_samples_are_close():
    p = pots.diagonal([0.5, 2.0])
    x = pots.sample_target(p, np.random.default_rng(4), size=100_000)
    target = GaussianSpec(np.zeros(2), pots.covariance(p))
    assert diag.w2_to_target(x, target) <= 0.01


def test_trajectory_endpoint_is_integrate():
    p = pots.diagonal([0.5, 2.0])
    z0 = PhasePoint(np.array([1.0, 1.0]), np.array([0.0, 0.5]))
    integ = Integrator(Scheme.LEAPFROG, 0.1)
    last = list(dyn.trajectory(p, integ, z0, 1.0))[-1]
    np.testing.assert_allclose(last.x, dyn.integrate(p, integ, z0, 1.0).x, rtol=1e-14)
