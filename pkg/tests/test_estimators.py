import numpy as np
import pytest

from promplearn.basis import BasisConfig, basis_rows
from promplearn.errors import InsufficientDemos, InvalidPrior
from promplearn.estimators import (NIWPrior, blockdiag_by_dof, fit_em_map,
                                   fit_em_mle, fit_ridge, niw_map_estimate)
from promplearn.model import (Demonstration, ProMPParams,
                              marginal_log_likelihood, sample_trajectory)

from conftest import random_spd


def noiseless_dataset(basis, n, seed, weight_scale=1.0, steps=40):
    """Demos that are exactly basis-representable (noise-free)."""
    rng = np.random.default_rng(seed)
    kd = basis.weight_dim
    k, d = basis.n_basis, basis.n_dof
    demos = []
    weights = []
    for _ in range(n):
        w = weight_scale * rng.standard_normal(kd)
        phases = np.linspace(0, 1, steps)
        states = basis_rows(basis, phases) @ w.reshape(d, k).T
        demos.append(Demonstration(timestamps=phases.copy(), states=states,
                                   phases=phases))
        weights.append(w)
    return demos, np.array(weights)


def sampled_dataset(seed, n=12, k=3, d=2, steps=30):
    rng = np.random.default_rng(seed)
    basis = BasisConfig.create(k, d)
    kd = basis.weight_dim
    truth = ProMPParams(basis=basis, mu_w=rng.standard_normal(kd),
                        sigma_w=random_spd(rng, kd, 0.02),
                        sigma_y=random_spd(rng, d, 1e-4))
    stream = np.random.default_rng(seed + 1)
    return basis, [sample_trajectory(truth, steps, stream) for _ in range(n)]


class TestRidge:
    def test_needs_two_demos(self):
        basis = BasisConfig.create(1, 1)
        demos, _ = noiseless_dataset(basis, 1, seed=0)
        with pytest.raises(InsufficientDemos):
            fit_ridge(demos, basis)

    def test_scalar_shrinkage(self):
        # unit design, lambda=1, single step of y=2: w = (1+1)^-1 * 2 = 1
        from test_model import make_unchecked_demo
        basis = BasisConfig.create(1, 1)
        demo = make_unchecked_demo([0.0], [[2.0]], [0.0])
        report = fit_ridge([demo, demo], basis, lam=1.0)
        assert report.params.mu_w[0] == pytest.approx(1.0, rel=1e-14)

    def test_scalar_shrinkage_two_steps(self):
        basis = BasisConfig.create(1, 1)
        demo = Demonstration(timestamps=[0, 1], states=[[2.0], [2.0]],
                             phases=[0, 1])
        report = fit_ridge([demo, demo], basis, lam=2.0)
        # per-demo gram = 2 (two unit steps), so w = (2+2)^-1 * 4 = 1
        assert report.params.mu_w[0] == pytest.approx(1.0)

    def test_recovers_noiseless_weights(self):
        basis = BasisConfig.create(4, 2)
        demos, weights = noiseless_dataset(basis, 6, seed=3)
        report = fit_ridge(demos, basis, lam=1e-12)
        np.testing.assert_allclose(report.params.mu_w, weights.mean(axis=0),
                                   rtol=1e-6, atol=1e-9)
        assert np.all(np.abs(report.params.sigma_y) < 1e-12)

    def test_permutation_bitwise_invariant(self):
        basis, demos = sampled_dataset(17)
        a = fit_ridge(demos, basis, lam=1e-8).params
        perm = list(reversed(demos))
        b = fit_ridge(perm, basis, lam=1e-8).params
        np.testing.assert_array_equal(a.mu_w, b.mu_w)
        np.testing.assert_array_equal(a.sigma_w, b.sigma_w)
        np.testing.assert_array_equal(a.sigma_y, b.sigma_y)

    def test_covariance_denominator_is_n(self):
        basis = BasisConfig.create(1, 1)
        d1 = Demonstration(timestamps=[0, 1], states=[[1.0], [1.0]],
                           phases=[0, 1])
        d2 = Demonstration(timestamps=[0, 1], states=[[3.0], [3.0]],
                           phases=[0, 1])
        report = fit_ridge([d1, d2], basis, lam=0.0)
        # weights 1 and 3, mean 2, population variance (1+1)/2 = 1
        assert report.params.sigma_w[0, 0] == pytest.approx(1.0)


class TestEmMle:
    def test_noiseless_identifiability(self):
        basis = BasisConfig.create(3, 2)
        demos, weights = noiseless_dataset(basis, 8, seed=5)
        report = fit_em_mle(demos, basis, iterations=25)
        np.testing.assert_allclose(report.params.mu_w, weights.mean(axis=0),
                                   rtol=1e-4, atol=1e-6)
        assert np.trace(report.params.sigma_y) < 1e-6

    def test_monotone_trace_and_more_iterations_no_worse(self):
        basis, demos = sampled_dataset(23)
        one = fit_em_mle(demos, basis, iterations=1)
        five = fit_em_mle(demos, basis, iterations=5)
        assert five.log_likelihood_trace[-1] >= one.log_likelihood_trace[-1]
        diffs = np.diff(five.log_likelihood_trace)
        assert np.all(diffs >= -1e-8)

    def test_matches_direct_maximization(self):
        # small instance with an interior optimum: quasi-Newton
        # maximization of the same marginal likelihood over an
        # unconstrained parameterization
        from scipy.optimize import minimize
        basis = BasisConfig.create(2, 1)
        truth = ProMPParams(basis=basis, mu_w=[0.5, -0.3],
                            sigma_w=[[0.05, 0.01], [0.01, 0.04]],
                            sigma_y=[[0.01]])
        stream = np.random.default_rng(8)
        demos = [sample_trajectory(truth, 8, stream) for _ in range(5)]
        report = fit_em_mle(demos, basis, iterations=2000, tol=1e-14)
        ll_em = report.log_likelihood_trace[-1]

        def unpack(theta):
            mu = theta[:2]
            low = np.array([[np.exp(theta[2]), 0.0],
                            [theta[3], np.exp(theta[4])]])
            sw = low @ low.T
            sy = np.array([[np.exp(theta[5])]])
            return ProMPParams(basis=basis, mu_w=mu, sigma_w=sw, sigma_y=sy)

        def negll(theta):
            try:
                return -marginal_log_likelihood(unpack(theta), demos)
            except Exception:
                return 1e12

        p = report.params
        low = np.linalg.cholesky(p.sigma_w)
        x0 = np.array([p.mu_w[0], p.mu_w[1], np.log(low[0, 0]), low[1, 0],
                       np.log(low[1, 1]), np.log(p.sigma_y[0, 0])])
        best = minimize(negll, x0, method="L-BFGS-B").fun
        for s in range(3):
            start = x0 + 0.5 * np.random.default_rng(s).standard_normal(6)
            best = min(best, minimize(negll, start, method="L-BFGS-B").fun)
        assert ll_em == pytest.approx(-best, abs=1e-6)


class TestEmMap:
    def test_invalid_prior_rejected(self):
        with pytest.raises(InvalidPrior):
            NIWPrior(m0=np.zeros(4), k0=0.0, v0=-(4 + 2.0), s0=np.zeros((4, 4)),
                     s0_mode="explicit")
        with pytest.raises(InvalidPrior):
            NIWPrior(m0=np.zeros(4), k0=-1.0, v0=6.0)

    def test_k0_zero_mean_equals_mle_mean(self):
        # with k0=0 the blending leaves the empirical mean untouched, so
        # after one iteration (identical E-steps) the two fits' means are
        # bitwise equal; covariances already differ
        basis, demos = sampled_dataset(31)
        mle = fit_em_mle(demos, basis, iterations=1)
        prior = NIWPrior.paper_default(basis.n_basis, basis.n_dof)
        assert prior.k0 == 0.0
        mape = fit_em_map(demos, basis, iterations=1, prior=prior)
        np.testing.assert_array_equal(mape.params.mu_w, mle.params.mu_w)
        assert np.any(mape.params.sigma_w != mle.params.sigma_w)

    def test_degenerate_prior_reduction_at_formula_level(self):
        # with k0=0, v0=-(dim+2), s0=0 the blending formula collapses to
        # the empirical covariance; the prior object itself rejects those
        # values, so the reduction is checked on the raw formula
        rng = np.random.default_rng(41)
        dim, n = 4, 7
        mu_star = rng.standard_normal(dim)
        sigma_star = random_spd(rng, dim)
        mu, sigma = niw_map_estimate(mu_star, sigma_star, n,
                                     m0=np.zeros(dim), k0=0.0,
                                     v0=-(dim + 2.0), s0=np.zeros((dim, dim)))
        np.testing.assert_allclose(mu, mu_star, rtol=1e-12)
        np.testing.assert_allclose(sigma, sigma_star, rtol=1e-12)

    def test_zero_effective_count_rejected(self):
        with pytest.raises(InvalidPrior):
            niw_map_estimate(np.zeros(2), np.eye(2), 0, np.zeros(2), 0.0, 3.0,
                             np.eye(2))

    def test_monotone_log_posterior(self):
        basis, demos = sampled_dataset(47, n=15)
        report = fit_em_map(demos, basis, iterations=6)
        diffs = np.diff(report.log_likelihood_trace)
        assert np.all(diffs >= -1e-8)

    def test_blockdiag_zeroes_cross_blocks(self):
        rng = np.random.default_rng(3)
        mat = random_spd(rng, 6)
        out = blockdiag_by_dof(mat, 2)
        np.testing.assert_array_equal(out[:3, :3], mat[:3, :3])
        np.testing.assert_array_equal(out[3:, 3:], mat[3:, 3:])
        assert not np.any(out[:3, 3:])
        assert not np.any(out[3:, :3])


class TestEstimatorAgreement:
    def test_all_agree_on_noiseless_data(self):
        basis = BasisConfig.create(3, 2)
        demos, weights = noiseless_dataset(basis, 10, seed=8)
        ridge = fit_ridge(demos, basis, lam=1e-12).params.mu_w
        mle = fit_em_mle(demos, basis, iterations=30).params.mu_w
        mape = fit_em_map(demos, basis, iterations=30).params.mu_w
        scale = np.linalg.norm(ridge)
        assert np.linalg.norm(mle - ridge) / scale < 1e-6
        assert np.linalg.norm(mape - ridge) / scale < 1e-6

    def test_em_permutation_stable(self):
        basis, demos = sampled_dataset(53)
        a = fit_em_mle(demos, basis, iterations=3).params
        b = fit_em_mle(list(reversed(demos)), basis, iterations=3).params
        np.testing.assert_allclose(a.mu_w, b.mu_w, rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(a.sigma_w, b.sigma_w, rtol=1e-12,
                                   atol=1e-14)
