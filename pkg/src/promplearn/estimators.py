"""Batch training baselines: ridge regression and the two EM variants.

All three consume a list of demonstrations and a basis layout and emit a
BatchFitReport. The EM fits treat the per-demo weight vectors as hidden
variables; the MAP variant regularizes the M-step with a
normal-inverse-Wishart prior.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import basis_rows
from .errors import (ConfigError, InsufficientDemos, InvalidPrior,
                     SingularCovariance)
from .linalg import spd_inverse, spd_logdet, symmetrize
from .model import ProMPParams, marginal_log_likelihood, weight_posterior


@dataclass(eq=False)
class NIWPrior:
    """Normal-inverse-Wishart hyperparameters for the MAP M-step.

    With ``s0_mode="blockdiag_of_empirical"`` the scale matrix is re-derived
    at every M-step as (v0 + KD + 1) * blockdiag of the current empirical
    weight covariance, zeroing the cross-DOF blocks; ``s0`` is then ignored.
    """

    m0: np.ndarray
    k0: float
    v0: float
    s0: np.ndarray | None = None
    s0_mode: str = "blockdiag_of_empirical"

    def __post_init__(self):
        self.m0 = np.asarray(self.m0, dtype=float).reshape(-1)
        dim = self.m0.size
        if self.k0 < 0:
            raise InvalidPrior("k0 must be non-negative")
        if self.v0 <= dim - 1:
            raise InvalidPrior(f"v0 must exceed dim-1 = {dim - 1}")
        if self.s0_mode not in ("explicit", "blockdiag_of_empirical"):
            raise InvalidPrior(f"unknown s0_mode {self.s0_mode!r}")
        if self.s0_mode == "explicit":
            if self.s0 is None:
                raise InvalidPrior("explicit s0_mode requires an s0 matrix")
            self.s0 = np.asarray(self.s0, dtype=float)
            if self.s0.shape != (dim, dim):
                raise InvalidPrior("s0 must be square of the weight dimension")
            if float(np.max(np.abs(self.s0 - self.s0.T))) > 1e-9 * max(
                    1.0, float(np.max(np.abs(self.s0)))):
                raise InvalidPrior("s0 must be symmetric")
            if float(np.linalg.eigvalsh(symmetrize(self.s0)).min()) < -1e-10 * max(
                    1.0, float(np.max(np.abs(self.s0)))):
                raise InvalidPrior("s0 must be positive semi-definite")

    @classmethod
    def paper_default(cls, n_basis, n_dof):
        """m0 = 0, k0 = 0, v0 = KD + 1, block-diagonal empirical scale."""
        kd = n_basis * n_dof
        return cls(m0=np.zeros(kd), k0=0.0, v0=float(kd + 1),
                   s0_mode="blockdiag_of_empirical")


@dataclass(eq=False)
class BatchFitReport:
    params: ProMPParams
    iterations: int
    log_likelihood_trace: list = field(default_factory=list)


def blockdiag_by_dof(mat, n_dof):
    """Zero every cross-DOF block of a (K*D, K*D) matrix."""
    mat = np.asarray(mat, dtype=float)
    kd = mat.shape[0]
    k = kd // n_dof
    out = np.zeros_like(mat)
    for d in range(n_dof):
        sl = slice(d * k, (d + 1) * k)
        out[sl, sl] = mat[sl, sl]
    return out


def niw_blend_mean(mu_star, n, m0, k0):
    """(k0 m0 + n mu*) / (n + k0); exact pass-through when k0 = 0."""
    mu_star = np.asarray(mu_star, dtype=float)
    if n + k0 <= 0:
        raise InvalidPrior("k0 + n must be positive")
    if k0 == 0.0:
        return mu_star.copy()
    return (k0 * np.asarray(m0, dtype=float) + n * mu_star) / (n + k0)


def niw_map_estimate(mu_star, sigma_star, n, m0, k0, v0, s0):
    """Blend empirical mean/covariance with the NIW hyperparameters.

    mu = (k0 m0 + n mu*) / (n + k0)
    Sigma = (s0 + n Sigma* + k0 n/(k0+n) (mu*-m0)(mu*-m0)^T)
            / (n + v0 + dim + 2)
    """
    mu_star = np.asarray(mu_star, dtype=float)
    dim = mu_star.size
    mu = niw_blend_mean(mu_star, n, m0, k0)
    if k0 == 0.0:
        scatter = 0.0
    else:
        dev = mu_star - m0
        scatter = (k0 * n / (k0 + n)) * np.outer(dev, dev)
    sigma = (np.asarray(s0, dtype=float) + n * np.asarray(sigma_star, dtype=float)
             + scatter) / (n + v0 + dim + 2.0)
    return mu, symmetrize(sigma)


def _exact_mean(stack):
    """Order-independent mean over axis 0 via exact summation."""
    stack = np.asarray(stack, dtype=float)
    flat = stack.reshape(stack.shape[0], -1)
    sums = np.array([math.fsum(flat[:, j]) for j in range(flat.shape[1])])
    return (sums / stack.shape[0]).reshape(stack.shape[1:])


def _stacked_rows(cfg, demo):
    return basis_rows(cfg, demo.phases)


def fit_ridge(demos, cfg, lam=1e-12):
    """Per-demo ridge weights, then sample moments across demos.

    Each demo's weights solve the stacked normal equations with ridge
    parameter ``lam`` on the weight-space identity; mu_w / Sigma_w are the
    sample mean / covariance (denominator N) of those weights and Sigma_y
    pools the residual outer products over all time steps. Reductions use
    exact summation, so results are independent of demo order.
    """
    if len(demos) < 2:
        raise InsufficientDemos("ridge fit needs >= 2 demonstrations")
    k, d = cfg.n_basis, cfg.n_dof
    weights = []
    residual_sums = []
    total_steps = 0
    for demo in demos:
        rows = _stacked_rows(cfg, demo)
        gram = symmetrize(rows.T @ rows + lam * np.eye(k))
        try:
            np.linalg.cholesky(gram)
        except np.linalg.LinAlgError:
            raise SingularCovariance(
                "ridge normal equations are singular; raise lambda")
        coef = np.linalg.solve(gram, rows.T @ demo.states)  # (K, D)
        weights.append(coef.T.ravel())
        resid = demo.states - rows @ coef
        residual_sums.append(resid.T @ resid)
        total_steps += demo.n_steps
    weights = np.array(weights)
    mu_w = _exact_mean(weights)
    dev = weights - mu_w
    sigma_w = symmetrize(_exact_mean(np.einsum("ni,nj->nij", dev, dev)))
    sigma_y = symmetrize(_exact_mean(np.array(residual_sums))
                         * (len(demos) / total_steps))
    params = ProMPParams(basis=cfg, mu_w=mu_w, sigma_w=sigma_w,
                         sigma_y=sigma_y)
    return BatchFitReport(params=params, iterations=1)


def _mle_m_step(cfg, demos, posteriors):
    """Closed-form MLE update from per-demo posteriors (denominator N)."""
    n = len(demos)
    k, d = cfg.n_basis, cfg.n_dof
    means = np.array([p.mean for p in posteriors])
    mu = means.mean(axis=0)
    dev = means - mu
    sigma = sum(p.cov for p in posteriors) + dev.T @ dev
    sigma = symmetrize(sigma / n)
    noise = np.zeros((d, d))
    total_steps = 0
    for demo, post in zip(demos, posteriors):
        rows = _stacked_rows(cfg, demo)
        resid = demo.states - rows @ post.mean.reshape(d, k).T
        gram = rows.T @ rows
        cov4 = post.cov.reshape(d, k, d, k)
        noise += resid.T @ resid + np.einsum("akbl,kl->ab", cov4, gram)
        total_steps += demo.n_steps
    noise = symmetrize(noise / total_steps)
    return mu, sigma, noise, means


def _run_em(demos, cfg, iterations, *, prior=None, init=None, tol=None,
            update_sigma_y=True, s0_freeze=False):
    if len(demos) < 2:
        raise InsufficientDemos("EM fit needs >= 2 demonstrations")
    if iterations < 1:
        raise ConfigError("iterations must be >= 1")
    params = init if init is not None else ProMPParams.default_init(cfg)
    n = len(demos)
    trace = []
    frozen_s0 = None
    for _ in range(iterations):
        posteriors = [weight_posterior(params, demo) for demo in demos]
        mu_star, sigma_star, noise, _ = _mle_m_step(cfg, demos, posteriors)
        if prior is None:
            mu, sigma = mu_star, sigma_star
            s0_used = None
        else:
            if prior.s0_mode == "explicit":
                s0_used = prior.s0
            elif frozen_s0 is not None:
                s0_used = frozen_s0
            else:
                s0_used = (prior.v0 + mu_star.size + 1.0) * blockdiag_by_dof(
                    sigma_star, cfg.n_dof)
                if s0_freeze:
                    frozen_s0 = s0_used
            mu, sigma = niw_map_estimate(mu_star, sigma_star, n,
                                         prior.m0, prior.k0, prior.v0, s0_used)
        sigma_y = noise if update_sigma_y else params.sigma_y
        params = ProMPParams(basis=cfg, mu_w=mu, sigma_w=sigma,
                             sigma_y=sigma_y)
        objective = marginal_log_likelihood(params, demos)
        if prior is not None:
            objective += log_niw_density(params.mu_w, params.sigma_w,
                                         prior.m0, prior.k0, prior.v0, s0_used)
        trace.append(objective)
        if tol is not None and len(trace) >= 2:
            prev, cur = trace[-2], trace[-1]
            if abs(cur - prev) <= tol * max(1.0, abs(prev)):
                break
    return BatchFitReport(params=params, iterations=len(trace),
                          log_likelihood_trace=trace)


def log_niw_density(mu, sigma, m0, k0, v0, s0):
    """Parameter-dependent part of the log NIW density (constants dropped).

    Valid for k0 = 0, where the mean part of the prior is flat.
    """
    dim = np.asarray(mu).size
    logdet = spd_logdet(sigma)
    sig_inv = spd_inverse(sigma)
    val = -0.5 * (v0 + dim + 2.0) * logdet
    val -= 0.5 * float(np.sum(np.asarray(s0) * sig_inv))
    if k0 > 0:
        dev = np.asarray(mu) - np.asarray(m0)
        val -= 0.5 * k0 * float(dev @ sig_inv @ dev)
    return val


def fit_em_mle(demos, cfg, iterations=5, *, init=None, tol=None,
               update_sigma_y=True):
    """Maximum-likelihood batch EM over the marginal of the stacked model."""
    return _run_em(demos, cfg, iterations, prior=None, init=init, tol=tol,
                   update_sigma_y=update_sigma_y)


def fit_em_map(demos, cfg, iterations=5, prior=None, *, init=None, tol=None,
               update_sigma_y=True, s0_freeze=False):
    """Batch EM with the NIW prior applied in every M-step."""
    if prior is None:
        prior = NIWPrior.paper_default(cfg.n_basis, cfg.n_dof)
    if prior.m0.size != cfg.weight_dim:
        raise InvalidPrior("prior dimension does not match the basis layout")
    return _run_em(demos, cfg, iterations, prior=prior, init=init, tol=tol,
                   update_sigma_y=update_sigma_y, s0_freeze=s0_freeze)
